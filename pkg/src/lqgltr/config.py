"""Project configuration: one YAML file, versioned schema, strict keys.

The defaults reproduce the paper-matching pipeline with no edits: the
high-gain 15 Hz sensitivity target for synthesis, rho sweep down to 1e-5
with rho = 1e-4 selected, order-12 reduction, 2 kHz discretization, and the
documented multisine-plus-noise disturbance profile.
"""

import io
from dataclasses import dataclass, field, fields

import numpy as np
import yaml

from . import design, gimbal, simident
from .errors import ConfigError
from .systems import default_grid

TWO_PI = 2.0 * np.pi

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class AxisConfig:
    Ka: float = 2.0
    Kt: float = 2.18
    wg: float = 1646.0
    xi: float = 0.8
    d: float = 0.0045
    J: float = 0.1736
    Bv: float = 1.15

    def params(self):
        return gimbal.GimbalAxisParams(Ka=self.Ka, Kt=self.Kt, wg=self.wg,
                                       xi=self.xi, d=self.d, J=self.J,
                                       Bv=self.Bv)


@dataclass(frozen=True)
class WeightConfig:
    Ms: float = 3.162
    eps: float = 0.01
    xi: float = 0.5
    wb_hz: float = 10.0

    def params(self):
        return design.SensitivityWeightParams(Ms=self.Ms, eps=self.eps,
                                              xi=self.xi,
                                              wb=TWO_PI * self.wb_hz)


@dataclass(frozen=True)
class NoiseConfig:
    theta_cov: float = 1.0
    process_scale: float = 1.0


@dataclass(frozen=True)
class DesignConfig:
    rhos: tuple = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5)
    selected_rho: float = 1e-4
    recovery_band_hz: tuple = (0.1, 100.0)


@dataclass(frozen=True)
class GridConfig:
    f_min_hz: float = 0.1
    f_max_hz: float = 1000.0
    points_per_decade: int = 400

    def grid(self):
        return default_grid(self.f_min_hz, self.f_max_hz,
                            self.points_per_decade)


@dataclass(frozen=True)
class ReductionConfig:
    target_order: int = 12
    sample_period: float = 5e-4


@dataclass(frozen=True)
class DisturbanceConfig:
    tones_hz: tuple = simident.DEFAULT_TONES_HZ
    amplitudes: tuple = simident.DEFAULT_TONE_AMPLITUDES
    noise_band_hz: tuple = simident.DEFAULT_NOISE_BAND_HZ
    noise_power_fraction: float = simident.DEFAULT_NOISE_POWER_FRACTION
    seed: int = 2026

    def profile(self, n_axes=2):
        ms = simident.multisine_profile(self.tones_hz, self.amplitudes,
                                        n_axes=n_axes, seed=self.seed)
        power = ms.total_power(0) * self.noise_power_fraction
        if power <= 0.0:
            return ms
        noise = simident.band_limited_noise_profile(
            self.noise_band_hz, power, n_axes=n_axes, seed=self.seed,
            offset_hz=0.05)
        tables = tuple(
            np.vstack([ms.tone_table(i), noise.tone_table(i)])
            for i in range(n_axes))
        return simident.DisturbanceProfile(kind="multisine", seed=self.seed,
                                           tones=tables)


@dataclass(frozen=True)
class SimulationConfig:
    duration: float = 25.0
    settle: float = 5.0


@dataclass(frozen=True)
class IdentificationConfig:
    excitation_amplitude: float = 1.0
    excitation_hz: float = 4.0
    duration: float = 30.0
    meas_noise_std: float = 1e-3
    init_scale: float = 1.5
    dt: float = simident.DEFAULT_EKF_DT
    seed: int = 11


@dataclass(frozen=True)
class SweptSineConfig:
    f_min_hz: float = 1.0
    f_max_hz: float = 100.0
    points: int = 13
    amplitude: float = 0.02
    cycles: int = 20
    settle_min_s: float = 1.0

    def grid_hz(self):
        return np.logspace(np.log10(self.f_min_hz), np.log10(self.f_max_hz),
                           self.points)


@dataclass(frozen=True)
class PerturbationConfig:
    count: int = 20
    seed: int = 7


@dataclass(frozen=True)
class GimbalConfig:
    azimuth: AxisConfig = field(default_factory=AxisConfig)
    elevation: AxisConfig = field(
        default_factory=lambda: AxisConfig(J=0.063, Bv=0.61))


@dataclass(frozen=True)
class ProjectConfig:
    schema_version: int = SCHEMA_VERSION
    gimbal: GimbalConfig = field(default_factory=GimbalConfig)
    design1_weight: WeightConfig = field(default_factory=WeightConfig)
    design2_weight: WeightConfig = field(
        default_factory=lambda: WeightConfig(eps=0.004, wb_hz=15.0))
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    design: DesignConfig = field(default_factory=DesignConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    reduction: ReductionConfig = field(default_factory=ReductionConfig)
    disturbance: DisturbanceConfig = field(default_factory=DisturbanceConfig)
    simulation: SimulationConfig = field(default_factory=SimulationConfig)
    identification: IdentificationConfig = field(
        default_factory=IdentificationConfig)
    swept_sine: SweptSineConfig = field(default_factory=SweptSineConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    workers: int = 1

    # -- model builders -----------------------------------------------------

    def plant(self):
        return gimbal.build_mimo_model(self.gimbal.azimuth.params(),
                                       self.gimbal.elevation.params())

    def weight_model(self, which="design2"):
        cfg = self.design2_weight if which == "design2" else self.design1_weight
        return design.sensitivity_weight_model(cfg.params(), channels=2)

    def noise_intensities(self, aug):
        q = aug.gamma.shape[1]
        return design.NoiseIntensities(
            W=self.noise.process_scale * np.eye(q), V=np.eye(2),
            theta_cov=self.noise.theta_cov)


_NESTED = {
    "gimbal": GimbalConfig,
    "design1_weight": WeightConfig,
    "design2_weight": WeightConfig,
    "noise": NoiseConfig,
    "design": DesignConfig,
    "grid": GridConfig,
    "reduction": ReductionConfig,
    "disturbance": DisturbanceConfig,
    "simulation": SimulationConfig,
    "identification": IdentificationConfig,
    "swept_sine": SweptSineConfig,
    "perturbation": PerturbationConfig,
}
_AXIS_FIELDS = {"azimuth": AxisConfig, "elevation": AxisConfig}


def _build(cls, data, path):
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(data).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for f in fields(cls):
        if f.name not in data:
            continue
        val = data[f.name]
        sub = _NESTED.get(f.name) if cls is ProjectConfig else \
            _AXIS_FIELDS.get(f.name) if cls is GimbalConfig else None
        if sub is not None:
            kwargs[f.name] = _build(sub, val, f"{path}.{f.name}")
        elif isinstance(val, list):
            kwargs[f.name] = tuple(val)
        else:
            kwargs[f.name] = val
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def config_from_dict(data):
    cfg = _build(ProjectConfig, data, "config")
    if cfg.schema_version != SCHEMA_VERSION:
        raise ConfigError(
            f"schema_version {cfg.schema_version} unsupported "
            f"(expected {SCHEMA_VERSION})")
    if cfg.workers < 1:
        raise ConfigError("workers must be >= 1")
    if not cfg.design.rhos or any(r <= 0 for r in cfg.design.rhos):
        raise ConfigError("design.rhos must be positive")
    return cfg


def load_config(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"invalid YAML: {exc}") from exc
    if data is None:
        data = {}
    return config_from_dict(data)


def config_to_dict(cfg):
    def undata(obj):
        if hasattr(obj, "__dataclass_fields__"):
            return {f.name: undata(getattr(obj, f.name))
                    for f in fields(obj)}
        if isinstance(obj, tuple):
            return [undata(v) for v in obj]
        return obj
    return undata(cfg)


def canonical_yaml(cfg):
    """Stable text rendering used for hashing and for writing defaults."""
    buf = io.StringIO()
    yaml.safe_dump(config_to_dict(cfg), buf, sort_keys=True,
                   default_flow_style=False)
    return buf.getvalue()


def write_config(path, cfg=None):
    cfg = cfg or ProjectConfig()
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_yaml(cfg))
