"""Two-axis gimbal rate-loop model, uncertainty bounds, and perturbed sets.

One axis is the series of a motor/inertia stage, the rate-gyro dynamics, and
a second-order Pade all-pass standing in for the gyro transport delay:

    G(s) = Ka*Kt / (J s + Bv) * wg^2 / (s^2 + 2 xi wg s + wg^2)
           * ((d^2/12) s^2 - (d/2) s + 1) / ((d^2/12) s^2 + (d/2) s + 1)

The two axes decouple (mass-balanced gimbal), so the 2x2 plant is block
diagonal.  Model uncertainty is expressed as output-multiplicative:
G_p = (I + Delta * W1) G with ||Delta||_inf <= 1.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidParameters
from .systems import (
    RationalTransferFunction,
    StateSpaceModel,
    add,
    balance_states,
    connect_diagonal,
    connect_series,
    hinf_norm,
    tf_to_ss,
)


@dataclass(frozen=True)
class GimbalAxisParams:
    """Physical constants of one gimbal axis.

    Ka: current amplifier gain [A/A], Kt: motor torque constant [N m/A],
    wg: gyro natural frequency [rad/s], xi: gyro damping, d: gyro delay [s],
    J: inertia [kg m^2], Bv: viscous friction [N m/(rad/s)].
    """

    Ka: float
    Kt: float
    wg: float
    xi: float
    d: float
    J: float
    Bv: float

    def __post_init__(self):
        for name in ("Ka", "Kt", "wg", "d", "J", "Bv"):
            if not (getattr(self, name) > 0.0):
                raise InvalidParameters(f"{name} must be > 0")
        if not (0.0 < self.xi <= 1.0):
            raise InvalidParameters(f"xi must be in (0, 1], got {self.xi}")


# Datasheet constants plus the identified inertia / friction values.
AZIMUTH_PARAMS = GimbalAxisParams(Ka=2.0, Kt=2.18, wg=1646.0, xi=0.8,
                                  d=0.0045, J=0.1736, Bv=1.15)
ELEVATION_PARAMS = GimbalAxisParams(Ka=2.0, Kt=2.18, wg=1646.0, xi=0.8,
                                    d=0.0045, J=0.063, Bv=0.61)


def motor_tf(p):
    """Ka*Kt / (J s + Bv)."""
    return RationalTransferFunction([p.Ka * p.Kt], [p.J, p.Bv])


def gyro_tf(p):
    """wg^2 / (s^2 + 2 xi wg s + wg^2)."""
    return RationalTransferFunction(
        [p.wg ** 2], [1.0, 2.0 * p.xi * p.wg, p.wg ** 2]
    )


def delay_pade_tf(d):
    """Second-order Pade all-pass approximation of a delay of d seconds."""
    q = d * d / 12.0
    return RationalTransferFunction([q, -d / 2.0, 1.0], [q, d / 2.0, 1.0])


def delay_lag_tf(d):
    """First-order low-pass 1 / (d s + 1) used by the identification model."""
    return RationalTransferFunction([1.0], [d, 1.0])


def axis_tf(p, include_delay=True):
    tf = motor_tf(p) * gyro_tf(p)
    if include_delay:
        tf = tf * delay_pade_tf(p.d)
    return tf


def build_axis_model(p, include_delay=True):
    """State-space model of one axis; order 5 (3 without the Pade factor).

    Realized as the cascade of the factor realizations with diagonal state
    balancing: the single companion form of the full polynomial carries
    coefficients spanning ~13 decades and wrecks downstream conditioning.
    """
    sys = connect_series(tf_to_ss(motor_tf(p)), tf_to_ss(gyro_tf(p)))
    if include_delay:
        sys = connect_series(sys, tf_to_ss(delay_pade_tf(p.d)))
    return balance_states(sys)


def build_mimo_model(az, el, include_delay=True):
    """Block-diagonal 2x2 gimbal plant; order 10 with the delay factors."""
    return connect_diagonal(
        build_axis_model(az, include_delay), build_axis_model(el, include_delay)
    )


@dataclass(frozen=True)
class UncertaintyWeight:
    """Stable proper bound on the multiplicative model error of one axis."""

    axis: str
    weight: RationalTransferFunction


def uncertainty_weights():
    """Measured multiplicative-error upper bounds and their 2x2 diagonal.

    Returns ``(w1a, w1e, W1)`` where W1 = diag(w1a, w1e) as a state-space
    model.
    """
    w1a = RationalTransferFunction([1.87, 792.65, 90750.0],
                                   [1.0, 650.35, 572624.0])
    w1e = RationalTransferFunction([1.12, 2564.28, 289957.0],
                                   [1.0, 2059.65, 2375266.0])
    w1 = connect_diagonal(tf_to_ss(w1a), tf_to_ss(w1e))
    return (UncertaintyWeight("azimuth", w1a),
            UncertaintyWeight("elevation", w1e),
            w1)


@dataclass(frozen=True)
class PerturbedModelSet:
    """Seeded family of output-multiplicative perturbations of a nominal."""

    seed: int
    members: tuple
    deltas: tuple = field(default=())
    delta_norms: tuple = field(default=())


def apply_output_perturbation(nominal, w1, delta):
    """G_p = (I + Delta W1) G for a given Delta."""
    return add(nominal, connect_series(connect_series(nominal, w1), delta))


def _random_allpass_entry(rng):
    """g * (a - s) / (a + s) with random corner and gain in [0, 1]."""
    a = float(np.exp(rng.uniform(np.log(5.0), np.log(2000.0))))
    g = float(rng.uniform(0.0, 1.0))
    return StateSpaceModel([[-a]], [[1.0]], [[2.0 * a * g]], [[-g]])


def _random_delta(rng, size=2):
    """Stable random transfer matrix, scaled so its H-inf norm is in (0, 1]."""
    n_states = 0
    blocks = [[None] * size for _ in range(size)]
    for i in range(size):
        for j in range(size):
            blocks[i][j] = _random_allpass_entry(rng)
            n_states += 1
    a = np.zeros((n_states, n_states))
    b = np.zeros((n_states, size))
    c = np.zeros((size, n_states))
    d = np.zeros((size, size))
    k = 0
    for i in range(size):
        for j in range(size):
            blk = blocks[i][j]
            a[k, k] = blk.A[0, 0]
            b[k, j] = blk.B[0, 0]
            c[i, k] = blk.C[0, 0]
            d[i, j] += blk.D[0, 0]
            k += 1
    raw = StateSpaceModel(a, b, c, d)
    # compose with a constant contraction, then normalize to the target norm
    m = rng.standard_normal((size, size))
    m /= max(np.linalg.svd(m, compute_uv=False)[0], 1e-12)
    contracted = connect_series(raw, StateSpaceModel.static_gain(m))
    target = float(rng.uniform(0.3, 1.0))
    norm = hinf_norm(contracted, band_hz=(1e-3, 1e5), points_per_decade=60)
    scale = target / max(norm, 1e-12)
    return StateSpaceModel(contracted.A, contracted.B,
                           scale * contracted.C, scale * contracted.D)


def sample_perturbed_models(nominal, w1, count, seed):
    """Seeded family G_p = (I + Delta W1) G with ||Delta||_inf <= 1.

    Deterministic in ``seed``; each Delta is built from per-entry first-order
    all-pass sections composed with a constant contraction and normalized by
    its computed H-inf norm.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    rng = np.random.default_rng(seed)
    deltas = []
    members = []
    norms = []
    for _ in range(count):
        delta = _random_delta(rng, nominal.n_outputs)
        deltas.append(delta)
        norms.append(hinf_norm(delta, band_hz=(1e-3, 1e5), points_per_decade=60))
        members.append(apply_output_perturbation(nominal, w1, delta))
    return PerturbedModelSet(seed=seed, members=tuple(members),
                             deltas=tuple(deltas), delta_norms=tuple(norms))
