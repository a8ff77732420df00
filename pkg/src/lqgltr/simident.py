"""Sampled-data closed-loop simulation, swept-sine identification, CD-EKF.

The plant is continuous, the controller discrete with zero-order hold; the
plant is advanced between controller updates by fixed-step RK4 at one tenth
of the controller period (for an LTI plant under ZOH the ten substeps
collapse into one precomputed affine step map, which is what the kernels
iterate).  The output disturbance enters the measured rate ahead of the
controller, so the measured loop is y = S_o d.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .errors import (
    AlgebraicLoop,
    DivergedFilter,
    InsufficientCycles,
    InvalidParameters,
    NumericalBlowup,
    UnstableLoop,
)
from .gimbal import GimbalAxisParams
from .systems import DiscreteStateSpaceModel, StateSpaceModel

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------------------
# disturbance profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DisturbanceProfile:
    """Deterministic multi-tone rate disturbance.

    Every profile kind is realized as a finite set of tones per axis
    (band-limited noise becomes a dense random-phase comb), so frequency-
    domain oracles can sum the same tone table the simulator plays.
    ``tones[axis]`` is an (n_tones, 3) array of rows (freq_hz, amplitude,
    phase).
    """

    kind: str
    seed: int
    tones: tuple  # per-axis arrays (n, 3): freq_hz, amplitude, phase

    @property
    def n_axes(self):
        return len(self.tones)

    def tone_table(self, axis):
        return np.asarray(self.tones[axis])

    def sample(self, times):
        """Evaluate the disturbance at the given times; shape (len(t), axes)."""
        times = np.asarray(times, dtype=float)
        out = np.zeros((times.size, self.n_axes))
        for axis in range(self.n_axes):
            table = self.tone_table(axis)
            for f, amp, phase in table:
                out[:, axis] += amp * np.sin(TWO_PI * f * times + phase)
        return out

    def total_power(self, axis):
        table = self.tone_table(axis)
        return float(np.sum(table[:, 1] ** 2) / 2.0) if table.size else 0.0


def sinusoid_profile(axis, freq_hz, amplitude, n_axes=2, phase=0.0):
    """Single tone on one axis, zero elsewhere."""
    tones = []
    for i in range(n_axes):
        if i == axis:
            tones.append(np.array([[freq_hz, amplitude, phase]]))
        else:
            tones.append(np.zeros((0, 3)))
    return DisturbanceProfile(kind="sinusoid", seed=0, tones=tuple(tones))


def multisine_profile(tones_hz, amplitudes, n_axes=2, seed=0):
    """Same tone set on every axis; later axes get deterministic phase
    offsets so the axes are not phase-locked."""
    tones_hz = np.asarray(tones_hz, dtype=float)
    amplitudes = np.asarray(amplitudes, dtype=float)
    tables = []
    golden = np.pi * (3.0 - np.sqrt(5.0))
    for axis in range(n_axes):
        phases = golden * axis * (1.0 + np.arange(tones_hz.size))
        tables.append(np.column_stack([tones_hz, amplitudes,
                                       np.mod(phases, TWO_PI)]))
    return DisturbanceProfile(kind="multisine", seed=seed, tones=tuple(tables))


def band_limited_noise_profile(band_hz, power, n_axes=2, seed=0, df_hz=0.1,
                               offset_hz=0.0):
    """Flat-power random-phase comb over the band; deterministic in seed.

    ``offset_hz`` shifts the comb so it avoids landing on deterministic
    tone frequencies (same-frequency components would interfere coherently
    and break power bookkeeping).
    """
    lo = max(band_hz[0], df_hz) + offset_hz
    freqs = np.arange(lo, band_hz[1] + 0.5 * df_hz, df_hz)
    amp = np.sqrt(2.0 * power / freqs.size)
    rng = np.random.default_rng(seed)
    tables = []
    for _ in range(n_axes):
        phases = rng.uniform(0.0, TWO_PI, freqs.size)
        tables.append(np.column_stack([freqs, np.full(freqs.size, amp), phases]))
    return DisturbanceProfile(kind="band-limited-noise", seed=seed,
                              tones=tuple(tables))


DEFAULT_TONES_HZ = (0.5, 1.0, 2.0, 5.0, 10.0)
DEFAULT_TONE_AMPLITUDES = tuple(0.02 * 0.5 / f for f in DEFAULT_TONES_HZ)
DEFAULT_NOISE_BAND_HZ = (0.1, 20.0)
DEFAULT_NOISE_POWER_FRACTION = 0.1


def default_disturbance_profile(seed=0, n_axes=2):
    """The documented default: per-axis multisine at {0.5, 1, 2, 5, 10} Hz
    with 1/f amplitudes from 0.02 rad/s, plus band-limited (0.1-20 Hz)
    random-phase comb noise at 10% of the multisine power.  The comb is
    offset by half its spacing so no comb line coincides with a multisine
    tone."""
    ms = multisine_profile(DEFAULT_TONES_HZ, DEFAULT_TONE_AMPLITUDES,
                           n_axes=n_axes, seed=seed)
    power = ms.total_power(0) * DEFAULT_NOISE_POWER_FRACTION
    noise = band_limited_noise_profile(DEFAULT_NOISE_BAND_HZ, power,
                                       n_axes=n_axes, seed=seed,
                                       offset_hz=0.05)
    tables = tuple(
        np.vstack([ms.tone_table(i), noise.tone_table(i)])
        for i in range(n_axes)
    )
    return DisturbanceProfile(kind="multisine", seed=seed, tones=tables)


# ---------------------------------------------------------------------------
# sampled-data loop simulation
# ---------------------------------------------------------------------------

def rk4_step_matrices(a, b, h):
    """Affine step map of one fixed-step RK4 update for dx = A x + B u with
    u held constant: x+ = M x + N u (exact RK4 polynomial in h A)."""
    n = a.shape[0]
    ha = h * a
    eye = np.eye(n)
    m = eye + ha @ (eye + ha @ (eye / 2.0 + ha @ (eye / 6.0 + ha / 24.0)))
    n_mat = h * (eye + ha @ (eye / 2.0 + ha @ (eye / 6.0 + ha / 24.0))) @ b
    return m, n_mat


def compose_steps(m, n_mat, count):
    """Step map for ``count`` consecutive substeps under one held input."""
    m_tot = np.eye(m.shape[0])
    n_tot = np.zeros_like(n_mat)
    for _ in range(count):
        n_tot = m @ n_tot + n_mat
        m_tot = m @ m_tot
    return m_tot, n_tot


@dataclass(frozen=True)
class SimulationTrace:
    """Closed-loop record sampled at the controller period.

    w is the measured inertial rate (plant output plus disturbance), u the
    controller output, d the injected disturbance, angle the cumulative
    trapezoid integral of w (the LOS angle error).
    """

    time: np.ndarray
    w: np.ndarray
    u: np.ndarray
    d: np.ndarray
    angle: np.ndarray
    sample_period: float


def _loop_matrices(plant, controller, substeps):
    if plant.n_outputs != controller.n_inputs or \
            controller.n_outputs != plant.n_inputs:
        raise AlgebraicLoop(
            f"loop dimensions do not close: plant {plant.n_outputs}x"
            f"{plant.n_inputs}, controller {controller.n_outputs}x"
            f"{controller.n_inputs}")
    if np.any(plant.D != 0.0):
        raise AlgebraicLoop("plant feedthrough must be zero for the "
                            "sampled-data loop")
    h = controller.sample_period / substeps
    m, n_mat = rk4_step_matrices(plant.A, plant.B, h)
    return compose_steps(m, n_mat, substeps)


def closed_loop_spectral_radius(plant, controller, substeps=10):
    """Spectral radius of the sampled-data closed loop (stable iff < 1)."""
    step_a, step_b = _loop_matrices(plant, controller, substeps)
    ng = plant.n_states
    nk = controller.n_states
    a = np.zeros((ng + nk, ng + nk))
    a[:ng, :ng] = step_a + step_b @ controller.D @ plant.C
    a[:ng, ng:] = step_b @ controller.C
    a[ng:, :ng] = controller.B @ plant.C
    a[ng:, ng:] = controller.A
    if a.shape[0] == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvals(a))))


def simulate_closed_loop(plant, controller, disturbance, duration,
                         substeps=10, x0=None, blowup=1e12):
    """Mixed continuous/discrete simulation of the stabilization loop.

    The controller sees y_k = C x(t_k) + d(t_k), holds u_k over one period,
    and the plant advances by ``substeps`` RK4 steps per period.  Returns a
    SimulationTrace; raises NumericalBlowup (with the divergence time) if a
    state exceeds ``blowup``.
    """
    ts = controller.sample_period
    nsteps = int(round(duration / ts))
    if nsteps < 100:
        raise InvalidParameters(
            f"duration must cover at least 100 controller periods, got "
            f"{nsteps}")
    step_a, step_b = _loop_matrices(plant, controller, substeps)
    times = np.arange(nsteps) * ts
    d_seq = disturbance.sample(times)
    if d_seq.shape[1] != plant.n_outputs:
        raise AlgebraicLoop(
            f"disturbance has {d_seq.shape[1]} axes, plant has "
            f"{plant.n_outputs} outputs")
    x_init = np.zeros(plant.n_states) if x0 is None else np.asarray(x0, float)
    xk_init = np.zeros(controller.n_states)
    y, u, blow = kernels.lti_loop(
        np.ascontiguousarray(step_a), np.ascontiguousarray(step_b),
        np.ascontiguousarray(plant.C), np.ascontiguousarray(controller.A),
        np.ascontiguousarray(controller.B), np.ascontiguousarray(controller.C),
        np.ascontiguousarray(controller.D), np.ascontiguousarray(d_seq),
        x_init, xk_init, blowup)
    if blow >= 0:
        raise NumericalBlowup(
            f"state exceeded {blowup:g} at t = {blow * ts:.6g} s "
            "(unstable loop?)", time=blow * ts)
    angle = np.zeros_like(y)
    if nsteps > 1:
        angle[1:] = np.cumsum(0.5 * ts * (y[1:] + y[:-1]), axis=0)
    return SimulationTrace(time=times, w=y, u=u, d=d_seq, angle=angle,
                           sample_period=ts)


def rms_los_error(trace, settle):
    """Per-axis RMS of the LOS angle error after the settle interval, in
    microradians.

    The post-settle mean is subtracted first: the angle is an open integral,
    so the startup transient leaves a constant offset that reflects the
    switch-on, not the steady-state rejection being measured.
    """
    mask = trace.time >= settle
    if not np.any(mask):
        raise InvalidParameters("settle interval leaves no samples")
    seg = trace.angle[mask]
    seg = seg - np.mean(seg, axis=0)
    return np.sqrt(np.mean(seg ** 2, axis=0)) * 1e6


# ---------------------------------------------------------------------------
# swept-sine identification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IdentifiedResponse:
    """Complex sensitivity estimates from swept-sine runs."""

    grid_hz: np.ndarray
    values: np.ndarray  # (nf, p, p)


def swept_sine_identify(plant, controller, grid_hz, amplitude=0.02,
                        cycles=20, settle_min_s=1.0, substeps=10):
    """Column-wise swept-sine estimate of the 2x2 output sensitivity.

    For each frequency and each disturbance axis separately, inject a
    single-axis sinusoid, discard the transient (half the cycles, but at
    least ``settle_min_s`` worth), and estimate the complex gains of all
    outputs by single-frequency correlation over an integer number of
    steady cycles.  Frequencies are snapped so the measurement window holds
    an exact integer number of samples per cycle set.
    """
    meas_cycles = cycles - cycles // 2
    if meas_cycles < 10:
        raise InsufficientCycles(
            f"{meas_cycles} steady cycles < 10; increase cycles")
    ts = controller.sample_period
    if closed_loop_spectral_radius(plant, controller, substeps) >= 1.0:
        raise UnstableLoop("sampled-data loop has spectral radius >= 1")
    step_a, step_b = _loop_matrices(plant, controller, substeps)
    p = plant.n_outputs
    grid_hz = np.asarray(grid_hz, dtype=float)
    values = np.zeros((grid_hz.size, p, p), dtype=complex)
    snapped = np.zeros(grid_hz.size)
    for i, f in enumerate(grid_hz):
        n_meas = max(int(round(meas_cycles / (f * ts))), 2 * meas_cycles)
        f_snap = meas_cycles / (n_meas * ts)
        settle_cycles = max(cycles // 2,
                            int(np.ceil(settle_min_s * f_snap)))
        n_settle = int(round(settle_cycles / (f_snap * ts)))
        n_total = n_settle + n_meas
        times = np.arange(n_total) * ts
        phasor = np.exp(-1j * TWO_PI * f_snap * times[n_settle:])
        snapped[i] = f_snap
        for j in range(p):
            d_seq = np.zeros((n_total, p))
            d_seq[:, j] = amplitude * np.sin(TWO_PI * f_snap * times)
            y, _, blow = kernels.lti_loop(
                np.ascontiguousarray(step_a), np.ascontiguousarray(step_b),
                np.ascontiguousarray(plant.C),
                np.ascontiguousarray(controller.A),
                np.ascontiguousarray(controller.B),
                np.ascontiguousarray(controller.C),
                np.ascontiguousarray(controller.D),
                np.ascontiguousarray(d_seq),
                np.zeros(plant.n_states), np.zeros(controller.n_states))
            if blow >= 0:
                raise UnstableLoop(f"simulation diverged at {f_snap:.3g} Hz")
            for k in range(p):
                yk = y[n_settle:, k]
                values[i, k, j] = 2j * np.sum(yk * phasor) / (n_meas * amplitude)
    return IdentifiedResponse(grid_hz=snapped, values=values)


def compare_delay_models(delay, freq_hz):
    """Magnitude ratio and phase difference (degrees) between the
    second-order Pade all-pass and the first-order lag at one frequency."""
    if delay <= 0.0 or freq_hz <= 0.0:
        raise InvalidParameters("delay and frequency must be positive")
    s = 1j * TWO_PI * freq_hz
    q = delay * delay / 12.0
    pade = (q * s * s - (delay / 2.0) * s + 1.0) / \
           (q * s * s + (delay / 2.0) * s + 1.0)
    lag = 1.0 / (delay * s + 1.0)
    ratio = abs(pade) / abs(lag)
    dphase = np.angle(pade / lag, deg=True)
    return float(ratio), float(dphase)


# ---------------------------------------------------------------------------
# continuous-discrete EKF parameter identification
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EkfModel:
    """Fixed constants of the identification model (first-order-lag delay)."""

    wg: float
    xi: float
    lag: float
    Kt: float

    @classmethod
    def from_axis_params(cls, p):
        return cls(wg=p.wg, xi=p.xi, lag=p.d, Kt=p.Kt)

    def linear_matrices(self, J, Bv):
        """The four-state rate-loop model with known (J, Bv)."""
        a = np.array([
            [0.0, 1.0, 0.0, 0.0],
            [-self.wg ** 2, -2.0 * self.xi * self.wg, self.wg ** 2, 0.0],
            [0.0, 0.0, -Bv / J, self.Kt / J],
            [0.0, 0.0, 0.0, -1.0 / self.lag],
        ])
        b = np.array([[0.0], [0.0], [0.0], [1.0 / self.lag]])
        return a, b


@dataclass(frozen=True)
class EkfEstimate:
    """Augmented state (dynamics + J + Bv) and its covariance."""

    state: np.ndarray       # (6,)
    covariance: np.ndarray  # (6, 6)

    @property
    def inertia(self):
        return float(self.state[4])

    @property
    def viscous_friction(self):
        return float(self.state[5])


INERTIA_FLOOR = 1e-6


def ekf_dynamics(state, u, model):
    """State derivative of the augmented (parameters-as-states) model."""
    return kernels.ekf_dynamics(np.asarray(state, float), float(u),
                                model.wg, model.xi, model.lag, model.Kt)


def ekf_jacobian(state, model):
    return kernels.ekf_jacobian(np.asarray(state, float),
                                model.wg, model.xi, model.lag, model.Kt)


def ekf_predict(est, u, dt, process_noise, model):
    """Joint RK4 propagation of the state and covariance ODEs over dt.

    ``u`` is either a held scalar or a (start, midpoint, end) triple for the
    RK4 stages.  The inertia state is clamped at INERTIA_FLOOR with a
    warning diagnostic.
    """
    if dt <= 0.0:
        raise InvalidParameters("dt must be > 0")
    if np.isscalar(u):
        stages = (float(u),) * 3
    else:
        stages = tuple(float(v) for v in u)
    x, p = kernels.ekf_predict_step(
        np.asarray(est.state, float), np.asarray(est.covariance, float),
        stages, dt, np.asarray(process_noise, float),
        model.wg, model.xi, model.lag, model.Kt)
    if x[4] <= INERTIA_FLOOR:
        warnings.warn("inertia state clamped at floor (singular inertia)",
                      RuntimeWarning, stacklevel=2)
        x[4] = INERTIA_FLOOR
    return EkfEstimate(state=x, covariance=p)


def ekf_update(est, y, meas_noise):
    """Scalar measurement update (y = x1) in Joseph-stabilized form."""
    if meas_noise <= 0.0:
        raise InvalidParameters("meas_noise must be > 0")
    x, p = kernels.ekf_update_step(np.asarray(est.state, float),
                                   np.asarray(est.covariance, float),
                                   float(y), float(meas_noise))
    return EkfEstimate(state=x, covariance=p)


@dataclass(frozen=True)
class EkfRunResult:
    """Trace of a full identification run."""

    time: np.ndarray
    state_trace: np.ndarray       # (n+1, 6) post-update states
    covariance_trace: np.ndarray  # (n+1,) trace of P
    covariance_snapshots: np.ndarray  # (k, 6, 6), every snap_every steps
    final: EkfEstimate
    clamp_events: int
    true_inertia: float
    true_viscous_friction: float

    @property
    def inertia_error(self):
        return abs(self.final.inertia - self.true_inertia) / self.true_inertia

    @property
    def viscous_friction_error(self):
        return abs(self.final.viscous_friction - self.true_viscous_friction) \
            / self.true_viscous_friction


DEFAULT_EKF_DT = 5e-4   # RK4 covariance propagation is unstable at 1 ms
                        # for the 1646 rad/s gyro mode pair
DEFAULT_PARAM_DRIFT_PSD = 1e-8


def estimate_parameters(true_params, excitation_amplitude=1.0, duration=30.0,
                        meas_noise_std=1e-3, seed=0, init_scale=1.5,
                        dt=DEFAULT_EKF_DT, excitation_hz=4.0,
                        process_noise=None, initial_covariance=None,
                        snap_every=100, truth_model="lag"):
    """Identify (J, Bv) from a simulated low-frequency excitation run.

    Synthetic truth: the four-state lag model with the true parameters,
    integrated by the same fixed-step RK4 the filter uses, driven by a
    sinusoid at ``excitation_hz`` (low enough that the lag approximation of
    the delay is accurate).  Gyro measurements get additive white noise.
    The CD-EKF starts from ``init_scale`` times the true parameters.

    ``truth_model="pade"`` generates the measurements from the all-pass
    delay model instead (the filter keeps the lag model), exposing the
    model-mismatch bias of the approximation; nothing is asserted on it.

    Raises DivergedFilter if the covariance trace grows monotonically over
    more than 25% of the run.
    """
    if not isinstance(true_params, GimbalAxisParams):
        raise InvalidParameters("true_params must be GimbalAxisParams")
    if truth_model not in ("lag", "pade"):
        raise InvalidParameters(f"unknown truth_model {truth_model!r}")
    model = EkfModel.from_axis_params(true_params)
    nsteps = int(round(duration / dt))
    if nsteps < 10:
        raise InvalidParameters("duration too short")
    t_half = 0.5 * dt * np.arange(2 * nsteps + 1)
    u_fine = excitation_amplitude * np.sin(TWO_PI * excitation_hz * t_half)

    if truth_model == "lag":
        a_true, b_true = model.linear_matrices(true_params.J, true_params.Bv)
        c_true = np.array([[1.0, 0.0, 0.0, 0.0]])
    else:
        from .gimbal import delay_pade_tf, gyro_tf
        from .systems import RationalTransferFunction, balance_states, \
            connect_series, tf_to_ss
        motor = RationalTransferFunction([true_params.Kt],
                                         [true_params.J, true_params.Bv])
        chain = connect_series(
            connect_series(tf_to_ss(delay_pade_tf(true_params.d)),
                           tf_to_ss(motor)),
            tf_to_ss(gyro_tf(true_params)))
        chain = balance_states(chain)
        a_true, b_true, c_true = chain.A, chain.B, chain.C
    xs_true = kernels.linear_rk4(np.ascontiguousarray(a_true),
                                 np.ascontiguousarray(b_true),
                                 u_fine, dt, np.zeros(a_true.shape[0]))
    y_true = (c_true @ xs_true[1:].T)[0]
    rng = np.random.default_rng(seed)
    y_meas = y_true + meas_noise_std * rng.standard_normal(nsteps)

    x0 = np.array([0.0, 0.0, 0.0, 0.0,
                   init_scale * true_params.J, init_scale * true_params.Bv])
    if initial_covariance is None:
        # dynamics prior: sigma = 0.1 in each state's natural unit (x2 is
        # the gyro acceleration state and carries a wg factor); parameter
        # prior 50% of the initial guesses
        sig = 0.1
        p0 = np.diag([sig ** 2, (sig * model.wg) ** 2, sig ** 2, sig ** 2,
                      (0.5 * x0[4]) ** 2, (0.5 * x0[5]) ** 2])
    else:
        p0 = np.asarray(initial_covariance, float)
    if process_noise is None:
        qc = np.diag([DEFAULT_PARAM_DRIFT_PSD] * 4 +
                     [DEFAULT_PARAM_DRIFT_PSD, DEFAULT_PARAM_DRIFT_PSD])
    else:
        qc = np.asarray(process_noise, float)

    # clamping at the absolute 1e-6 floor would put a ~1e6 factor into the
    # rate equation and blow up the next RK4 step; hold the inertia at a
    # small fraction of the initial guess instead while the transient lasts
    clamp_floor = max(INERTIA_FLOOR, 0.02 * x0[4])
    xs, p_trace, p_snaps, p_final, clamped = kernels.ekf_run(
        model.wg, model.xi, model.lag, model.Kt,
        np.ascontiguousarray(u_fine), np.ascontiguousarray(y_meas), dt,
        np.ascontiguousarray(qc), meas_noise_std ** 2,
        x0, np.ascontiguousarray(p0),
        clamp_floor, snap_every)

    growth = np.diff(p_trace) > 0.0
    run_len = 0
    worst = 0
    for g in growth:
        run_len = run_len + 1 if g else 0
        worst = max(worst, run_len)
    if worst > 0.25 * nsteps:
        raise DivergedFilter(
            f"covariance trace grew monotonically for {worst} of {nsteps} "
            "steps")

    final = EkfEstimate(state=xs[-1].copy(), covariance=p_final)
    return EkfRunResult(
        time=dt * np.arange(nsteps + 1), state_trace=xs,
        covariance_trace=p_trace, covariance_snapshots=p_snaps,
        final=final, clamp_events=int(clamped),
        true_inertia=true_params.J, true_viscous_friction=true_params.Bv)
