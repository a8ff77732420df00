"""Output sensitivity maps and the singular-value robustness tests.

For the output-multiplicative one-block structure the three tests are

    nominal performance   ||We So||_inf < 1
    robust stability      ||W1 To||_inf < 1
    robust performance    sigma(We So) + sigma(W1 To) < 1 at every frequency

and the robust-performance trace is literally the sum of the other two.
Peaks are grid-certified: scanned on the shared log grid and refined around
the maximum, with the attaining frequency reported.
"""

from dataclasses import dataclass

import numpy as np

from .errors import UnstableClosedLoop
from .numerics import svd_values
from .systems import (
    StateSpaceModel,
    connect_series,
    default_grid,
    frequency_response,
    hinf_norm,
    scan_and_refine,
)

TWO_PI = 2.0 * np.pi


def closed_loop_maps(g, k):
    """Output sensitivity and complementary sensitivity of the loop L = G K.

    ``k`` is the loop compensator in the negative-feedback convention
    (u = -K y), so So = (I + G K)^-1 and To = G K (I + G K)^-1.  Both share
    one realization; So + To = I holds exactly.

    Raises UnstableClosedLoop (listing the offending eigenvalues) if the
    interconnection is internally unstable.
    """
    loop = connect_series(k, g)  # G(s) K(s)
    p = loop.n_outputs
    gain = np.eye(p) + loop.D
    if abs(np.linalg.det(gain)) < 1e-12:
        raise UnstableClosedLoop("algebraic loop: I + D_G D_K singular")
    e = np.linalg.inv(gain)
    a_cl = loop.A - loop.B @ e @ loop.C
    if a_cl.shape[0]:
        eig = np.linalg.eigvals(a_cl)
        bad = eig[eig.real >= 0.0]
        if bad.size:
            raise UnstableClosedLoop(
                f"closed loop has {bad.size} eigenvalue(s) in the closed right "
                f"half-plane", eigenvalues=bad)
    b_cl = loop.B @ e
    s_o = StateSpaceModel(a_cl, b_cl, -e @ loop.C, e)
    t_o = StateSpaceModel(a_cl, b_cl, e @ loop.C, np.eye(p) - e)
    return s_o, t_o


def nominal_performance(we, s_o, band_hz=(0.1, 1000.0)):
    """||We So||_inf and the strict < 1 verdict."""
    value = hinf_norm(connect_series(s_o, we), band_hz=band_hz)
    return value, value < 1.0


def robust_stability(w1, t_o, band_hz=(0.1, 1000.0)):
    """||W1 To||_inf and the strict < 1 verdict."""
    value = hinf_norm(connect_series(t_o, w1), band_hz=band_hz)
    return value, value < 1.0


@dataclass(frozen=True)
class RobustnessReport:
    """Traces and peaks of the three singular-value tests."""

    grid: np.ndarray
    np_trace: np.ndarray
    rs_trace: np.ndarray
    rp_trace: np.ndarray
    np_peak: float
    np_peak_hz: float
    rs_peak: float
    rs_peak_hz: float
    rp_peak: float
    rp_peak_hz: float

    @property
    def nominal_performance_ok(self):
        return self.np_peak < 1.0

    @property
    def robust_stability_ok(self):
        return self.rs_peak < 1.0

    @property
    def robust_performance_ok(self):
        return self.rp_peak < 1.0


def robust_performance(we, s_o, w1, t_o, grid=None):
    """Pointwise sigma(We So) + sigma(W1 To) with a refined peak.

    Returns a RobustnessReport carrying all three traces; np/rs peaks are
    refined independently so they agree with the hinf_norm values.
    """
    if grid is None:
        grid = default_grid()
    wes = connect_series(s_o, we)
    w1t = connect_series(t_o, w1)
    np_trace = np.linalg.svd(frequency_response(wes, grid).values,
                             compute_uv=False)[:, 0]
    rs_trace = np.linalg.svd(frequency_response(w1t, grid).values,
                             compute_uv=False)[:, 0]
    rp_trace = np_trace + rs_trace

    def sigma_of(sys):
        return lambda w: float(svd_values(sys.transfer_at(1j * w))[0])

    band = (grid[0] / TWO_PI, grid[-1] / TWO_PI)
    np_peak, np_w = scan_and_refine(sigma_of(wes), band)
    rs_peak, rs_w = scan_and_refine(sigma_of(w1t), band)
    f_np = sigma_of(wes)
    f_rs = sigma_of(w1t)
    rp_peak, rp_w = scan_and_refine(lambda w: f_np(w) + f_rs(w), band)
    # DC and feedthrough candidates, mirroring hinf_norm
    for w_probe in (0.0,):
        v = float(svd_values(wes.transfer_at(w_probe))[0])
        if v > np_peak:
            np_peak, np_w = v, w_probe
        v_rs = float(svd_values(w1t.transfer_at(w_probe))[0])
        if v_rs > rs_peak:
            rs_peak, rs_w = v_rs, w_probe
        if v + v_rs > rp_peak:
            rp_peak, rp_w = v + v_rs, w_probe
    return RobustnessReport(
        grid=grid, np_trace=np_trace, rs_trace=rs_trace, rp_trace=rp_trace,
        np_peak=np_peak, np_peak_hz=np_w / TWO_PI,
        rs_peak=rs_peak, rs_peak_hz=rs_w / TWO_PI,
        rp_peak=rp_peak, rp_peak_hz=rp_w / TWO_PI,
    )


def evaluate_robustness(plant, loop_comp, we, w1, grid=None):
    """Convenience: closed-loop maps plus the full report."""
    s_o, t_o = closed_loop_maps(plant, loop_comp)
    return robust_performance(we, s_o, w1, t_o, grid=grid), s_o, t_o


def _phase_allpass(theta, w0):
    """Stable scalar all-pass with value e^{j theta} at j w0, as (A,B,C,D)."""
    theta = float(np.angle(np.exp(1j * theta)))  # wrap to (-pi, pi]
    if abs(theta) < 1e-12:
        return StateSpaceModel.static_gain([[1.0]])
    if abs(abs(theta) - np.pi) < 1e-12:
        return StateSpaceModel.static_gain([[-1.0]])
    if theta < 0.0:
        alpha = w0 / np.tan(-theta / 2.0)
        sign = 1.0
    else:
        alpha = w0 / np.tan((np.pi - theta) / 2.0)
        sign = -1.0
    # sign * (alpha - s) / (alpha + s)
    return StateSpaceModel([[-alpha]], [[1.0]], [[sign * 2.0 * alpha]],
                           [[-sign]])


def _row_system(entries):
    """1 x p system whose j-th channel is the given SISO block (summed)."""
    p = len(entries)
    n = sum(blk.n_states for blk in entries)
    a = np.zeros((n, n))
    b = np.zeros((n, p))
    c = np.zeros((1, n))
    d = np.zeros((1, p))
    k = 0
    for j, blk in enumerate(entries):
        nb = blk.n_states
        a[k:k + nb, k:k + nb] = blk.A
        b[k:k + nb, j:j + 1] = blk.B
        c[0, k:k + nb] = blk.C
        d[0, j] = blk.D[0, 0]
        k += nb
    return StateSpaceModel(a, b, c, d)


def _column_system(entries):
    """p x 1 system whose i-th output is the given SISO block."""
    p = len(entries)
    n = sum(blk.n_states for blk in entries)
    a = np.zeros((n, n))
    b = np.zeros((n, 1))
    c = np.zeros((p, n))
    d = np.zeros((p, 1))
    k = 0
    for i, blk in enumerate(entries):
        nb = blk.n_states
        a[k:k + nb, k:k + nb] = blk.A
        b[k:k + nb, 0:1] = blk.B
        c[i:i + 1, k:k + nb] = blk.C
        d[i, 0] = blk.D[0, 0]
        k += nb
    return StateSpaceModel(a, b, c, d)


def _scaled(sys, gain):
    return StateSpaceModel(sys.A, sys.B, gain * sys.C, gain * sys.D)


def destabilizing_perturbation(w1, t_o, scale=1.05, band_hz=(0.1, 1000.0)):
    """Construct a real-rational Delta that defeats the small-gain margin.

    At the peak frequency of sigma_max(W1 To) the worst-case perturbation is
    the rank-one (1/sigma) v u^H from the SVD there; each complex entry is
    realized as a magnitude times a first-order all-pass matching its phase,
    so ||Delta||_inf = scale / peak.  With ``scale`` > 1 the perturbed loop
    loses stability.

    Returns ``(delta, peak_value, peak_omega)``.
    """
    w1t = connect_series(t_o, w1)
    peak, w_peak = scan_and_refine(
        lambda w: float(svd_values(w1t.transfer_at(1j * w))[0]), band_hz)
    m = w1t.transfer_at(1j * w_peak)
    u_mat, sigma, vh = np.linalg.svd(m)
    u = u_mat[:, 0]
    v = vh[0, :].conj()
    p = m.shape[0]
    # delta(s) = -gain * q(s) r(s) with q(jw*) = v (column), r(jw*) = u^H
    # (row): then Delta M has eigenvalue -scale at jw*, i.e. det(I + Delta M)
    # crosses zero for scale = 1
    row = _row_system([_scaled(_phase_allpass(-np.angle(u[j]), w_peak), abs(u[j]))
                       for j in range(p)])
    col = _column_system([_scaled(_phase_allpass(np.angle(v[i]), w_peak), abs(v[i]))
                          for i in range(p)])
    delta = _scaled(connect_series(row, col), -scale / sigma[0])
    return delta, float(peak), float(w_peak)
