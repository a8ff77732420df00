"""Pure-Python (numpy) implementations of the hot simulation kernels.

These are the reference semantics; ``lqgltr._kernels`` is the compiled twin
with identical signatures.  Keep the arithmetic order aligned between the two
so results agree to rounding.
"""

import numpy as np

BACKEND_NAME = "python"


def lti_loop(step_a, step_b, c, ak, bk, ck, dk, d_seq, x0, xk0, blowup=1e12):
    """Sampled-data loop: discrete plant step map + discrete controller.

    Per controller period k:
        y_k  = C x_k + d_k              (output disturbance enters here)
        u_k  = CK xk_k + DK y_k
        xk+  = AK xk_k + BK y_k
        x+   = step_a x_k + step_b u_k  (precomposed RK4 substeps)

    Returns ``(y, u, blow_index)``; ``blow_index`` is -1 unless some state
    exceeded ``blowup``, in which case it is the offending step.
    """
    nsteps = d_seq.shape[0]
    p = c.shape[0]
    m = step_b.shape[1]
    y = np.zeros((nsteps, p))
    u = np.zeros((nsteps, m))
    x = np.array(x0, dtype=float, copy=True)
    xk = np.array(xk0, dtype=float, copy=True)
    for k in range(nsteps):
        yk = c @ x + d_seq[k]
        uk = ck @ xk + dk @ yk
        y[k] = yk
        u[k] = uk
        xk = ak @ xk + bk @ yk
        x = step_a @ x + step_b @ uk
        if np.max(np.abs(x)) > blowup or (xk.size and np.max(np.abs(xk)) > blowup):
            return y, u, k
    return y, u, -1


def linear_rk4(a, b, u_fine, dt, x0):
    """Fixed-step RK4 of dx = A x + B u(t) with u sampled at half steps.

    ``u_fine`` has length 2*nsteps + 1: u(t_k), u(t_k + dt/2), u(t_k + dt)...
    Returns the state trajectory, shape (nsteps + 1, n).
    """
    nsteps = (u_fine.shape[0] - 1) // 2
    n = a.shape[0]
    xs = np.zeros((nsteps + 1, n))
    x = np.array(x0, dtype=float, copy=True)
    xs[0] = x
    bvec = b.reshape(n)
    for k in range(nsteps):
        u0 = u_fine[2 * k]
        um = u_fine[2 * k + 1]
        u1 = u_fine[2 * k + 2]
        k1 = a @ x + bvec * u0
        k2 = a @ (x + 0.5 * dt * k1) + bvec * um
        k3 = a @ (x + 0.5 * dt * k2) + bvec * um
        k4 = a @ (x + dt * k3) + bvec * u1
        x = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        xs[k + 1] = x
    return xs


def ekf_dynamics(x, u, wg, xi, dlag, kt):
    """State derivative of the augmented identification model."""
    f = np.zeros(6)
    f[0] = x[1]
    f[1] = -wg * wg * x[0] - 2.0 * xi * wg * x[1] + wg * wg * x[2]
    f[2] = (-x[5] * x[2] + kt * x[3]) / x[4]
    f[3] = (-x[3] + u) / dlag
    return f


def ekf_jacobian(x, wg, xi, dlag, kt):
    """Jacobian of ekf_dynamics with respect to the augmented state."""
    jac = np.zeros((6, 6))
    jac[0, 1] = 1.0
    jac[1, 0] = -wg * wg
    jac[1, 1] = -2.0 * xi * wg
    jac[1, 2] = wg * wg
    jac[2, 2] = -x[5] / x[4]
    jac[2, 3] = kt / x[4]
    jac[2, 4] = (x[5] * x[2] - kt * x[3]) / (x[4] * x[4])
    jac[2, 5] = -x[2] / x[4]
    jac[3, 3] = -1.0 / dlag
    return jac


def _ekf_scale(wg):
    """Covariance coordinate scale: x2 (the gyro acceleration state) carries
    a wg factor; propagating P in scaled coordinates removes the ~wg^2
    non-normal transient growth of the RK4 polynomial that overflows the
    raw-coordinate propagation."""
    d = np.ones(6)
    d[1] = 1.0 / wg
    return d


def _ekf_rates_scaled(x, u, p_s, qc_s, d, wg, xi, dlag, kt):
    f = ekf_dynamics(x, u, wg, xi, dlag, kt)
    jac = ekf_jacobian(x, wg, xi, dlag, kt)
    jac_s = (d[:, None] * jac) / d[None, :]
    pdot = jac_s @ p_s + p_s @ jac_s.T + qc_s
    return f, pdot


def _ekf_predict_scaled(x, p_s, u_stages, dt, qc_s, d, wg, xi, dlag, kt):
    u0, um, u1 = u_stages
    k1x, k1p = _ekf_rates_scaled(x, u0, p_s, qc_s, d, wg, xi, dlag, kt)
    k2x, k2p = _ekf_rates_scaled(x + 0.5 * dt * k1x, um, p_s + 0.5 * dt * k1p,
                                 qc_s, d, wg, xi, dlag, kt)
    k3x, k3p = _ekf_rates_scaled(x + 0.5 * dt * k2x, um, p_s + 0.5 * dt * k2p,
                                 qc_s, d, wg, xi, dlag, kt)
    k4x, k4p = _ekf_rates_scaled(x + dt * k3x, u1, p_s + dt * k3p,
                                 qc_s, d, wg, xi, dlag, kt)
    xn = x + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x)
    pn = p_s + (dt / 6.0) * (k1p + 2.0 * k2p + 2.0 * k3p + k4p)
    pn = 0.5 * (pn + pn.T)
    return xn, pn


def _ekf_update_scaled(x, p_s, y, r_meas, d):
    # x1 is unscaled (d[0] = 1), so H in scaled coordinates is still e1^T
    s = p_s[0, 0] + r_meas
    kg_s = p_s[:, 0] / s
    xn = x + (kg_s / d) * (y - x[0])
    ikh = np.eye(6)
    ikh[:, 0] -= kg_s
    pn = ikh @ p_s @ ikh.T + r_meas * np.outer(kg_s, kg_s)
    pn = 0.5 * (pn + pn.T)
    return xn, pn


def ekf_predict_step(x, p, u_stages, dt, qc, wg, xi, dlag, kt):
    """One joint RK4 step of the state and covariance ODEs.

    ``u_stages`` is (u(t), u(t + dt/2), u(t + dt)).  The covariance is
    propagated internally in scaled coordinates and returned in physical
    coordinates.
    """
    d = _ekf_scale(wg)
    dd = np.outer(d, d)
    xn, pn_s = _ekf_predict_scaled(x, dd * p, u_stages, dt, dd * qc, d,
                                   wg, xi, dlag, kt)
    return xn, pn_s / dd


def ekf_update_step(x, p, y, r_meas):
    """Scalar-measurement Kalman update with Joseph-form covariance."""
    s = p[0, 0] + r_meas
    kgain = p[:, 0] / s
    xn = x + kgain * (y - x[0])
    ikh = np.eye(6)
    ikh[:, 0] -= kgain
    pn = ikh @ p @ ikh.T + r_meas * np.outer(kgain, kgain)
    pn = 0.5 * (pn + pn.T)
    return xn, pn


def ekf_run(wg, xi, dlag, kt, u_fine, y_meas, dt, qc, r_meas, x0, p0,
            clamp_floor=1e-6, snap_every=100):
    """Full continuous-discrete EKF pass over a measurement record.

    Per step: joint RK4 prediction of (x, P) with stage-sampled input, then a
    scalar measurement update.  x5 (the inertia state) is clamped at
    ``clamp_floor``; the number of clamps is returned as a diagnostic.

    Returns ``(xs, p_trace, p_snaps, p_final, clamped)`` where ``xs`` holds
    the post-update states (row 0 is the initial state), ``p_trace`` the
    covariance trace per step, and ``p_snaps`` covariance snapshots every
    ``snap_every`` steps.
    """
    nsteps = y_meas.shape[0]
    d = _ekf_scale(wg)
    dd = np.outer(d, d)
    x = np.array(x0, dtype=float, copy=True)
    p_s = dd * np.asarray(p0, dtype=float)
    qc_s = dd * np.asarray(qc, dtype=float)
    xs = np.zeros((nsteps + 1, 6))
    p_trace = np.zeros(nsteps + 1)
    xs[0] = x
    p_trace[0] = np.trace(p_s / dd)
    n_snaps = nsteps // snap_every + 1
    p_snaps = np.zeros((n_snaps, 6, 6))
    p_snaps[0] = p_s / dd
    snap_idx = 1
    clamped = 0
    for k in range(nsteps):
        stages = (u_fine[2 * k], u_fine[2 * k + 1], u_fine[2 * k + 2])
        x, p_s = _ekf_predict_scaled(x, p_s, stages, dt, qc_s, d,
                                     wg, xi, dlag, kt)
        if x[4] <= clamp_floor:
            x[4] = clamp_floor
            clamped += 1
        x, p_s = _ekf_update_scaled(x, p_s, y_meas[k], r_meas, d)
        if x[4] <= clamp_floor:
            x[4] = clamp_floor
            clamped += 1
        xs[k + 1] = x
        p_trace[k + 1] = np.trace(p_s / dd)
        if (k + 1) % snap_every == 0 and snap_idx < n_snaps:
            p_snaps[snap_idx] = p_s / dd
            snap_idx += 1
    return xs, p_trace, p_snaps[:snap_idx], p_s / dd, clamped
