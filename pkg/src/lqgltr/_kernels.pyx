# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled twins of the hot simulation kernels in ``_kernels_py``.

Same signatures and arithmetic as the pure-Python versions; selected at
import time by ``lqgltr.kernels``.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


def lti_loop(double[:, ::1] step_a, double[:, ::1] step_b, double[:, ::1] c,
             double[:, ::1] ak, double[:, ::1] bk, double[:, ::1] ck,
             double[:, ::1] dk, double[:, ::1] d_seq,
             double[::1] x0, double[::1] xk0, double blowup=1e12):
    """Sampled-data loop; see the Python twin for the step semantics."""
    cdef Py_ssize_t nsteps = d_seq.shape[0]
    cdef Py_ssize_t n = step_a.shape[0]
    cdef Py_ssize_t nk = ak.shape[0]
    cdef Py_ssize_t p = c.shape[0]
    cdef Py_ssize_t m = step_b.shape[1]
    y_arr = np.zeros((nsteps, p))
    u_arr = np.zeros((nsteps, m))
    cdef double[:, ::1] y = y_arr
    cdef double[:, ::1] u = u_arr
    x_arr = np.array(x0, dtype=float, copy=True)
    xk_arr = np.array(xk0, dtype=float, copy=True)
    xn_arr = np.zeros(n)
    xkn_arr = np.zeros(nk)
    yk_arr = np.zeros(p)
    uk_arr = np.zeros(m)
    cdef double[::1] x = x_arr
    cdef double[::1] xk = xk_arr
    cdef double[::1] xn = xn_arr
    cdef double[::1] xkn = xkn_arr
    cdef double[::1] yk = yk_arr
    cdef double[::1] uk = uk_arr
    cdef Py_ssize_t k, i, j
    cdef double acc, mx
    cdef long blow_index = -1
    for k in range(nsteps):
        for i in range(p):
            acc = d_seq[k, i]
            for j in range(n):
                acc += c[i, j] * x[j]
            yk[i] = acc
        for i in range(m):
            acc = 0.0
            for j in range(nk):
                acc += ck[i, j] * xk[j]
            for j in range(p):
                acc += dk[i, j] * yk[j]
            uk[i] = acc
        for i in range(p):
            y[k, i] = yk[i]
        for i in range(m):
            u[k, i] = uk[i]
        for i in range(nk):
            acc = 0.0
            for j in range(nk):
                acc += ak[i, j] * xk[j]
            for j in range(p):
                acc += bk[i, j] * yk[j]
            xkn[i] = acc
        for i in range(nk):
            xk[i] = xkn[i]
        mx = 0.0
        for i in range(n):
            acc = 0.0
            for j in range(n):
                acc += step_a[i, j] * x[j]
            for j in range(m):
                acc += step_b[i, j] * uk[j]
            xn[i] = acc
            if acc > mx:
                mx = acc
            elif -acc > mx:
                mx = -acc
        for i in range(n):
            x[i] = xn[i]
        for i in range(nk):
            if xk[i] > mx:
                mx = xk[i]
            elif -xk[i] > mx:
                mx = -xk[i]
        if mx > blowup:
            blow_index = k
            break
    return y_arr, u_arr, blow_index


def linear_rk4(double[:, ::1] a, b, double[::1] u_fine, double dt, x0):
    """Fixed-step RK4 of dx = A x + B u(t); u sampled at half steps."""
    cdef Py_ssize_t nsteps = (u_fine.shape[0] - 1) // 2
    cdef Py_ssize_t n = a.shape[0]
    b_arr = np.asarray(b, dtype=float).reshape(n)
    cdef double[::1] bvec = b_arr
    xs_arr = np.zeros((nsteps + 1, n))
    cdef double[:, ::1] xs = xs_arr
    x_arr = np.array(x0, dtype=float, copy=True).reshape(n)
    cdef double[::1] x = x_arr
    k1_arr = np.zeros(n); k2_arr = np.zeros(n)
    k3_arr = np.zeros(n); k4_arr = np.zeros(n)
    tmp_arr = np.zeros(n)
    cdef double[::1] k1 = k1_arr, k2 = k2_arr, k3 = k3_arr, k4 = k4_arr
    cdef double[::1] tmp = tmp_arr
    cdef Py_ssize_t k, i, j
    cdef double u0, um, u1, acc
    for i in range(n):
        xs[0, i] = x[i]
    for k in range(nsteps):
        u0 = u_fine[2 * k]
        um = u_fine[2 * k + 1]
        u1 = u_fine[2 * k + 2]
        for i in range(n):
            acc = bvec[i] * u0
            for j in range(n):
                acc += a[i, j] * x[j]
            k1[i] = acc
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k1[i]
        for i in range(n):
            acc = bvec[i] * um
            for j in range(n):
                acc += a[i, j] * tmp[j]
            k2[i] = acc
        for i in range(n):
            tmp[i] = x[i] + 0.5 * dt * k2[i]
        for i in range(n):
            acc = bvec[i] * um
            for j in range(n):
                acc += a[i, j] * tmp[j]
            k3[i] = acc
        for i in range(n):
            tmp[i] = x[i] + dt * k3[i]
        for i in range(n):
            acc = bvec[i] * u1
            for j in range(n):
                acc += a[i, j] * tmp[j]
            k4[i] = acc
        for i in range(n):
            x[i] = x[i] + (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
            xs[k + 1, i] = x[i]
    return xs_arr


cdef inline void _dynamics(double* x, double u, double wg, double xi,
                           double dlag, double kt, double* f) nogil:
    f[0] = x[1]
    f[1] = -wg * wg * x[0] - 2.0 * xi * wg * x[1] + wg * wg * x[2]
    f[2] = (-x[5] * x[2] + kt * x[3]) / x[4]
    f[3] = (-x[3] + u) / dlag
    f[4] = 0.0
    f[5] = 0.0


cdef inline void _jacobian(double* x, double wg, double xi, double dlag,
                           double kt, double* jac) nogil:
    cdef int i
    for i in range(36):
        jac[i] = 0.0
    jac[0 * 6 + 1] = 1.0
    jac[1 * 6 + 0] = -wg * wg
    jac[1 * 6 + 1] = -2.0 * xi * wg
    jac[1 * 6 + 2] = wg * wg
    jac[2 * 6 + 2] = -x[5] / x[4]
    jac[2 * 6 + 3] = kt / x[4]
    jac[2 * 6 + 4] = (x[5] * x[2] - kt * x[3]) / (x[4] * x[4])
    jac[2 * 6 + 5] = -x[2] / x[4]
    jac[3 * 6 + 3] = -1.0 / dlag


cdef inline void _jacobian_scaled(double* x, double wg, double xi,
                                  double dlag, double kt, double* d,
                                  double* jac) nogil:
    # J_s[i,j] = d[i] * J[i,j] / d[j]; propagating the covariance in scaled
    # coordinates (x2 carries a wg factor) avoids the non-normal blow-up of
    # the RK4 polynomial in raw coordinates.
    cdef int i, j
    _jacobian(x, wg, xi, dlag, kt, jac)
    for i in range(6):
        for j in range(6):
            if jac[i * 6 + j] != 0.0:
                jac[i * 6 + j] = jac[i * 6 + j] * d[i] / d[j]


cdef inline void _cov_rate(double* jac, double* p, double* qc,
                           double* pdot) nogil:
    # pdot = jac p + p jac^T + qc
    cdef int i, j, k
    cdef double acc
    for i in range(6):
        for j in range(6):
            acc = qc[i * 6 + j]
            for k in range(6):
                acc += jac[i * 6 + k] * p[k * 6 + j]
                acc += p[i * 6 + k] * jac[j * 6 + k]
            pdot[i * 6 + j] = acc


cdef inline void _ekf_rates(double* x, double u, double* p, double* qc,
                            double wg, double xi, double dlag, double kt,
                            double* d, double* fx, double* fp,
                            double* jac) nogil:
    _dynamics(x, u, wg, xi, dlag, kt, fx)
    _jacobian_scaled(x, wg, xi, dlag, kt, d, jac)
    _cov_rate(jac, p, qc, fp)


def ekf_run(double wg, double xi, double dlag, double kt,
            double[::1] u_fine, double[::1] y_meas, double dt,
            double[:, ::1] qc_in, double r_meas,
            double[::1] x0, double[:, ::1] p0,
            double clamp_floor=1e-6, long snap_every=100):
    """Full continuous-discrete EKF pass; see the Python twin for semantics."""
    cdef Py_ssize_t nsteps = y_meas.shape[0]
    xs_arr = np.zeros((nsteps + 1, 6))
    p_trace_arr = np.zeros(nsteps + 1)
    cdef Py_ssize_t n_snaps = nsteps // snap_every + 1
    p_snaps_arr = np.zeros((n_snaps, 6, 6))
    cdef double[:, ::1] xs = xs_arr
    cdef double[::1] p_trace = p_trace_arr
    cdef double[:, :, ::1] p_snaps = p_snaps_arr

    cdef double x[6]
    cdef double p[36]
    cdef double qc[36]
    cdef double dvec[6]
    cdef double fx1[6], fx2[6], fx3[6], fx4[6]
    cdef double fp1[36], fp2[36], fp3[36], fp4[36]
    cdef double xt[6]
    cdef double pt[36]
    cdef double jac[36]
    cdef double kg[6]
    cdef double ikh[36]
    cdef double work[36]
    cdef Py_ssize_t i, j, k, kk
    cdef double acc, s, innov, tr
    cdef long clamped = 0
    cdef Py_ssize_t snap_idx = 1

    # covariance is propagated in scaled coordinates: p_s = D p D with
    # D = diag(dvec); dvec[1] = 1/wg tames the gyro-block non-normality
    for i in range(6):
        dvec[i] = 1.0
    dvec[1] = 1.0 / wg
    for i in range(6):
        x[i] = x0[i]
        for j in range(6):
            p[i * 6 + j] = p0[i, j] * dvec[i] * dvec[j]
            qc[i * 6 + j] = qc_in[i, j] * dvec[i] * dvec[j]
    tr = 0.0
    for i in range(6):
        xs[0, i] = x[i]
        tr += p[i * 6 + i] / (dvec[i] * dvec[i])
        for j in range(6):
            p_snaps[0, i, j] = p[i * 6 + j] / (dvec[i] * dvec[j])
    p_trace[0] = tr

    for k in range(nsteps):
        # --- joint RK4 prediction ---
        _ekf_rates(x, u_fine[2 * k], p, qc, wg, xi, dlag, kt, dvec,
                   fx1, fp1, jac)
        for i in range(6):
            xt[i] = x[i] + 0.5 * dt * fx1[i]
        for i in range(36):
            pt[i] = p[i] + 0.5 * dt * fp1[i]
        _ekf_rates(xt, u_fine[2 * k + 1], pt, qc, wg, xi, dlag, kt, dvec,
                   fx2, fp2, jac)
        for i in range(6):
            xt[i] = x[i] + 0.5 * dt * fx2[i]
        for i in range(36):
            pt[i] = p[i] + 0.5 * dt * fp2[i]
        _ekf_rates(xt, u_fine[2 * k + 1], pt, qc, wg, xi, dlag, kt, dvec,
                   fx3, fp3, jac)
        for i in range(6):
            xt[i] = x[i] + dt * fx3[i]
        for i in range(36):
            pt[i] = p[i] + dt * fp3[i]
        _ekf_rates(xt, u_fine[2 * k + 2], pt, qc, wg, xi, dlag, kt, dvec,
                   fx4, fp4, jac)
        for i in range(6):
            x[i] = x[i] + (dt / 6.0) * (fx1[i] + 2.0 * fx2[i] + 2.0 * fx3[i] + fx4[i])
        for i in range(36):
            p[i] = p[i] + (dt / 6.0) * (fp1[i] + 2.0 * fp2[i] + 2.0 * fp3[i] + fp4[i])
        for i in range(6):
            for j in range(i + 1, 6):
                acc = 0.5 * (p[i * 6 + j] + p[j * 6 + i])
                p[i * 6 + j] = acc
                p[j * 6 + i] = acc
        if x[4] <= clamp_floor:
            x[4] = clamp_floor
            clamped += 1

        # --- scalar measurement update, Joseph form (x1 is unscaled) ---
        s = p[0] + r_meas
        for i in range(6):
            kg[i] = p[i * 6 + 0] / s
        innov = y_meas[k] - x[0]
        for i in range(6):
            x[i] = x[i] + (kg[i] / dvec[i]) * innov
        for i in range(36):
            ikh[i] = 0.0
        for i in range(6):
            ikh[i * 6 + i] = 1.0
            ikh[i * 6 + 0] -= kg[i]
        # work = ikh @ p
        for i in range(6):
            for j in range(6):
                acc = 0.0
                for kk in range(6):
                    acc += ikh[i * 6 + kk] * p[kk * 6 + j]
                work[i * 6 + j] = acc
        # p = work @ ikh^T + r kg kg^T
        for i in range(6):
            for j in range(6):
                acc = r_meas * kg[i] * kg[j]
                for kk in range(6):
                    acc += work[i * 6 + kk] * ikh[j * 6 + kk]
                pt[i * 6 + j] = acc
        for i in range(6):
            for j in range(6):
                p[i * 6 + j] = 0.5 * (pt[i * 6 + j] + pt[j * 6 + i])
        if x[4] <= clamp_floor:
            x[4] = clamp_floor
            clamped += 1

        tr = 0.0
        for i in range(6):
            xs[k + 1, i] = x[i]
            tr += p[i * 6 + i] / (dvec[i] * dvec[i])
        p_trace[k + 1] = tr
        if (k + 1) % snap_every == 0 and snap_idx < n_snaps:
            for i in range(6):
                for j in range(6):
                    p_snaps[snap_idx, i, j] = p[i * 6 + j] / (dvec[i] * dvec[j])
            snap_idx += 1

    p_final = np.zeros((6, 6))
    for i in range(6):
        for j in range(6):
            p_final[i, j] = p[i * 6 + j] / (dvec[i] * dvec[j])
    return xs_arr, p_trace_arr, p_snaps_arr[:snap_idx], p_final, clamped
