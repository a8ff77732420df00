"""Dense matrix-equation kernels: Lyapunov and continuous algebraic Riccati.

Matrices are plain ``numpy.ndarray``.  Sizes here stay small (the largest
system in the pipeline has order 14, random test instances go up to ~30), so
the Lyapunov solver uses the exact Kronecker-product linear system and the
Riccati solver uses Newton-Kleinman iteration, each Newton step being one
Lyapunov solve.  Eigenvalues and singular values are delegated to LAPACK
through numpy.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (
    ConvergenceFailure,
    DimensionMismatch,
    NotDetectable,
    NotStabilizable,
    NotStable,
)


@dataclass(frozen=True)
class SolverTolerances:
    """Central numeric tolerances for the equation solvers."""

    lyapunov_residual: float = 1e-9
    riccati_residual: float = 1e-8
    symmetry_rtol: float = 1e-12
    rank_rtol: float = 1e-9
    max_newton_iterations: int = 60


DEFAULT_TOLERANCES = SolverTolerances()


@dataclass(frozen=True)
class SolverReport:
    """Outcome of one matrix-equation solve."""

    residual_norm: float
    iterations: int
    converged: bool


def as_matrix(m, name="matrix"):
    """Coerce to a 2-D float array and verify finiteness."""
    a = np.atleast_2d(np.asarray(m, dtype=float))
    if a.ndim != 2:
        raise DimensionMismatch(f"{name} must be 2-D, got ndim={a.ndim}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite entries")
    return a


def eigenvalues(a):
    """Eigenvalues of a square real matrix."""
    a = as_matrix(a, "A")
    if a.shape[0] != a.shape[1]:
        raise DimensionMismatch(f"expected square matrix, got {a.shape}")
    if a.shape[0] == 0:
        return np.zeros(0, dtype=complex)
    return np.linalg.eigvals(a)


def spectral_abscissa(a):
    """max Re(lambda); -inf for the empty matrix."""
    eig = eigenvalues(a)
    return float(np.max(eig.real)) if eig.size else -np.inf


def is_hurwitz(a, margin=0.0):
    return spectral_abscissa(a) < -margin


def _require_square_same(a, q):
    a = as_matrix(a, "A")
    q = as_matrix(q, "Q")
    n = a.shape[0]
    if a.shape != (n, n):
        raise DimensionMismatch(f"A must be square, got {a.shape}")
    if q.shape != (n, n):
        raise DimensionMismatch(f"Q must match A, got {q.shape} vs {a.shape}")
    return a, q, n


def solve_lyapunov(a, q, tolerances=DEFAULT_TOLERANCES):
    """Solve A X + X A^T + Q = 0 for stable A and symmetric Q.

    Returns ``(X, SolverReport)``.  The residual is
    ``||A X + X A^T + Q||_F / max(1, ||Q||_F)``.

    Raises
    ------
    NotStable
        If A has an eigenvalue with nonnegative real part.
    DimensionMismatch
        If shapes are inconsistent.
    """
    a, q, n = _require_square_same(a, q)
    if n == 0:
        return np.zeros((0, 0)), SolverReport(0.0, 0, True)
    if not is_hurwitz(a):
        raise NotStable(
            f"A has spectral abscissa {spectral_abscissa(a):.3e} >= 0"
        )
    qs = 0.5 * (q + q.T)
    eye = np.eye(n)
    # vec is column-major: vec(AX) = (I (x) A) vec X, vec(X A^T) = (A (x) I) vec X
    coeff = np.kron(eye, a) + np.kron(a, eye)
    x = np.linalg.solve(coeff, -qs.flatten(order="F"))
    x = x.reshape((n, n), order="F")
    x = 0.5 * (x + x.T)
    # one step of iterative refinement to push down the conditioning floor
    res = a @ x + x @ a.T + qs
    dx = np.linalg.solve(coeff, -res.flatten(order="F")).reshape((n, n), order="F")
    x = 0.5 * ((x + dx) + (x + dx).T)
    residual = np.linalg.norm(a @ x + x @ a.T + qs) / max(1.0, np.linalg.norm(qs))
    return x, SolverReport(float(residual), 1, residual <= tolerances.lyapunov_residual)


def _unstable_eigs(a, margin=1e-9):
    eig = eigenvalues(a)
    return eig[eig.real >= -margin]


def _pbh_stabilizable(a, b, rtol):
    """PBH test on every eigenvalue with nonnegative real part."""
    n = a.shape[0]
    scale = max(1.0, np.linalg.norm(a), np.linalg.norm(b))
    for lam in _unstable_eigs(a):
        pencil = np.hstack([a - lam * np.eye(n), b.astype(complex)])
        smin = np.linalg.svd(pencil, compute_uv=False)[-1]
        if smin < rtol * scale:
            return False, lam
    return True, None


def _psd_sqrt(q):
    """Symmetric PSD square root via eigendecomposition (negatives clipped)."""
    w, v = np.linalg.eigh(0.5 * (q + q.T))
    w = np.clip(w, 0.0, None)
    return (v * np.sqrt(w)) @ v.T


def _stabilizing_gain(a, b, rtol):
    """Initial gain K with A - B K Hurwitz, via eigenvalue-shift stabilization.

    Solves (A + beta I) P + P (A + beta I)^T = 2 B B^T for a shift beta past
    the spectral abscissa and takes K = B^T pinv(P) (Bass's method).
    """
    n = a.shape[0]
    if is_hurwitz(a):
        return np.zeros((b.shape[1], n))
    alpha = spectral_abscissa(a)
    beta = abs(alpha) + 0.5 * float(np.linalg.norm(a,
                                                   ord="fro")) / max(1, n) + 1.0
    for _ in range(4):
        shifted = -(a + beta * np.eye(n))
        try:
            p, _ = solve_lyapunov(shifted, 2.0 * b @ b.T)
        except NotStable:
            beta *= 2.0
            continue
        k = b.T @ np.linalg.pinv(p, rcond=1e-12)
        if is_hurwitz(a - b @ k):
            return k
        beta *= 2.0
    raise NotStabilizable("eigenvalue-shift stabilization failed to produce "
                          "a stabilizing initial gain")


def solve_care(a, b, q, r, tolerances=DEFAULT_TOLERANCES, initial_gain=None):
    """Stabilizing solution of A^T X + X A - X B R^-1 B^T X + Q = 0.

    Newton-Kleinman iteration: starting from a stabilizing gain, each step
    solves one Lyapunov equation and updates K = R^-1 B^T X.  Returns
    ``(X, SolverReport)`` with X symmetric PSD and A - B R^-1 B^T X Hurwitz.

    ``initial_gain`` may supply a known stabilizing gain (e.g. when sweeping
    R = rho I over descending rho, the previous gain warm-starts the next
    solve).

    Raises
    ------
    NotStabilizable / NotDetectable
        PBH preconditions violated.
    ConvergenceFailure
        Residual stayed above tolerance; carries the best residual reached.
    """
    a = as_matrix(a, "A")
    b = as_matrix(b, "B")
    q = as_matrix(q, "Q")
    r = as_matrix(r, "R")
    n = a.shape[0]
    m = b.shape[1]
    if a.shape != (n, n) or b.shape[0] != n or q.shape != (n, n) or r.shape != (m, m):
        raise DimensionMismatch(
            f"inconsistent CARE shapes A{a.shape} B{b.shape} Q{q.shape} R{r.shape}"
        )
    q = 0.5 * (q + q.T)
    r = 0.5 * (r + r.T)
    if n == 0:
        return np.zeros((0, 0)), SolverReport(0.0, 0, True)
    if np.any(np.linalg.eigvalsh(r) <= 0.0):
        raise ValueError("R must be symmetric positive definite")

    ok, lam = _pbh_stabilizable(a, b, tolerances.rank_rtol)
    if not ok:
        raise NotStabilizable(f"uncontrollable unstable mode at {lam:.4g}")
    ok, lam = _pbh_stabilizable(a.T, _psd_sqrt(q).T, tolerances.rank_rtol)
    if not ok:
        raise NotDetectable(f"mode at {lam:.4g} unobservable through Q^(1/2)")

    if initial_gain is not None:
        k = as_matrix(initial_gain, "initial_gain")
        if k.shape != (m, n):
            raise DimensionMismatch(f"initial_gain must be {(m, n)}, got {k.shape}")
        if not is_hurwitz(a - b @ k):
            k = _stabilizing_gain(a, b, tolerances.rank_rtol)
    else:
        k = _stabilizing_gain(a, b, tolerances.rank_rtol)

    def residual_of(x):
        # relative to the natural scale of the equation's terms
        lin_term = a.T @ x + x @ a
        gain_term = x @ b @ np.linalg.solve(r, b.T @ x)
        res = lin_term - gain_term + q
        scale = max(1.0, np.linalg.norm(q) + np.linalg.norm(lin_term)
                    + np.linalg.norm(gain_term))
        return res, np.linalg.norm(res) / scale

    # first Kleinman step from the stabilizing gain, then Newton in
    # increment form: solving for the correction keeps full accuracy once
    # the residual is small.
    a_cl = a - b @ k
    x, _ = solve_lyapunov(a_cl.T, q + k.T @ r @ k)
    best_res = np.inf
    for it in range(1, tolerances.max_newton_iterations + 1):
        res_mat, rel = residual_of(x)
        best_res = min(best_res, rel)
        if rel <= tolerances.riccati_residual:
            k = np.linalg.solve(r, b.T @ x)
            if not is_hurwitz(a - b @ k):
                raise ConvergenceFailure(
                    "converged residual but closed loop not Hurwitz",
                    residual=rel,
                )
            return 0.5 * (x + x.T), SolverReport(float(rel), it, True)
        k = np.linalg.solve(r, b.T @ x)
        a_cl = a - b @ k
        if not is_hurwitz(a_cl):
            raise ConvergenceFailure(
                "Newton iterate lost the stabilizing property", residual=rel
            )
        dx, _ = solve_lyapunov(a_cl.T, res_mat)
        x = 0.5 * ((x + dx) + (x + dx).T)
    raise ConvergenceFailure(
        f"Newton-Kleinman stalled at residual {best_res:.3e} "
        f"after {tolerances.max_newton_iterations} iterations",
        residual=best_res,
    )


def svd_values(m):
    """Singular values of a real or complex matrix, descending."""
    a = np.atleast_2d(np.asarray(m))
    if a.ndim != 2:
        raise DimensionMismatch(f"expected 2-D matrix, got ndim={a.ndim}")
    if a.size and not np.all(np.isfinite(a)):
        raise ValueError("matrix contains non-finite entries")
    if a.size == 0:
        return np.zeros(min(a.shape))
    return np.linalg.svd(a, compute_uv=False)
