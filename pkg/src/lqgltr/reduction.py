"""Balanced truncation and bilinear (Tustin) discretization."""

from dataclasses import dataclass

import numpy as np

from .errors import NearSingularGramian, NotStable, SingularTransformation
from .numerics import solve_lyapunov
from .systems import DiscreteStateSpaceModel, StateSpaceModel


def gramians(sys):
    """Controllability and observability gramians of a stable system.

    Solves A Wc + Wc A^T + B B^T = 0 and A^T Wo + Wo A + C^T C = 0.
    """
    if not sys.is_stable():
        raise NotStable("gramians require a Hurwitz A matrix")
    wc, _ = solve_lyapunov(sys.A, sys.B @ sys.B.T)
    wo, _ = solve_lyapunov(sys.A.T, sys.C.T @ sys.C)
    return wc, wo


def _psd_factor(w):
    """Lower-triangular-ish factor L with L L^T = W; Cholesky with an
    eigendecomposition fallback for semidefinite gramians."""
    w = 0.5 * (w + w.T)
    try:
        return np.linalg.cholesky(w)
    except np.linalg.LinAlgError:
        vals, vecs = np.linalg.eigh(w)
        vals = np.clip(vals, 0.0, None)
        return vecs * np.sqrt(vals)


@dataclass(frozen=True)
class BalancedRealization:
    """System in balanced coordinates with its Hankel singular values."""

    system: StateSpaceModel
    hankel_values: np.ndarray


def balanced_realization(sys):
    """Square-root balancing: gramian Cholesky factors and an SVD of their
    cross product give the balancing transform."""
    wc, wo = gramians(sys)
    lc = _psd_factor(wc)
    lo = _psd_factor(wo)
    u, sv, vt = np.linalg.svd(lo.T @ lc)
    hankel = sv.copy()
    if hankel.size and hankel[0] > 0.0:
        floor = 1e-10 * hankel[0]
    else:
        floor = 0.0
    safe = np.maximum(hankel, max(floor, 1e-300))
    sqrt_inv = 1.0 / np.sqrt(safe)
    t = lc @ vt.T * sqrt_inv
    tinv = (sqrt_inv[:, None] * u.T) @ lo.T
    balanced = StateSpaceModel(tinv @ sys.A @ t, tinv @ sys.B,
                               sys.C @ t, sys.D)
    return BalancedRealization(system=balanced, hankel_values=hankel)


def hankel_singular_values(sys):
    return balanced_realization(sys).hankel_values


def balance_and_truncate(sys, target_order):
    """Balanced truncation to ``target_order`` states.

    Returns ``(reduced, error_bound)`` with the classical bound
    ``||G - G_r||_inf <= 2 * sum of discarded Hankel values``.

    Raises NearSingularGramian if any retained Hankel value is below
    1e-10 of the largest (the balancing transform would be meaningless).
    """
    n = sys.n_states
    if not (1 <= target_order <= n):
        raise ValueError(f"target_order must be in [1, {n}], got {target_order}")
    bal = balanced_realization(sys)
    hankel = bal.hankel_values
    if hankel[0] <= 0.0 or np.any(hankel[:target_order] < 1e-10 * hankel[0]):
        raise NearSingularGramian(
            "retained Hankel values below 1e-10 of the largest; "
            f"values: {hankel}"
        )
    k = target_order
    b = bal.system
    reduced = StateSpaceModel(b.A[:k, :k], b.B[:k, :], b.C[:, :k], b.D)
    error_bound = 2.0 * float(np.sum(hankel[k:]))
    return reduced, error_bound


def bilinear_discretize(sys, sample_period):
    """Exact Tustin map s = (2/Ts)(z - 1)/(z + 1) applied to a state-space
    model; preserves the DC gain and maps Hurwitz to Schur stability."""
    if not (sample_period > 0.0):
        raise ValueError(f"sample_period must be > 0, got {sample_period}")
    n = sys.n_states
    if n == 0:
        return DiscreteStateSpaceModel(sys.A, sys.B, sys.C, sys.D,
                                       sample_period)
    a = sample_period / 2.0
    eye = np.eye(n)
    m = eye - a * sys.A
    if abs(np.linalg.det(m)) < 1e-300:
        raise SingularTransformation(
            f"I - (Ts/2) A is singular at Ts = {sample_period}"
        )
    minv = np.linalg.inv(m)
    ad = minv @ (eye + a * sys.A)
    bd = sample_period * (minv @ sys.B)
    cd = sys.C @ minv
    dd = sys.D + a * (sys.C @ minv @ sys.B)
    return DiscreteStateSpaceModel(ad, bd, cd, dd, sample_period)
