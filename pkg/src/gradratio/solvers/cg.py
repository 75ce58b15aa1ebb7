"""Conjugate gradients for the symmetric positive definite u-subproblems."""

import numpy as np

from ..errors import NumericalBreakdown


def cg_solve(apply_M, rhs, x0=None, tol=1e-8, max_iters=50):
    """Solve ``M x = rhs`` for SPD ``M`` given as a callable.

    Stops once ``||M x - rhs|| <= tol * ||rhs||`` or after ``max_iters``
    iterations, warm-started from ``x0``.

    Returns
    -------
    x : ndarray
    residual_norm : float
        ``||M x - rhs||`` of the recursively updated residual.
    iters : int
    """
    rhs = np.asarray(rhs, dtype=np.float64)
    x = np.zeros_like(rhs) if x0 is None else np.array(x0, dtype=np.float64, copy=True)
    r = rhs - apply_M(x) if x0 is not None else rhs.copy()
    bnorm = float(np.linalg.norm(rhs))
    rr = float(np.vdot(r, r))
    if not np.isfinite(rr):
        raise NumericalBreakdown("non-finite residual in CG")
    target = tol * bnorm
    if bnorm == 0.0:
        return np.zeros_like(rhs), 0.0, 0
    if np.sqrt(rr) <= target:
        return x, float(np.sqrt(rr)), 0
    p = r.copy()
    it = 0
    while it < max_iters:
        Mp = apply_M(p)
        pMp = float(np.vdot(p, Mp))
        if not np.isfinite(pMp) or pMp <= 0.0:
            raise NumericalBreakdown(f"CG curvature p^T M p = {pMp} at iteration {it}")
        alpha = rr / pMp
        x += alpha * p
        r -= alpha * Mp
        rr_new = float(np.vdot(r, r))
        it += 1
        if not np.isfinite(rr_new):
            raise NumericalBreakdown("non-finite residual in CG")
        if np.sqrt(rr_new) <= target:
            rr = rr_new
            break
        p *= rr_new / rr
        p += r
        rr = rr_new
    return x, float(np.sqrt(rr)), it
