"""Simultaneous algebraic reconstruction technique."""

import math
import time

import numpy as np

from ..assess import rmse as rmse_metric
from ..errors import InvalidArgument
from .config import ConvergenceTrace, flat_measurements, rel_change


def _safe_inverse(x):
    out = np.zeros_like(x)
    nz = x > 0
    out[nz] = 1.0 / x[nz]
    return out


def reconstruct_sart(A, f, omega=1.0, iters=100, box=None, ground_truth=None, *, shape=None):
    """``u <- u + omega V^-1 A^T W (f - A u)`` with column sums ``V`` and inverse row sums ``W``.

    Rays or pixels with zero total weight are left untouched.  With ``box``
    the iterate is clamped after every sweep.
    """
    if not 0 < omega < 2:
        raise InvalidArgument(f"relaxation must lie in (0, 2), got {omega}")
    if iters < 1:
        raise InvalidArgument("iters must be >= 1")
    if box is not None and not box[0] < box[1]:
        raise InvalidArgument(f"box requires lo < hi, got {box}")
    mat = A.matrix if hasattr(A, "matrix") else A
    fv = flat_measurements(f)
    if fv.size != mat.shape[0]:
        raise InvalidArgument(f"sinogram has {fv.size} bins, matrix has {mat.shape[0]} rows")
    if shape is None:
        side = math.isqrt(mat.shape[1])
        shape = (side, side) if side * side == mat.shape[1] else (mat.shape[1],)
    absA = abs(mat)
    w_row = _safe_inverse(np.asarray(absA.sum(axis=1)).ravel())
    v_col = _safe_inverse(np.asarray(absA.sum(axis=0)).ravel())

    u = np.zeros(mat.shape[1])
    trace = ConvergenceTrace()
    t0 = time.perf_counter()
    for k in range(1, iters + 1):
        resid = fv - mat @ u
        u_new = u + omega * v_col * (mat.T @ (w_row * resid))
        if box is not None:
            np.clip(u_new, box[0], box[1], out=u_new)
        change = rel_change(u_new, u)
        u = u_new
        img = u.reshape(shape)
        trace.record(iteration=k, objective=0.5 * float(np.sum(resid * resid)), rel_change=change,
                     rmse=rmse_metric(img, ground_truth) if ground_truth is not None else math.nan,
                     seconds=time.perf_counter() - t0)
    trace.stop_reason = "iters"
    return u.reshape(shape), trace
