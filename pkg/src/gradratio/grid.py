"""Finite differences, inner products and norms on an ``m x n`` pixel grid.

Images are 2-D float64 arrays of shape ``(m, n)`` stored row-major.  A
gradient field is a float64 array of shape ``(2, m, n)``: channel 0 holds
differences along x (columns, axis 1), channel 1 along y (rows, axis 0).
The forward difference at the last index in each direction is zero
(Neumann boundary), which keeps ``||grad||_2^2 <= 8``.
"""

import numpy as np

from .errors import InvalidArgument


def as_image(u):
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 2 or u.size == 0:
        raise InvalidArgument(f"expected a non-empty 2-D image, got shape {u.shape}")
    return u


def as_field(p):
    p = np.asarray(p, dtype=np.float64)
    if p.ndim != 3 or p.shape[0] != 2:
        raise InvalidArgument(f"expected a (2, m, n) gradient field, got shape {p.shape}")
    return p


def gradient(u):
    """Forward-difference gradient with zero difference on the far boundary.

    Parameters
    ----------
    u : ndarray, shape (m, n)

    Returns
    -------
    ndarray, shape (2, m, n)
        ``[d/dx u, d/dy u]``.
    """
    u = as_image(u)
    p = np.zeros((2,) + u.shape)
    np.subtract(u[:, 1:], u[:, :-1], out=p[0, :, :-1])
    np.subtract(u[1:, :], u[:-1, :], out=p[1, :-1, :])
    return p


def divergence_adjoint(p):
    """Apply the transpose of :func:`gradient` (i.e. minus the divergence)."""
    p = as_field(p)
    px, py = p[0], p[1]
    out = np.zeros(p.shape[1:])
    # x channel: (G^T p)_j = p_{j-1} - p_j, with p_{n-1} never read
    out[:, :-1] -= px[:, :-1]
    out[:, 1:] += px[:, :-1]
    out[:-1, :] -= py[:-1, :]
    out[1:, :] += py[:-1, :]
    return out


def laplacian(u):
    """Neumann 5-point Laplacian, ``-G^T G u``."""
    return -divergence_adjoint(gradient(u))


def inner(x, y):
    """Euclidean inner product over every entry (images or fields)."""
    return float(np.vdot(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64)))


def l1_norm(x):
    return float(np.abs(x).sum())


def l2_norm(x):
    return float(np.sqrt(np.vdot(x, x)))


def norms(x):
    """Return ``{"l1": ..., "l2": ...}`` over all entries of an image or field.

    For a gradient field the l1 value is the anisotropic total variation
    ``||d/dx u||_1 + ||d/dy u||_1``.
    """
    x = np.asarray(x, dtype=np.float64)
    return {"l1": l1_norm(x), "l2": l2_norm(x)}


def linear_index(i, j, m):
    """1-based linear index ``(i - 1) * m + j`` of pixel ``(i, j)``."""
    return (i - 1) * m + j


def gradient_norm_bound(shape, iters=200, seed=0):
    """Power-iteration estimate of the largest eigenvalue of ``G^T G``."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(shape)
    x /= l2_norm(x)
    lam = 0.0
    for _ in range(iters):
        y = divergence_adjoint(gradient(x))
        lam = inner(x, y)
        nrm = l2_norm(y)
        if nrm == 0.0:
            return 0.0
        x = y / nrm
    return lam
