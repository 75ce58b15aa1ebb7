"""Closed-form solutions of the elementwise and ratio subproblems."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, Unsupported

_D_FLOOR = 1e-15
_HALF_THRESHOLD = 54.0 ** (1.0 / 3.0) / 4.0


def shrink(v, mu):
    """Soft thresholding ``sign(v) * max(|v| - mu, 0)``."""
    if not mu > 0:
        raise InvalidArgument(f"shrink threshold must be positive, got {mu}")
    v = np.asarray(v, dtype=np.float64)
    return np.sign(v) * np.maximum(np.abs(v) - mu, 0.0)


def solve_tau(D):
    """Root ``tau >= 1`` of ``tau^3 - tau^2 = D`` for ``D >= 0``.

    Cardano's closed form, evaluated in extended precision and polished by
    one Newton step.  Returns ``np.longdouble`` (scalar or array).
    """
    D = np.asarray(D, dtype=np.longdouble)
    if np.any(D < 0):
        raise InvalidArgument("D must be non-negative")
    q = 27 * D + 2
    C = np.cbrt((q + np.sqrt(np.maximum(q * q - 4, 0))) / 2)
    tau = (1 + C + 1 / C) / 3
    f = tau * tau * (tau - 1) - D
    tau = tau - f / (tau * (3 * tau - 2))
    tau = np.where(D < _D_FLOOR, np.longdouble(1), tau)
    return tau[()] if tau.ndim == 0 else tau


@dataclass
class HUpdateResult:
    field: np.ndarray
    tau: float  # NaN on the random branch
    branch: str  # "scaled_g" or "random_direction"


def h_objective(h, a, g, rho2):
    """``a / ||h|| + rho2/2 ||h - g||^2``, the quantity minimized by :func:`h_update`."""
    return a / np.linalg.norm(h) + 0.5 * rho2 * np.sum((h - g) ** 2)


def h_update(g, a, rho2, rng_seed=0):
    """Minimize ``a / ||h||_2 + rho2/2 ||h - g||_2^2`` over ``h``.

    Parameters
    ----------
    g : ndarray
        ``grad u + b2``.
    a : float
        ``||grad u||_1``.
    rho2 : float
    rng_seed : int or numpy Generator
        Used only when ``g == 0``: the minimizer is then any vector of norm
        ``(a / rho2) ** (1/3)``; a standard-normal direction is drawn.
    """
    if not rho2 > 0:
        raise InvalidArgument(f"rho2 must be positive, got {rho2}")
    if a < 0:
        raise InvalidArgument(f"a must be non-negative, got {a}")
    g = np.asarray(g, dtype=np.float64)
    gn = float(np.sqrt(np.vdot(g, g)))
    if gn > 0.0:
        D = np.longdouble(a) / (np.longdouble(rho2) * np.longdouble(gn) ** 3)
        tau = solve_tau(D)
        return HUpdateResult(float(tau) * g, tau, "scaled_g")
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    e = rng.standard_normal(g.shape)
    radius = np.cbrt(a / rho2)
    e *= radius / np.sqrt(np.vdot(e, e))
    return HUpdateResult(e, float("nan"), "random_direction")


def lp_prox(v, mu, p=0.5):
    """Elementwise minimizer of ``mu |d|^(1/2) + (d - v)^2 / 2`` (half thresholding).

    Inputs at or below the threshold ``54^(1/3)/4 * (2 mu)^(2/3)`` map to 0.
    """
    if p != 0.5:
        raise Unsupported(f"only p = 0.5 is implemented, got p = {p}")
    if not mu > 0:
        raise InvalidArgument(f"lp_prox weight must be positive, got {mu}")
    v = np.asarray(v, dtype=np.float64)
    lam = 2.0 * mu
    thresh = _HALF_THRESHOLD * lam ** (2.0 / 3.0)
    # a few ulps of slack so that exact ties land on 0
    big = np.abs(v) > thresh * (1.0 + 8.0 * np.finfo(np.float64).eps)
    out = np.zeros_like(v)
    vb = v[big]
    phi = np.arccos(np.clip((lam / 8.0) * (np.abs(vb) / 3.0) ** -1.5, -1.0, 1.0))
    out[big] = (2.0 / 3.0) * vb * (1.0 + np.cos(2.0 * np.pi / 3.0 - 2.0 * phi / 3.0))
    return out


def box_project(u, lo, hi):
    """Clamp ``u`` elementwise to ``[lo, hi]``."""
    if not lo < hi:
        raise InvalidArgument(f"box requires lo < hi, got [{lo}, {hi}]")
    return np.clip(np.asarray(u, dtype=np.float64), lo, hi)
