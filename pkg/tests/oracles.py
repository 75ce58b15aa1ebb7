"""Slow, independent reference implementations used only by the tests."""

import math

import numpy as np


def gradient_loop(u):
    m, n = u.shape
    gx = np.zeros((m, n))
    gy = np.zeros((m, n))
    for i in range(m):
        for j in range(n):
            if j + 1 < n:
                gx[i, j] = u[i, j + 1] - u[i, j]
            if i + 1 < m:
                gy[i, j] = u[i + 1, j] - u[i, j]
    return np.stack([gx, gy])


def neumann_stencil(u):
    """5-point Laplacian that only couples in-grid neighbours."""
    m, n = u.shape
    out = np.zeros_like(u)
    for i in range(m):
        for j in range(n):
            for di, dj in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                a, b = i + di, j + dj
                if 0 <= a < m and 0 <= b < n:
                    out[i, j] += u[a, b] - u[i, j]
    return out


def brute_prox(penalty, v, lo=-8.0, hi=8.0, n=200001, refine=3):
    """Minimize ``penalty(d) + (d - v)^2 / 2`` by grid search plus local refinement."""
    grid = np.linspace(lo, hi, n)
    step = grid[1] - grid[0]
    obj = penalty(grid) + 0.5 * (grid - v) ** 2
    best = grid[np.argmin(obj)]
    for _ in range(refine):
        grid = np.linspace(best - 2 * step, best + 2 * step, 2001)
        grid = np.append(grid, 0.0)
        step = grid[1] - grid[0]
        obj = penalty(grid) + 0.5 * (grid - v) ** 2
        best = grid[np.argmin(obj)]
    return best


def clip_length(start, direction, half):
    """Length of the ray ``start + t * direction`` inside ``[-half, half]^2`` (Liang-Barsky)."""
    t0, t1 = -math.inf, math.inf
    for s, d in zip(start, direction):
        if abs(d) < 1e-15:
            if not -half <= s <= half:
                return 0.0
            continue
        a, b = (-half - s) / d, (half - s) / d
        t0, t1 = max(t0, min(a, b)), min(t1, max(a, b))
    nrm = math.hypot(*direction)
    return max(0.0, t1 - t0) * nrm


def rmse_loop(a, b):
    total = 0.0
    count = 0
    for x, y in zip(np.ravel(a), np.ravel(b)):
        total += (x - y) ** 2
        count += 1
    return math.sqrt(total) / count


def ssim_loop(a, b, w=8, c1=0.05, c2=0.05):
    m, n = a.shape
    vals = []
    for i in range(m - w + 1):
        for j in range(n - w + 1):
            x = a[i:i + w, j:j + w].ravel()
            y = b[i:i + w, j:j + w].ravel()
            mx, my = sum(x) / x.size, sum(y) / y.size
            vx = sum((x - mx) ** 2) / x.size
            vy = sum((y - my) ** 2) / y.size
            cxy = sum((x - mx) * (y - my)) / x.size
            vals.append((2 * mx * my + c1) * (2 * cxy + c2) / ((mx ** 2 + my ** 2 + c1) * (vx + vy + c2)))
    return sum(vals) / len(vals)


def scalar_tau(D):
    """Bisection for ``tau^3 - tau^2 = D`` on ``[1, 1 + D^(1/3) + 1]``."""
    lo, hi = 1.0, 2.0 + D ** (1.0 / 3.0)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid ** 3 - mid ** 2 < D:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def brute_prox_batch(penalty, v, mu, lo=-8.0, hi=8.0, n=40001, refine=4, chunk=64):
    """Vectorized :func:`brute_prox` for ``mu * penalty(d) + (d - v)^2 / 2`` over many scalars."""
    v = np.asarray(v, dtype=np.float64)
    mu = np.broadcast_to(np.asarray(mu, dtype=np.float64), v.shape)
    out = np.empty_like(v)
    base = np.append(np.linspace(lo, hi, n), 0.0)
    step0 = (hi - lo) / (n - 1)
    for s in range(0, v.size, chunk):
        vv, mm = v[s:s + chunk, None], mu[s:s + chunk, None]
        obj = mm * penalty(base[None, :]) + 0.5 * (base[None, :] - vv) ** 2
        best = base[np.argmin(obj, axis=1)]
        step = step0
        for _ in range(refine):
            offs = np.linspace(-2 * step, 2 * step, 401)
            grid = np.concatenate([best[:, None] + offs[None, :], np.zeros((best.size, 1))], axis=1)
            obj = mm * penalty(grid) + 0.5 * (grid - vv) ** 2
            best = grid[np.arange(best.size), np.argmin(obj, axis=1)]
            step = offs[1] - offs[0]
        out[s:s + chunk] = best
    return out
