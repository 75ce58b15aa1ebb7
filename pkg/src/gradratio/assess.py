"""Measurement noise and image-quality metrics."""

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import InvalidArgument
from .projector import Sinogram

SSIM_WINDOW = 8
SSIM_C1 = 0.05
SSIM_C2 = 0.05


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"  # "gaussian", "poisson" or "none"
    gaussian_level: float = 0.0
    i0: float = 1e5
    seed: int = 0

    def __post_init__(self):
        if self.kind not in ("gaussian", "poisson", "none"):
            raise InvalidArgument(f"unknown noise kind {self.kind!r}")
        if self.gaussian_level < 0:
            raise InvalidArgument("gaussian_level must be non-negative")
        if not self.i0 > 0:
            raise InvalidArgument("i0 must be positive")


def add_noise(f, spec):
    """Return a noisy copy of sinogram ``f``.

    Gaussian: i.i.d. ``N(0, (level * max f)^2)`` added to every bin.
    Poisson: counts ``k ~ Poisson(I0 exp(-f))``, converted back to line
    integrals ``-log(max(k, 1) / I0)``.
    """
    sino = f if isinstance(f, Sinogram) else Sinogram(f)
    data = sino.data
    if spec.kind == "none" or (spec.kind == "gaussian" and spec.gaussian_level == 0):
        return Sinogram(data.copy(), sino.geometry)
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "gaussian":
        sigma = spec.gaussian_level * float(np.max(data))
        return Sinogram(data + sigma * rng.standard_normal(data.shape), sino.geometry)
    if np.any(data < 0):
        raise InvalidArgument("Poisson noise needs a non-negative sinogram")
    counts = rng.poisson(spec.i0 * np.exp(-data))
    return Sinogram(-np.log(np.maximum(counts, 1) / spec.i0), sino.geometry)


def circular_roi(shape, radius, center=None):
    """Boolean disc mask; ``center`` defaults to the image centre (in pixel-index units)."""
    m, n = shape
    cy, cx = ((m - 1) / 2.0, (n - 1) / 2.0) if center is None else center
    yy, xx = np.mgrid[0:m, 0:n]
    mask = (yy - cy) ** 2 + (xx - cx) ** 2 <= radius ** 2
    if not mask.any():
        raise InvalidArgument(f"ROI of radius {radius} contains no pixels")
    return mask


def _pair(u_star, u_tilde):
    a = np.asarray(u_star, dtype=np.float64)
    b = np.asarray(u_tilde, dtype=np.float64)
    if a.shape != b.shape:
        raise InvalidArgument(f"shape mismatch: {a.shape} vs {b.shape}")
    return a, b


def _check_roi(roi, shape):
    roi = np.asarray(roi, dtype=bool)
    if roi.shape != shape:
        raise InvalidArgument(f"ROI shape {roi.shape} does not match image {shape}")
    if not roi.any():
        raise InvalidArgument("ROI contains no pixels")
    return roi


def rmse(u_star, u_tilde, roi=None):
    """``||u_star - u_tilde||_2 / N_pixel`` (note: divided by the count, not its root)."""
    a, b = _pair(u_star, u_tilde)
    diff = a - b
    if roi is not None:
        diff = diff[_check_roi(roi, a.shape)]
    return float(np.sqrt(np.sum(diff * diff)) / diff.size)


def rms_error(u_star, u_tilde, roi=None):
    """``||u_star - u_tilde||_2 / sqrt(N_pixel)``, the usual root-mean-square error."""
    a, b = _pair(u_star, u_tilde)
    diff = a - b
    if roi is not None:
        diff = diff[_check_roi(roi, a.shape)]
    return float(np.sqrt(np.mean(diff * diff)))


def ssim(u_star, u_tilde, roi=None):
    """Mean local SSIM over every interior 8x8 window (stride 1, no padding).

    Window statistics use population (1/64) moments and ``c1 = c2 = 0.05``.
    With ``roi`` only windows lying entirely inside the mask are averaged.
    """
    a, b = _pair(u_star, u_tilde)
    w = SSIM_WINDOW
    if a.shape[0] < w or a.shape[1] < w:
        raise InvalidArgument(f"images must be at least {w}x{w}")
    wa = sliding_window_view(a, (w, w))
    wb = sliding_window_view(b, (w, w))
    mu_a = wa.mean(axis=(-2, -1))
    mu_b = wb.mean(axis=(-2, -1))
    var_a = ((wa - mu_a[..., None, None]) ** 2).mean(axis=(-2, -1))
    var_b = ((wb - mu_b[..., None, None]) ** 2).mean(axis=(-2, -1))
    cov = ((wa - mu_a[..., None, None]) * (wb - mu_b[..., None, None])).mean(axis=(-2, -1))
    local = ((2 * mu_a * mu_b + SSIM_C1) * (2 * cov + SSIM_C2)) / (
        (mu_a ** 2 + mu_b ** 2 + SSIM_C1) * (var_a + var_b + SSIM_C2))
    if roi is not None:
        roi = _check_roi(roi, a.shape)
        keep = sliding_window_view(roi, (w, w)).all(axis=(-2, -1))
        if not keep.any():
            raise InvalidArgument("no 8x8 window fits inside the ROI")
        local = local[keep]
    return float(local.mean())
