"""Shepp-Logan head phantom rasterized at pixel centres on ``[-1, 1]^2``."""

from dataclasses import dataclass
import math

import numpy as np

from .errors import InvalidArgument


@dataclass(frozen=True)
class EllipseSpec:
    intensity: float
    center_x: float
    center_y: float
    semi_axis_a: float
    semi_axis_b: float
    rotation: float  # radians, counter-clockwise

    def __post_init__(self):
        if self.semi_axis_a <= 0 or self.semi_axis_b <= 0:
            raise InvalidArgument("ellipse semi-axes must be positive")


def _table(rows):
    return tuple(
        EllipseSpec(a, x0, y0, sa, sb, math.radians(phi)) for a, sa, sb, x0, y0, phi in rows
    )


# (intensity, a, b, x0, y0, phi in degrees)
_GEOMETRY = [
    (0.69, 0.92, 0.0, 0.0, 0.0),
    (0.6624, 0.8740, 0.0, -0.0184, 0.0),
    (0.1100, 0.3100, 0.22, 0.0, -18.0),
    (0.1600, 0.4100, -0.22, 0.0, 18.0),
    (0.2100, 0.2500, 0.0, 0.35, 0.0),
    (0.0460, 0.0460, 0.0, 0.1, 0.0),
    (0.0460, 0.0460, 0.0, -0.1, 0.0),
    (0.0460, 0.0230, -0.08, -0.605, 0.0),
    (0.0230, 0.0230, 0.0, -0.606, 0.0),
    (0.0230, 0.0460, 0.06, -0.605, 0.0),
]
_MODIFIED = [1.0, -0.8, -0.2, -0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1]
_ORIGINAL = [2.0, -0.98, -0.02, -0.02, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01]

HIGH_CONTRAST = _table([(v,) + g for v, g in zip(_MODIFIED, _GEOMETRY)])
# The original table peaks at 2.0 on the skull; halve it so both variants live in [0, 1].
LOW_CONTRAST = _table([(v / 2.0,) + g for v, g in zip(_ORIGINAL, _GEOMETRY)])

VARIANTS = {"high_contrast": HIGH_CONTRAST, "low_contrast": LOW_CONTRAST,
            "high": HIGH_CONTRAST, "low": LOW_CONTRAST}


def pixel_centers(size):
    """x (columns) and y (rows, +1 at the top) coordinates of pixel centres."""
    c = -1.0 + (2.0 * np.arange(size) + 1.0) / size
    x, y = np.meshgrid(c, -c)
    return x, y


def rasterize(ellipses, size):
    x, y = pixel_centers(size)
    img = np.zeros((size, size))
    for e in ellipses:
        cs, sn = math.cos(e.rotation), math.sin(e.rotation)
        dx, dy = x - e.center_x, y - e.center_y
        xr = dx * cs + dy * sn
        yr = -dx * sn + dy * cs
        inside = (xr / e.semi_axis_a) ** 2 + (yr / e.semi_axis_b) ** 2 <= 1.0
        img[inside] += e.intensity
    # cancelling intensities (1 - 0.8 - 0.2) leave rounding residue around zero
    img[np.abs(img) < 1e-12] = 0.0
    return img


def shepp_logan(size, variant="high_contrast"):
    """Shepp-Logan phantom of shape ``(size, size)``.

    ``high_contrast`` is the modified table (skull 1.0, brain 0.2);
    ``low_contrast`` is the original table scaled by one half.
    """
    if int(size) != size or size < 16:
        raise InvalidArgument(f"phantom size must be an integer >= 16, got {size}")
    try:
        table = VARIANTS[variant]
    except KeyError:
        raise InvalidArgument(f"unknown phantom variant {variant!r}") from None
    return rasterize(table, int(size))
