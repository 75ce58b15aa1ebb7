"""Ray-driven sparse projection matrix for 2-D parallel- and fan-beam CT.

The image occupies ``[-N/2, N/2]^2`` in pixel units (times ``pixel_size``),
row 0 at the top.  Each matrix row is one ray; its entries are the exact
chord lengths of that ray through the pixels it crosses (Siddon traversal).

Rows are ordered angle-major: row ``a * detector_count + d`` is detector
bin ``d`` at angle ``a``.  A :class:`Sinogram` stores the same numbers as a
``(detector_count, angle_count)`` array.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math
import os

import numpy as np
import scipy.sparse as sp

from .errors import InvalidArgument

MAGIC = "SPARSEPROJ"
_TRIPLET = np.dtype([("row", "<u8"), ("col", "<u8"), ("weight", "<f8")])
_MIN_CHORD = 1e-10


def default_detector_count(grid_size):
    """``round(sqrt(2) * N)`` rays: 362 for a 256 grid."""
    return max(1, int(round(math.sqrt(2.0) * grid_size)))


def thread_count():
    env = os.environ.get("GRADRATIO_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise InvalidArgument(f"GRADRATIO_THREADS must be an integer, got {env!r}") from None
    return os.cpu_count() or 1


@dataclass
class Geometry:
    """Scan geometry.

    ``detector_span`` is the detector width in pixel units for parallel beam
    (default: the grid diagonal) and the full fan angle in degrees for fan
    beam (default: just wide enough to cover the grid).  ``source_radius``
    and ``detector_radius`` are in pixel units; fan detectors are
    equiangular, so ``detector_radius`` does not change the chord lengths.
    """

    kind: str = "parallel"
    grid_size: int = 256
    detector_count: int | None = None
    angle_count: int = 31
    theta_max: float = 180.0
    source_radius: float | None = None
    detector_radius: float | None = None
    detector_span: float | None = None
    pixel_size: float = 1.0
    include_endpoint: bool = False

    def __post_init__(self):
        if self.kind not in ("parallel", "fan"):
            raise InvalidArgument(f"geometry kind must be 'parallel' or 'fan', got {self.kind!r}")
        if int(self.grid_size) != self.grid_size or self.grid_size < 1:
            raise InvalidArgument("grid_size must be a positive integer")
        self.grid_size = int(self.grid_size)
        if self.detector_count is None:
            self.detector_count = default_detector_count(self.grid_size)
        if self.detector_count < 1 or self.angle_count < 1:
            raise InvalidArgument("detector_count and angle_count must be >= 1")
        limit = 180.0 if self.kind == "parallel" else 360.0
        if not 0.0 < self.theta_max <= limit:
            raise InvalidArgument(f"theta_max for {self.kind} beam must lie in (0, {limit:g}]")
        if self.pixel_size <= 0:
            raise InvalidArgument("pixel_size must be positive")
        if self.kind == "fan":
            if self.source_radius is None:
                self.source_radius = 2.0 * self.grid_size
            if self.detector_radius is None:
                self.detector_radius = 2.0 * self.grid_size
            if self.source_radius <= 0 or self.detector_radius <= 0:
                raise InvalidArgument("fan-beam radii must be positive")
            half_diag = self.grid_size / math.sqrt(2.0)
            if self.source_radius <= half_diag:
                raise InvalidArgument("fan-beam source must lie outside the image support")
            if self.detector_span is None:
                self.detector_span = 2.0 * math.degrees(math.asin(half_diag / self.source_radius))
            if self.detector_span >= 180.0:
                raise InvalidArgument("fan angle must be below 180 degrees")
        elif self.detector_span is None:
            self.detector_span = math.sqrt(2.0) * self.grid_size
        if not self.detector_span > 0:
            raise InvalidArgument("detector span must be positive (degenerate geometry)")

    @property
    def shape(self):
        """Sinogram shape ``(detector_count, angle_count)``."""
        return (self.detector_count, self.angle_count)

    def angles(self):
        """Projection angles in radians."""
        deg = np.linspace(0.0, self.theta_max, self.angle_count, endpoint=self.include_endpoint)
        return np.deg2rad(deg)

    def rays(self, theta):
        """Start points and unit directions (pixel units) of all rays at one angle."""
        n = np.array([math.cos(theta), math.sin(theta)])
        if self.kind == "parallel":
            half = self.detector_span / 2.0
            t = np.linspace(-half, half, self.detector_count) if self.detector_count > 1 else np.zeros(1)
            s = np.array([-n[1], n[0]])
            starts = t[:, None] * n[None, :]
            dirs = np.broadcast_to(s, starts.shape).copy()
        else:
            half = math.radians(self.detector_span) / 2.0
            gam = np.linspace(-half, half, self.detector_count) if self.detector_count > 1 else np.zeros(1)
            starts = np.broadcast_to(self.source_radius * n, (gam.size, 2)).copy()
            c, s = np.cos(gam), np.sin(gam)
            # central ray points at the origin; rotate it by gamma
            dirs = np.stack([-(c * n[0] - s * n[1]), -(s * n[0] + c * n[1])], axis=1)
        return starts, dirs


@dataclass
class Sinogram:
    data: np.ndarray
    geometry: Geometry | None = None

    def __post_init__(self):
        self.data = np.asarray(self.data, dtype=np.float64)
        if self.data.ndim != 2:
            raise InvalidArgument("sinogram data must be 2-D (detectors x angles)")
        if self.geometry is not None and self.data.shape != self.geometry.shape:
            raise InvalidArgument(
                f"sinogram shape {self.data.shape} does not match geometry {self.geometry.shape}")
        if not np.all(np.isfinite(self.data)):
            raise InvalidArgument("sinogram contains non-finite values")

    @property
    def shape(self):
        return self.data.shape

    def ravel(self):
        """Flat measurement vector in matrix-row order."""
        return self.data.T.ravel()


def sinogram_from_vector(vec, n_detectors, n_angles, geometry=None):
    return Sinogram(np.asarray(vec).reshape(n_angles, n_detectors).T.copy(), geometry)


def siddon(starts, dirs, grid_size):
    """Chord lengths of rays through an ``N x N`` unit-pixel grid.

    Parameters
    ----------
    starts, dirs : ndarray, shape (R, 2)
        A point on each ray and its unit direction, in pixel units with the
        grid centred on the origin.
    grid_size : int

    Returns
    -------
    ray, pixel, length : ndarray
        Flattened triplets; ``pixel`` is the row-major pixel index.
    """
    N = grid_size
    half = N / 2.0
    planes = np.arange(N + 1, dtype=np.float64) - half
    dirs = np.where(np.abs(dirs) < 1e-14, 0.0, dirs)
    R = starts.shape[0]

    lo = np.full(R, -np.inf)
    hi = np.full(R, np.inf)
    crossings = []
    for axis in (0, 1):
        p, d = starts[:, axis], dirs[:, axis]
        moving = d != 0.0
        with np.errstate(divide="ignore", invalid="ignore"):
            a = (planes[None, :] - p[:, None]) / d[:, None]
        a0, a1 = a[:, 0], a[:, -1]
        lo = np.where(moving, np.maximum(lo, np.minimum(a0, a1)), lo)
        hi = np.where(moving, np.minimum(hi, np.maximum(a0, a1)), hi)
        # a ray parallel to this axis misses the grid unless it starts inside the slab
        outside = ~moving & ((p < -half) | (p > half))
        hi = np.where(outside, -np.inf, hi)
        a[~moving] = np.nan
        crossings.append(a)

    hit = hi > lo
    a = np.concatenate(crossings + [lo[:, None], hi[:, None]], axis=1)[hit]
    lo, hi = lo[hit], hi[hit]
    rays = np.nonzero(hit)[0]
    a = np.where((a >= lo[:, None]) & (a <= hi[:, None]), a, np.inf)
    a.sort(axis=1)
    with np.errstate(invalid="ignore"):
        seg = np.diff(a, axis=1)
        mid = 0.5 * (a[:, 1:] + a[:, :-1])
    ok = np.isfinite(seg) & (seg > _MIN_CHORD)
    r_idx, k_idx = np.nonzero(ok)
    m = mid[r_idx, k_idx]
    p0 = starts[rays[r_idx]]
    dv = dirs[rays[r_idx]]
    x = p0[:, 0] + m * dv[:, 0]
    y = p0[:, 1] + m * dv[:, 1]
    col = np.clip(np.floor(x + half).astype(np.int64), 0, N - 1)
    row = np.clip(np.floor(half - y).astype(np.int64), 0, N - 1)
    return rays[r_idx], row * N + col, seg[r_idx, k_idx]


@dataclass
class SparseProjector:
    """Sparse system matrix ``A`` together with its sinogram layout."""

    matrix: sp.csr_matrix
    n_detectors: int
    n_angles: int
    geometry: Geometry | None = None

    def __post_init__(self):
        self.matrix = sp.csr_matrix(self.matrix, dtype=np.float64)
        self.matrix.sum_duplicates()
        self.matrix.sort_indices()
        if self.matrix.shape[0] != self.n_detectors * self.n_angles:
            raise InvalidArgument(
                f"matrix has {self.matrix.shape[0]} rows, expected "
                f"{self.n_detectors} x {self.n_angles}")
        side = math.isqrt(self.matrix.shape[1])
        self.grid_size = side if side * side == self.matrix.shape[1] else None

    @property
    def shape(self):
        return self.matrix.shape

    def matvec(self, x):
        return self.matrix @ x

    def rmatvec(self, y):
        # CSC view of the CSR data: each pixel sums its rays in ascending row order
        return self.matrix.T @ y

    def to_dense(self):
        return self.matrix.toarray()


def build_projector(geom):
    """Assemble the chord-length matrix for ``geom``; one row per (angle, detector)."""
    N = geom.grid_size
    D = geom.detector_count
    thetas = geom.angles()

    def one_angle(a):
        starts, dirs = geom.rays(thetas[a])
        ray, pix, length = siddon(starts, dirs, N)
        return a * D + ray, pix, length

    workers = min(thread_count(), len(thetas))
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(one_angle, range(len(thetas))))
    else:
        parts = [one_angle(a) for a in range(len(thetas))]

    rows = np.concatenate([p[0] for p in parts])
    cols = np.concatenate([p[1] for p in parts])
    vals = np.concatenate([p[2] for p in parts]) * geom.pixel_size
    mat = sp.csr_matrix((vals, (rows, cols)), shape=(D * geom.angle_count, N * N))
    return SparseProjector(mat, D, geom.angle_count, geom)


def _check_image(A, u):
    u = np.asarray(u, dtype=np.float64)
    if u.size != A.shape[1]:
        raise InvalidArgument(f"image has {u.size} pixels, projector expects {A.shape[1]}")
    return u


def forward(A, u):
    """``A u`` as a :class:`Sinogram`."""
    u = _check_image(A, u)
    return sinogram_from_vector(A.matvec(u.ravel()), A.n_detectors, A.n_angles, A.geometry)


def adjoint(A, r):
    """``A^T r`` as an image of shape ``(N, N)`` (or a flat vector for non-square grids)."""
    data = r.data if isinstance(r, Sinogram) else np.asarray(r, dtype=np.float64)
    if data.shape != (A.n_detectors, A.n_angles):
        raise InvalidArgument(
            f"sinogram shape {data.shape} does not match projector "
            f"({A.n_detectors}, {A.n_angles})")
    out = A.rmatvec(data.T.ravel())
    if A.grid_size is not None:
        return out.reshape(A.grid_size, A.grid_size)
    return out


def save_matrix(path_or_file, A):
    """Write ``SPARSEPROJ v1 rows cols nnz`` then little-endian (u64, u64, f64) triplets."""
    coo = A.matrix.tocoo()
    order = np.lexsort((coo.col, coo.row))
    trip = np.empty(coo.nnz, dtype=_TRIPLET)
    trip["row"] = coo.row[order]
    trip["col"] = coo.col[order]
    trip["weight"] = coo.data[order]
    header = f"{MAGIC} v1 {A.shape[0]} {A.shape[1]} {coo.nnz}\n".encode("ascii")
    if hasattr(path_or_file, "write"):
        path_or_file.write(header)
        path_or_file.write(trip.tobytes())
    else:
        with open(path_or_file, "wb") as fh:
            fh.write(header)
            fh.write(trip.tobytes())


def load_matrix(path, n_detectors=None, n_angles=None):
    """Read a SPARSEPROJ file.

    Without a sinogram layout the matrix is treated as a single angle whose
    detector count equals the number of rows.
    """
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").split()
        if len(header) != 5 or header[0] != MAGIC or header[1] != "v1":
            raise InvalidArgument(f"{path}: not a SPARSEPROJ v1 file")
        try:
            rows, cols, nnz = (int(v) for v in header[2:])
        except ValueError:
            raise InvalidArgument(f"{path}: malformed SPARSEPROJ header") from None
        trip = np.frombuffer(fh.read(), dtype=_TRIPLET)
    if trip.size != nnz:
        raise InvalidArgument(f"{path}: expected {nnz} triplets, found {trip.size}")
    if nnz and (trip["row"].max() >= rows or trip["col"].max() >= cols):
        raise InvalidArgument(f"{path}: triplet index out of range")
    mat = sp.csr_matrix((trip["weight"].astype(np.float64),
                         (trip["row"].astype(np.int64), trip["col"].astype(np.int64))),
                        shape=(rows, cols))
    if n_detectors is None and n_angles is None:
        n_detectors, n_angles = rows, 1
    elif n_detectors is None:
        n_detectors = rows // n_angles
    elif n_angles is None:
        n_angles = rows // n_detectors
    return SparseProjector(mat, n_detectors, n_angles)
