"""IMGF64 image/sinogram files, PGM previews and atomic writes."""

from contextlib import contextmanager
import os
import tempfile

import numpy as np

from .errors import InvalidArgument

MAGIC = "IMGF64"


@contextmanager
def atomic_open(path, mode="wb"):
    """Write to a temporary sibling, then rename over ``path`` on success."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(prefix=".tmp-", dir=directory)
    try:
        with os.fdopen(fd, mode) as fh:
            yield fh
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except FileNotFoundError:
            pass
        raise


def write_image(path, data):
    """``IMGF64 v1 <rows> <cols>`` header line, then row-major little-endian float64."""
    arr = np.asarray(data, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidArgument(f"IMGF64 stores 2-D arrays, got shape {arr.shape}")
    header = f"{MAGIC} v1 {arr.shape[0]} {arr.shape[1]}\n".encode("ascii")
    with atomic_open(path) as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def read_image(path):
    with open(path, "rb") as fh:
        header = fh.readline().decode("ascii", errors="replace").split()
        if len(header) != 4 or header[0] != MAGIC or header[1] != "v1":
            raise InvalidArgument(f"{path}: not an IMGF64 v1 file")
        try:
            rows, cols = int(header[2]), int(header[3])
        except ValueError:
            raise InvalidArgument(f"{path}: malformed IMGF64 header") from None
        payload = fh.read()
    if len(payload) != rows * cols * 8:
        raise InvalidArgument(f"{path}: expected {rows * cols * 8} bytes of data, got {len(payload)}")
    return np.frombuffer(payload, dtype="<f8").reshape(rows, cols).astype(np.float64)


def write_pgm(path, data, window=(0.0, 1.0)):
    """16-bit binary PGM with ``window`` mapped to ``[0, 65535]``."""
    lo, hi = window
    if not lo < hi:
        raise InvalidArgument(f"display window requires lo < hi, got {window}")
    arr = np.asarray(data, dtype=np.float64)
    scaled = np.clip((arr - lo) / (hi - lo), 0.0, 1.0)
    pix = np.round(scaled * 65535).astype(">u2")
    with atomic_open(path) as fh:
        fh.write(f"P5\n{arr.shape[1]} {arr.shape[0]}\n65535\n".encode("ascii"))
        fh.write(pix.tobytes())
