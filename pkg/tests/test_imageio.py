import numpy as np
import pytest

from gradratio import imageio
from gradratio.errors import InvalidArgument


def test_round_trip_bit_identical(tmp_path, rng):
    a = rng.standard_normal((7, 5))
    a[0, 0] = -0.0
    path = tmp_path / "a.img"
    imageio.write_image(path, a)
    b = imageio.read_image(path)
    assert b.tobytes() == a.tobytes()
    raw = path.read_bytes()
    assert raw.startswith(b"IMGF64 v1 7 5\n")
    assert len(raw) == len(b"IMGF64 v1 7 5\n") + 35 * 8


def test_little_endian_payload(tmp_path):
    path = tmp_path / "one.img"
    imageio.write_image(path, np.array([[1.0]]))
    assert path.read_bytes().endswith(np.float64(1.0).astype("<f8").tobytes())


def test_rejects_bad_files(tmp_path):
    p = tmp_path / "x.img"
    p.write_bytes(b"IMGF64 v2 1 1\n" + bytes(8))
    with pytest.raises(InvalidArgument):
        imageio.read_image(p)
    p.write_bytes(b"IMGF64 v1 2 2\n" + bytes(8))
    with pytest.raises(InvalidArgument):
        imageio.read_image(p)
    with pytest.raises(InvalidArgument):
        imageio.write_image(p, np.zeros(3))


def test_failed_write_keeps_old_file(tmp_path):
    path = tmp_path / "keep.img"
    imageio.write_image(path, np.ones((2, 2)))
    before = path.read_bytes()
    with pytest.raises(RuntimeError):
        with imageio.atomic_open(path) as fh:
            fh.write(b"partial")
            raise RuntimeError("interrupted")
    assert path.read_bytes() == before
    assert sorted(p.name for p in tmp_path.iterdir()) == ["keep.img"]


def test_pgm_window(tmp_path):
    path = tmp_path / "p.pgm"
    imageio.write_pgm(path, np.array([[-1.0, 0.0, 0.5, 2.0]]), window=(0.0, 1.0))
    raw = path.read_bytes()
    header = b"P5\n4 1\n65535\n"
    assert raw.startswith(header)
    pix = np.frombuffer(raw[len(header):], dtype=">u2")
    assert pix.tolist() == [0, 0, 32768, 65535]
    with pytest.raises(InvalidArgument):
        imageio.write_pgm(path, np.zeros((2, 2)), window=(1.0, 1.0))
