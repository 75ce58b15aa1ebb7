import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gradratio.assess import NoiseSpec, add_noise, circular_roi, rms_error, rmse, ssim
from gradratio.errors import InvalidArgument
from gradratio.projector import Sinogram

from oracles import rmse_loop, ssim_loop

images = arrays(np.float64, (10, 9), elements=st.floats(-2, 2, allow_nan=False))


def test_noise_none_and_zero_level(rng):
    f = Sinogram(rng.uniform(0, 3, (20, 7)))
    for spec in (NoiseSpec("none"), NoiseSpec("gaussian", 0.0)):
        out = add_noise(f, spec)
        assert out.data.tobytes() == f.data.tobytes()
        assert out.data is not f.data


def test_gaussian_noise_statistics():
    f = np.full((400, 250), 2.0)
    spec = NoiseSpec("gaussian", 0.005, seed=7)
    noise = add_noise(f, spec).data - f
    sigma = 0.005 * 2.0
    assert abs(noise.mean()) <= 4 * sigma / math.sqrt(noise.size)
    assert noise.std() == pytest.approx(sigma, rel=0.01)


def test_noise_deterministic(rng):
    f = rng.uniform(0, 3, (30, 5))
    for kind in ("gaussian", "poisson"):
        spec = NoiseSpec(kind, 0.01, i0=1e4, seed=11)
        np.testing.assert_array_equal(add_noise(f, spec).data, add_noise(f, spec).data)


def test_poisson_delta_method():
    f = np.random.default_rng(0).uniform(0, 5, (1000, 100))
    i0 = 1e8
    dev = add_noise(f, NoiseSpec("poisson", i0=i0, seed=2)).data - f
    expected_abs = np.mean(np.sqrt(2 / np.pi) * np.sqrt(np.exp(f) / i0))
    assert np.mean(np.abs(dev)) < 3 * expected_abs
    assert np.mean(np.abs(dev)) > expected_abs / 3


def test_poisson_zero_counts_clamped():
    out = add_noise(np.full((4, 4), 50.0), NoiseSpec("poisson", i0=10.0, seed=0)).data
    np.testing.assert_allclose(out, math.log(10.0), rtol=1e-15)


def test_poisson_rejects_negative():
    with pytest.raises(InvalidArgument):
        add_noise(np.array([[-1.0, 0.0]]), NoiseSpec("poisson"))


@pytest.mark.parametrize("kwargs", [dict(kind="salt"), dict(gaussian_level=-1.0), dict(i0=0.0)])
def test_noise_spec_validation(kwargs):
    with pytest.raises(InvalidArgument):
        NoiseSpec(**kwargs)


def test_rmse_hand_case():
    assert rmse(np.zeros((2, 2)), np.ones((2, 2))) == 0.5
    assert rmse(np.ones((5, 5)), np.ones((5, 5))) == 0.0


def test_rmse_loop_oracle(rng):
    a, b = rng.standard_normal((2, 33, 17))
    assert rmse(a, b) == pytest.approx(rmse_loop(a, b), rel=1e-12)


def test_rms_error():
    assert rms_error(np.zeros((2, 2)), np.ones((2, 2))) == 1.0
    a = np.random.default_rng(3).standard_normal((8, 8))
    assert rms_error(a, 0 * a) == pytest.approx(rmse(a, 0 * a) * 8)


def test_rmse_roi(rng):
    a, b = rng.standard_normal((2, 12, 12))
    roi = circular_roi(a.shape, 4)
    assert rmse(a, b, roi) == pytest.approx(rmse_loop(a[roi], b[roi]), rel=1e-12)


def test_shape_mismatch():
    with pytest.raises(InvalidArgument):
        rmse(np.zeros((3, 3)), np.zeros((3, 4)))


def test_ssim_identity_exact(rng):
    a = rng.standard_normal((20, 20))
    assert ssim(a, a) == 1.0


def test_ssim_hand_case():
    a = np.full((8, 8), 0.2)
    assert ssim(a, a + 0.1) == pytest.approx(17 / 18, abs=1e-15)


def test_ssim_window_oracle(rng):
    a, b = rng.uniform(0, 1, (2, 16, 14))
    assert ssim(a, b) == pytest.approx(ssim_loop(a, b), rel=1e-12)


@settings(max_examples=40, deadline=None)
@given(images, images)
def test_ssim_symmetric_and_bounded(a, b):
    s = ssim(a, b)
    assert s == pytest.approx(ssim(b, a), rel=1e-12, abs=1e-15)
    assert s <= 1.0 + 1e-12


@settings(max_examples=40, deadline=None)
@given(images, images)
def test_rmse_nonnegative(a, b):
    assert rmse(a, b) >= 0.0
    assert rmse(a, a) == 0.0


def test_ssim_roi_matches_windows(rng):
    a, b = rng.uniform(0, 1, (2, 24, 24))
    roi = np.zeros((24, 24), bool)
    roi[4:14, 6:16] = True  # 3 x 3 windows fit
    vals = [ssim(a[i:i + 8, j:j + 8], b[i:i + 8, j:j + 8]) for i in range(4, 7) for j in range(6, 9)]
    assert ssim(a, b, roi) == pytest.approx(np.mean(vals), rel=1e-12)


def test_ssim_small_image_and_roi_errors(rng):
    with pytest.raises(InvalidArgument):
        ssim(np.zeros((7, 9)), np.zeros((7, 9)))
    with pytest.raises(InvalidArgument):
        ssim(np.zeros((16, 16)), np.zeros((16, 16)), circular_roi((16, 16), 2))


def test_empty_roi():
    with pytest.raises(InvalidArgument):
        circular_roi((10, 10), 0.2, center=(0.5, 0.5))
    assert circular_roi((10, 10), 0.0, center=(3, 3)).sum() == 1
