import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gradratio.errors import InvalidArgument
from gradratio.grid import (divergence_adjoint, gradient, gradient_norm_bound, inner, laplacian,
                            linear_index, norms)

from oracles import gradient_loop, neumann_stencil

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_constant_image_has_zero_gradient():
    assert not np.any(gradient(np.full((7, 5), 5.0)))


def test_ramp_row():
    p = gradient(np.array([[0.0, 1.0, 2.0]]))
    np.testing.assert_array_equal(p[0], [[1.0, 1.0, 0.0]])
    np.testing.assert_array_equal(p[1], [[0.0, 0.0, 0.0]])


def test_gradient_matches_loop(rng):
    u = rng.standard_normal((8, 8))
    np.testing.assert_array_equal(gradient(u), gradient_loop(u))


def test_zero_field_adjoint():
    assert not np.any(divergence_adjoint(np.zeros((2, 6, 4))))


def test_adjoint_identity_random_pairs(rng):
    worst = 0.0
    for _ in range(100):
        u = rng.standard_normal((16, 16))
        p = rng.standard_normal((2, 16, 16))
        lhs, rhs = inner(gradient(u), p), inner(u, divergence_adjoint(p))
        worst = max(worst, abs(lhs - rhs) / max(abs(lhs), 1e-300))
    assert worst <= 1e-12


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 9), st.integers(2, 9), st.data())
def test_adjoint_identity_any_shape(m, n, data):
    u = data.draw(arrays(np.float64, (m, n), elements=finite))
    p = data.draw(arrays(np.float64, (2, m, n), elements=finite))
    lhs, rhs = inner(gradient(u), p), inner(u, divergence_adjoint(p))
    # cancellation bound: both sums of absolute products
    scale = max(np.abs(gradient(u)).ravel() @ np.abs(p).ravel(),
                np.abs(u).ravel() @ np.abs(divergence_adjoint(p)).ravel()) + 1.0
    assert abs(lhs - rhs) <= 1e-12 * scale


@pytest.mark.parametrize("shape", [(6, 6), (5, 9), (1, 4)])
def test_laplacian_of_delta_is_neumann_stencil(shape):
    for i in range(shape[0]):
        for j in range(shape[1]):
            u = np.zeros(shape)
            u[i, j] = 1.0
            np.testing.assert_array_equal(laplacian(u), neumann_stencil(u))


def test_gtg_symmetric_psd(rng):
    for _ in range(20):
        u, v = rng.standard_normal((2, 10, 12))
        GtGu = divergence_adjoint(gradient(u))
        GtGv = divergence_adjoint(gradient(v))
        assert inner(GtGu, v) == pytest.approx(inner(u, GtGv), rel=1e-12)
        assert inner(GtGu, u) >= 0.0


def test_spectral_bound():
    est = gradient_norm_bound((16, 16))
    assert 7.0 < est <= 8.0 + 1e-9


def test_norms_345():
    p = np.array([[[3.0, 0.0]], [[0.0, 4.0]]])
    assert norms(p) == {"l1": 7.0, "l2": 5.0}


def test_norms_zero():
    assert norms(np.zeros((2, 3, 3))) == {"l1": 0.0, "l2": 0.0}


def test_norms_match_flat_vector(rng):
    p = rng.standard_normal((2, 9, 7))
    flat = p.ravel().tolist()
    out = norms(p)
    assert out["l1"] == pytest.approx(sum(abs(x) for x in flat), rel=1e-14)
    assert out["l2"] == pytest.approx(np.sqrt(sum(x * x for x in flat)), rel=1e-14)


def test_linear_index():
    assert linear_index(1, 1, 4) == 1
    assert linear_index(2, 3, 4) == 7


def test_rejects_bad_shapes():
    with pytest.raises(InvalidArgument):
        gradient(np.zeros(5))
    with pytest.raises(InvalidArgument):
        divergence_adjoint(np.zeros((3, 4, 4)))
