import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from contiloss.delta import DeltaConfig, acceleration, delta, delta_adjoint

from conftest import naive_delta

finite = st.floats(-1e3, 1e3, allow_nan=False)
matrices = arrays(np.float64, st.tuples(st.integers(1, 12), st.integers(1, 5)), elements=finite)


def test_constant_is_zero():
    assert not np.any(delta(np.full((7, 3), 4.2)))


def test_ramp_interior_recovers_slope():
    c = 0.75
    ramp = c * np.arange(20.0)[:, None] * np.ones((1, 4))
    d = delta(ramp)
    # (1 * 2c + 2 * 4c) / 10 == c wherever t +/- 2 stays inside the sequence
    np.testing.assert_allclose(d[2:-2], c, rtol=1e-14)


def test_single_frame_is_zero(rng):
    assert not np.any(delta(rng.standard_normal((1, 6))))


def test_matches_loop_oracle(rng):
    m = rng.standard_normal((9, 4))
    for order in (1, 2, 3):
        np.testing.assert_allclose(delta(m, DeltaConfig(order)), naive_delta(m, order), atol=1e-14)


def test_acceleration_is_delta_twice(rng):
    m = rng.standard_normal((10, 3))
    np.testing.assert_array_equal(acceleration(m), delta(delta(m)))


def test_acceleration_of_ramp_and_constant():
    ramp = np.arange(30.0)[:, None]
    np.testing.assert_allclose(acceleration(ramp)[4:-4], 0.0, atol=1e-12)
    assert not np.any(acceleration(np.ones((5, 2))))


def test_adjoint_identity(rng):
    x = rng.standard_normal((8, 5))
    y = rng.standard_normal((8, 5))
    assert abs(np.sum(delta(x) * y) - np.sum(x * delta_adjoint(y))) <= 1e-12


def test_adjoint_trivial_cases():
    assert not np.any(delta_adjoint(np.zeros((4, 3))))
    assert not np.any(delta_adjoint(np.ones((1, 1))))


def test_adjoint_is_transpose_of_explicit_matrix():
    n = 7
    basis = np.eye(n)
    op = np.column_stack([delta(basis[:, [j]])[:, 0] for j in range(n)])
    np.testing.assert_allclose(delta_adjoint(basis), op.T, atol=1e-15)


def test_empty_and_bad_order():
    with pytest.raises(ValueError):
        delta(np.zeros((0, 3)))
    with pytest.raises(ValueError):
        DeltaConfig(0)


@given(matrices, st.floats(-10, 10), st.floats(-10, 10))
@settings(max_examples=60, deadline=None)
def test_linearity(m, a, b):
    other = np.roll(m, 1, axis=0) * 0.5
    lhs = delta(a * m + b * other)
    rhs = a * delta(m) + b * delta(other)
    np.testing.assert_allclose(lhs, rhs, atol=1e-9 * (1 + np.abs(rhs).max()))


@given(matrices, finite)
@settings(max_examples=60, deadline=None)
def test_translation_equivariance(m, shift):
    np.testing.assert_allclose(delta(m + shift), delta(m), atol=1e-9 * (1 + abs(shift) + np.abs(m).max()))


@given(matrices)
@settings(max_examples=60, deadline=None)
def test_adjoint_property(x):
    y = np.cos(np.arange(x.size)).reshape(x.shape)
    scale = 1 + np.abs(x).max()
    assert abs(np.sum(delta(x) * y) - np.sum(x * delta_adjoint(y))) <= 1e-12 * scale * x.size
