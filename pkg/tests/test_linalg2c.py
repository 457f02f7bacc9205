import numpy as np
import pytest

from cmch3.errors import HermitianError
from cmch3.linalg2c import (SIGMA, det, dagger, from_hermitian, is_hermitian, is_sl2, is_su2,
                            is_traceless, lorentz_inner, minkowski_inner, pauli, poincare_ball,
                            to_hermitian)


def test_pauli_matrices():
    assert np.array_equal(pauli(0), np.eye(2))
    assert np.array_equal(pauli(3), np.diag([1, -1]))
    assert np.array_equal(pauli(2), np.array([[0, 1j], [-1j, 0]]))
    assert np.array_equal(pauli(1), np.array([[0, 1], [1, 0]]))
    with pytest.raises(IndexError):
        pauli(4)


def test_sigma_constants_read_only():
    with pytest.raises(ValueError):
        SIGMA[0, 0, 0] = 5


@pytest.mark.parametrize("v, X", [
    ((1, 0, 0, 0), np.eye(2)),
    ((0, 1, 0, 0), [[0, 1], [1, 0]]),
    ((2, 1, 1, 1), [[3, 1 + 1j], [1 - 1j, 1]]),
])
def test_to_hermitian_examples(v, X):
    np.testing.assert_allclose(to_hermitian(np.array(v, float)), X)


def test_hermitian_round_trip(rng):
    v = rng.standard_normal((500, 4))
    np.testing.assert_allclose(from_hermitian(to_hermitian(v)), v, atol=1e-15)


def test_expansion_in_pauli_basis(rng):
    v = rng.standard_normal(4)
    np.testing.assert_allclose(to_hermitian(v), np.einsum("i,ijk->jk", v, SIGMA))


def test_from_hermitian_rejects():
    with pytest.raises(HermitianError):
        from_hermitian(np.array([[1, 1], [0, 1]], complex))


def test_minkowski_examples():
    s0, s1, s3 = pauli(0), pauli(1), pauli(3)
    assert minkowski_inner(s0, s0) == pytest.approx(-1)
    assert minkowski_inner(s1, s1) == pytest.approx(1)
    assert minkowski_inner(s0, s3) == pytest.approx(0)


def test_det_is_minus_norm(rng):
    v = rng.standard_normal((200, 4))
    X = to_hermitian(v)
    np.testing.assert_allclose(det(X).real, -lorentz_inner(v, v), atol=1e-12)
    np.testing.assert_allclose(minkowski_inner(X, X).real, lorentz_inner(v, v), atol=1e-12)


def test_sl2_action_is_isometric(rng):
    g = rng.standard_normal((100, 2, 2)) + 1j * rng.standard_normal((100, 2, 2))
    g /= np.sqrt(det(g))[:, None, None]
    X = to_hermitian(rng.standard_normal((100, 4)))
    Y = to_hermitian(rng.standard_normal((100, 4)))
    lhs = minkowski_inner(g @ X @ dagger(g), g @ Y @ dagger(g))
    np.testing.assert_allclose(lhs, minkowski_inner(X, Y), atol=1e-10)


def test_predicates():
    assert is_su2(pauli(0))
    r = is_su2(np.diag([2, 0.5]))
    assert not r and r.deviation > 1
    assert not is_traceless(pauli(0))
    assert is_traceless(pauli(3))
    assert is_hermitian(pauli(2))
    assert not is_hermitian(np.array([[0, 1], [0, 0]]))
    assert is_sl2(np.array([[2, 3], [1, 2]]))


def test_poincare_ball():
    np.testing.assert_allclose(poincare_ball(np.array([2, 1, 1, 1.0])), [1 / 3] * 3)
    np.testing.assert_allclose(poincare_ball(np.array([1, 0, 0, 0.0])), [0, 0, 0])
