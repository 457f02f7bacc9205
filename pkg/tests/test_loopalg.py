import numpy as np
import pytest

from cmch3 import loopalg
from cmch3.errors import LoopError, LoopInversionError, NotInBigCell, SingularPoint
from cmch3.linalg2c import E12, E21, det, inv as inv2
from cmch3.loopalg import Loop

from conftest import random_twisted_loop

N = 16
TH = loopalg.circle(64)


def horner(c, theta):
    """Direct sum of c_j theta^j, written independently of the library."""
    n = (c.shape[0] - 1) // 2
    acc = np.zeros((2, 2), complex)
    for j in range(n, -n - 1, -1):
        acc = acc * theta + c[j + n] if j >= 0 else acc
    neg = np.zeros((2, 2), complex)
    for j in range(1, n + 1):
        neg = neg + c[n - j] * theta ** (-j)
    return acc + neg


def test_eval_examples():
    one = Loop.identity(4)
    assert np.allclose(one(0.3 + 0.1j), np.eye(2))
    g = Loop.from_terms({1: np.array([[0, 1], [1, 0]])}, 4)
    np.testing.assert_allclose(g(1j), [[0, 1j], [1j, 0]])
    with pytest.raises(ValueError):
        loopalg.evaluate(one.coeffs, 0.0)


def test_eval_matches_horner(rng):
    c = random_twisted_loop(rng, 6)
    for t in np.exp(1j * rng.uniform(0, 2 * np.pi, 5)):
        np.testing.assert_allclose(loopalg.evaluate(c, t), horner(c, t), atol=1e-12)


def test_mul_inv_star(rng):
    c = random_twisted_loop(rng, N)
    ci, _ = loopalg.inv(c)
    prod, _ = loopalg.mul(c, ci)
    assert loopalg.sup_distance(prod, loopalg.identity_coeffs(N)) < 1e-9
    assert np.array_equal(loopalg.star(loopalg.star(c)), c)
    assert np.array_equal(loopalg.star(loopalg.identity_coeffs(N)), loopalg.identity_coeffs(N))
    v = loopalg.evaluate(loopalg.star(c), TH)
    np.testing.assert_allclose(v, np.conj(np.swapaxes(loopalg.evaluate(c, TH), -1, -2)), atol=1e-12)


def test_mul_matches_pointwise_product(rng):
    a, b = random_twisted_loop(rng, N, 2), random_twisted_loop(rng, N, 2)
    ab, tail = loopalg.mul(a, b)
    assert tail < 1e-14  # degrees add up well below N
    np.testing.assert_allclose(loopalg.evaluate(ab, TH), loopalg.evaluate(a, TH) @ loopalg.evaluate(b, TH), atol=1e-12)


def test_inv_reports_condition():
    c = loopalg.constant_coeffs(np.diag([1.0, 0.0]).astype(complex), 4)
    with pytest.raises(LoopInversionError) as err:
        loopalg.inv(c)
    assert err.value.condition > 1e12


def test_twisted_parity_preserved(rng):
    c = random_twisted_loop(rng, N)
    assert loopalg.twist_defect(c) == 0
    ci, _ = loopalg.inv(c)
    pp, pm, ok, _ = loopalg.birkhoff(c)
    U, B, ok2, _ = loopalg.iwasawa(c)
    for x in (loopalg.mul(c, c)[0], ci, loopalg.star(c), pp, pm, U, B):
        assert loopalg.twist_defect(x) == 0


def test_birkhoff_examples():
    L = loopalg.identity_coeffs(N)
    pp, pm, ok, _ = loopalg.birkhoff(L)
    assert ok and np.allclose(pp, L) and np.allclose(pm, L)

    Lp = loopalg.identity_coeffs(N)
    Lp[N + 1] = 0.4 * E12
    Lp[N + 2] = np.diag([0.1, -0.1])
    Lp[N] = np.diag([1.1, 1 / 1.1])
    pp, pm, ok, _ = loopalg.birkhoff(Lp)
    np.testing.assert_allclose(pp, Lp, atol=1e-12)
    np.testing.assert_allclose(pm, loopalg.identity_coeffs(N), atol=1e-12)

    c = 0.7 - 0.2j
    Lm = loopalg.identity_coeffs(N)
    Lm[N - 1] = c * E21
    pp, pm, ok, _ = loopalg.birkhoff(Lm)
    expect = loopalg.identity_coeffs(N)
    expect[N - 1] = -c * E21
    np.testing.assert_allclose(pp, loopalg.identity_coeffs(N), atol=1e-12)
    np.testing.assert_allclose(pm, expect, atol=1e-12)
    assert loopalg.birkhoff_residual(Lm, pp, pm) < 1e-12


def test_birkhoff_random(rng):
    for _ in range(10):
        L = random_twisted_loop(rng, N)
        r = loopalg.birkhoff_split(L)
        assert r.residual < 1e-9
        assert np.allclose(r.p_minus.coefficient(0), np.eye(2))
        assert np.all(r.p_plus.coeffs[:N] == 0) and np.all(r.p_minus.coeffs[N + 1:] == 0)


def test_birkhoff_not_in_big_cell():
    L = loopalg.identity_coeffs(4)
    L[4] = 0
    L[4 + 1] = E12
    L[4 - 1] = E21  # L = [[0, t], [1/t, 0]] lies outside the big cell
    with pytest.raises(NotInBigCell):
        loopalg.birkhoff_split(L)


def test_birkhoff_uniqueness(rng):
    L = random_twisted_loop(rng, N)
    r = loopalg.birkhoff_split(L)
    again = loopalg.birkhoff_split(r.p_plus.coeffs)
    np.testing.assert_allclose(again.p_plus.coeffs, r.p_plus.coeffs, atol=1e-10)
    np.testing.assert_allclose(again.p_minus.coeffs, loopalg.identity_coeffs(N), atol=1e-10)


def test_iwasawa_examples():
    r = loopalg.iwasawa_split(loopalg.identity_coeffs(N))
    np.testing.assert_allclose(r.unitary_part.coeffs, loopalg.identity_coeffs(N), atol=1e-12)
    np.testing.assert_allclose(r.plus_part.coeffs, loopalg.identity_coeffs(N), atol=1e-12)

    D = loopalg.constant_coeffs(np.diag([2, 0.5]).astype(complex), N)
    r = loopalg.iwasawa_split(D)
    np.testing.assert_allclose(r.unitary_part.coeffs, loopalg.identity_coeffs(N), atol=1e-12)
    np.testing.assert_allclose(r.plus_part.coeffs, D, atol=1e-12)

    phi = loopalg.identity_coeffs(N)
    phi[N + 1] = 0.3 * E12
    r = loopalg.iwasawa_split(phi)
    assert r.residual < 1e-9 and r.unitarity < 1e-9


def test_iwasawa_random_and_normalization(rng):
    for _ in range(10):
        phi = random_twisted_loop(rng, N)
        r = loopalg.iwasawa_split(phi)
        assert r.residual < 1e-9 and r.unitarity < 1e-9
        b0 = r.plus_part.coefficient(0)
        assert abs(b0[1, 0]) < 1e-12
        assert b0[0, 0].real > 0 and b0[1, 1].real > 0
        assert abs(b0[0, 0].imag) < 1e-12 and abs(b0[1, 1].imag) < 1e-12
        assert np.all(r.plus_part.coeffs[:N] == 0)
        assert loopalg.det_defect(r.unitary_part.coeffs) < 1e-8


def test_iwasawa_uniqueness(rng):
    phi = random_twisted_loop(rng, N)
    r = loopalg.iwasawa_split(phi)
    again = loopalg.iwasawa_split(r.unitary_part.coeffs)
    np.testing.assert_allclose(again.plus_part.coeffs, loopalg.identity_coeffs(N), atol=1e-10)


def test_iwasawa_singular():
    phi = loopalg.constant_coeffs(np.zeros((2, 2), complex), 4)
    with pytest.raises((SingularPoint, LoopInversionError)):
        loopalg.iwasawa_split(phi)


def test_coefficient_fourier_oracle(rng):
    c = random_twisted_loop(rng, 8)
    th = np.exp(2j * np.pi * np.arange(256) / 256)
    vals = np.array([horner(c, t) for t in th])
    for j in range(-8, 9):
        oracle = np.mean(vals * th[:, None, None] ** (-j), axis=0)
        np.testing.assert_allclose(loopalg.coefficient(c, j), oracle, atol=1e-8)
    assert np.array_equal(loopalg.coefficient(loopalg.identity_coeffs(3), 0), np.eye(2))
    assert not np.any(loopalg.coefficient(loopalg.identity_coeffs(3), 1))
    with pytest.raises(IndexError):
        loopalg.coefficient(c, 9)


def test_det_stays_one(rng):
    c = random_twisted_loop(rng, N)
    assert loopalg.det_defect(c) < 1e-8
    assert loopalg.det_defect(loopalg.inv(c)[0]) < 1e-8


def test_loop_value_type(rng):
    g = Loop(random_twisted_loop(rng, 6))
    with pytest.raises(ValueError):
        g.coeffs[0, 0, 0] = 1
    h = Loop.from_json(g.to_json())
    assert np.array_equal(h.coeffs, g.coeffs)
    assert g.degree == 6 and g.is_twisted()
    prod = g @ g.inv()
    assert loopalg.sup_distance(prod.coeffs, loopalg.identity_coeffs(6)) < 1e-6
    assert g.resized(8).degree == 8
    assert np.allclose(g(1.0), loopalg.evaluate(g.coeffs, 1.0))
    with pytest.raises(LoopError):
        Loop(np.zeros((4, 2, 2)))  # even length is not a Laurent window


def test_batched_operations(rng):
    c = np.stack([random_twisted_loop(rng, 8) for _ in range(6)]).reshape(2, 3, 17, 2, 2)
    U, B, ok, _ = loopalg.iwasawa(c)
    assert ok.shape == (2, 3) and ok.all()
    assert np.max(loopalg.iwasawa_residual(c, U, B)) < 1e-9
