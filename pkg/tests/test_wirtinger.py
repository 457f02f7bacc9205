import numpy as np
import pytest

from cmch3 import wirtinger
from cmch3.gctheory import Grid


def test_fd_weights_classic():
    np.testing.assert_allclose(wirtinger.fd_weights((-1, 0, 1), 1), [-0.5, 0, 0.5])
    np.testing.assert_allclose(wirtinger.fd_weights((-1, 0, 1), 2), [1, -2, 1])
    np.testing.assert_allclose(wirtinger.fd_weights((-2, -1, 0, 1, 2), 1), [1 / 12, -2 / 3, 0, 2 / 3, -1 / 12])


@pytest.mark.parametrize("order, tol", [(2, 2e-3), (4, 1e-6)])
def test_wirtinger_on_polynomials(order, tol):
    g = Grid.centered(0j, (0.5, 0.5), (33, 33))
    z = g.z
    f = z ** 3 + np.conj(z) * z
    np.testing.assert_allclose(wirtinger.d_dz(f, g.hx, g.hy, order), 3 * z ** 2 + np.conj(z), atol=tol)
    np.testing.assert_allclose(wirtinger.d_dzbar(f, g.hx, g.hy, order), z, atol=tol)
    np.testing.assert_allclose(wirtinger.d_dz_dzbar(f, g.hx, g.hy, order), np.ones_like(z), atol=tol)
    np.testing.assert_allclose(wirtinger.d_dz_dz(f, g.hx, g.hy, order), 6 * z, atol=50 * tol)


def test_fourth_order_converges():
    errs = []
    for n in (17, 33):
        g = Grid.centered(0j, (0.5, 0.5), (n, n))
        f = np.exp(g.z)
        errs.append(np.max(np.abs(wirtinger.d_dz(f, g.hx, g.hy, 4) - f)))
    assert errs[0] / errs[1] > 12  # about 2^4


def test_too_small():
    with pytest.raises(ValueError):
        wirtinger.derivative(np.zeros(2), 0.1, 0)


def test_interior_mask():
    m = wirtinger.interior_mask((5, 6), 1)
    assert m.sum() == 3 * 4
