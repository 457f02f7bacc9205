import math

import numpy as np
import pytest

from cmch3 import dpw, loopalg
from cmch3.gctheory import Grid
from cmch3.potential import PotentialSpec

SQRT3 = math.sqrt(3)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_twisted_loop(rng, N=16, deg=4, scale=0.5):
    """Constant diagonal times unipotent factors: invertible and splittable."""
    d = np.exp(rng.uniform(-0.5, 0.5))
    c = loopalg.constant_coeffs(np.diag([d, 1 / d]).astype(complex), N)
    for p in range(1, deg + 1, 2):
        for sign in (1, -1):
            E = np.zeros((2, 2), complex)
            E[(0, 1) if rng.random() < 0.5 else (1, 0)] = scale * (rng.standard_normal() + 1j * rng.standard_normal())
            u = loopalg.identity_coeffs(N)
            u[N + sign * p] = E
            c, _ = loopalg.mul(c, u)
    return c


@pytest.fixture(scope="session")
def vacuum_spec():
    return PotentialSpec.from_strings("0.5", "0", SQRT3, H=math.sqrt(2))


@pytest.fixture(scope="session")
def grid65():
    return Grid.centered(0j, (0.5, 0.5), (65, 65))


@pytest.fixture(scope="session")
def vacuum_frame(vacuum_spec, grid65):
    return dpw.build_frame(vacuum_spec, grid65, N=8)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not getattr(mod, "RESULTS", None):
        return
    terminalreporter.section("acceptance criteria")
    for line in sorted(mod.RESULTS, key=_criterion_key):
        terminalreporter.write_line(line)


def _criterion_key(line):
    parts = line.split()
    if len(parts) > 2 and parts[1] == "criterion":
        return (0, int(parts[2].rstrip(":")))
    return (1, 0)
