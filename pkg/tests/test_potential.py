import json
import math

import numpy as np
import pytest

from cmch3 import wirtinger
from cmch3.errors import ConfigError, DomainError, Pole
from cmch3.gctheory import Grid
from cmch3.potential import (DEFAULT_TOLERANCES, PotentialSpec, euclidean_potential_check, load_config,
                             normalized_potential, parse_config, potential_field)


def test_vacuum_potential():
    spec = PotentialSpec.from_strings("0.5", "0", math.sqrt(3), H=math.sqrt(2))
    np.testing.assert_allclose(normalized_potential(spec, math.sqrt(2), 0.3 - 0.1j), [[0, -0.5], [0.5, 0]], atol=1e-15)


def test_structure():
    spec = PotentialSpec.from_strings("0", "z^2 - sin(z)", 2.0)
    P = normalized_potential(spec, 3.0, 0.2 + 0.4j)
    assert P[0, 1] == 0 and P[0, 0] == 0 and P[1, 1] == 0 and P[1, 0] != 0
    spec = PotentialSpec.from_strings("1/z", "0", 2.0)
    with pytest.raises(Pole):
        normalized_potential(spec, 2.0, 0)
    P = normalized_potential(PotentialSpec.from_strings("0.5", "0", 2.0), 1.0001, 0.1)
    assert P[1, 0] == pytest.approx(0.5 * math.sqrt(1.0001 ** 2 - 1))
    assert math.sqrt(1.0001 ** 2 - 1) == pytest.approx(0.01414, rel=1e-3)


def test_spec_validation():
    with pytest.raises(DomainError):
        PotentialSpec.from_strings("0.5", "0", 1.0)
    with pytest.raises(DomainError):
        PotentialSpec.from_strings("0.5", "1/z", 2.0)
    with pytest.raises(DomainError):
        PotentialSpec.from_strings("0.5", "0", 2.0, H=0.5)
    spec = PotentialSpec.from_strings("0.5", "0", math.sqrt(3))
    assert spec.H == pytest.approx(2) and spec.target_H == pytest.approx(2)


def test_potential_field_masks_poles():
    spec = PotentialSpec.from_strings("1/z + z^2", "0.3*z", 2.0)
    g = Grid.centered(0j, (0.5, 0.5), (33, 33))
    P, poles = potential_field(spec, 2.0, g.z)
    assert poles.sum() == 1 and poles[16, 16]
    assert np.all(np.isnan(P[poles]))
    assert np.all(np.isfinite(P[~poles]))
    trace = P[~poles][..., 0, 0] + P[~poles][..., 1, 1]
    assert not trace.any()


def test_potential_field_is_holomorphic():
    spec = PotentialSpec.from_strings("0.5 + z^2 - 0.3i*z", "0.3*z - 0.1*z^2", 2.0)
    g = Grid.centered(0j, (0.5, 0.5), (65, 65))
    P, poles = potential_field(spec, 2.0, g.z)
    assert not poles.any()
    assert np.max(np.abs(wirtinger.d_dzbar(P, g.hx, g.hy, 4))) < 1e-6


def test_euclidean_check(rng):
    spec = PotentialSpec.from_strings("0.5", "0", 2.0)
    ok, dev = euclidean_potential_check(spec, math.sqrt(2))
    assert ok and dev < 1e-12
    spec = PotentialSpec.from_strings("1 + 0.3*z - 0.2i*z^3", "0.1*z^2 - 0.4*z", 2.0)
    ok, dev = euclidean_potential_check(spec, 3.5)
    assert ok


MINIMAL = {"potential": {"Q": "0.5", "h": "0", "a": "1.7320508"}}


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.grid.shape == (65, 65)
    assert cfg.grid.x0 == -0.5 and cfg.grid.hx == pytest.approx(1 / 64)
    assert cfg.loop_degree == 16
    assert cfg.tolerances == DEFAULT_TOLERANCES
    assert cfg.potential.H == pytest.approx(2, abs=1e-6)
    assert not cfg.H_explicit
    assert cfg.g_route == "gauge"


def test_config_variants(tmp_path):
    data = {"potential": {"Q": "0.5", "h": "0", "a": "sqrt(3)", "H": "sqrt(2)"},
            "grid": {"center": [0, 0], "half_widths": [0.25, 0.5], "nx": 33, "ny": 65},
            "loop_degree": 8, "theta_samples": [0, 1.5], "g_route": "split",
            "tolerances": {"h_match": 0.05}, "output": {"dir": "x", "formats": ["ply"]}}
    path = tmp_path / "c.json"
    path.write_text(json.dumps(data))
    cfg = load_config(path)
    assert cfg.grid.hx == pytest.approx(1 / 64) and cfg.grid.shape == (65, 33)
    assert cfg.H_explicit and cfg.potential.H == pytest.approx(math.sqrt(2))
    assert np.allclose(cfg.thetas, [1, np.exp(1.5j)])
    assert cfg.tolerances["h_match"] == 0.05 and cfg.formats == ("ply",)
    cfg = parse_config({"potential": {"Q": "0.5", "h": "0", "H_target": 2}})
    assert cfg.potential.a == pytest.approx(math.sqrt(3))
    assert len(parse_config(dict(MINIMAL, theta_samples=8)).thetas) == 8


@pytest.mark.parametrize("data, path", [
    ({"potential": {"Q": "0.5", "h": "0", "a": 1}}, "potential/a"),
    ({"potential": {"Q": "0.5", "h": "0", "a": -2}}, "potential/a"),
    ({"potential": {"Q": "0.5", "h": "0"}}, "potential"),
    ({"potential": {"Q": "z^1.5", "h": "0", "a": 2}}, "potential/Q"),
    ({"potential": {"Q": "0.5", "h": "(", "a": 2}}, "potential/h"),
    ({"potential": {"Q": "0.5", "h": "0", "a": 2}, "grid": {"nx": 2}}, "grid/nx"),
    ({"potential": {"Q": "0.5", "h": "0", "a": 2}, "grid": {"center": [0.3, 0], "half_widths": [0.1, 0.1]}}, "grid"),
    ({"potential": {"Q": "0.5", "h": "0", "a": 2}, "bogus": 1}, "<root>"),
    ({"potential": {"Q": "0.5", "h": "0", "a": 2}, "g_route": "other"}, "g_route"),
])
def test_config_errors(data, path):
    with pytest.raises(ConfigError) as err:
        parse_config(data)
    assert err.value.path == path


def test_load_config_missing(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "nope.json")
    (tmp_path / "bad.json").write_text("{")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")
