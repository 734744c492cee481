import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from tdainsar.errors import ApproximationWarning
from tdainsar.geometry import (BaselineConfiguration, BaselineSet, HelixFormation, InterferogramKind, Mode,
                               RadarGeometry, coherence_to_phase_std, effective_baselines, equivalent_baselines,
                               height_ambiguity, height_to_phase, helix_perpendicular_baseline, phase_to_height,
                               simplified_baselines, wrap)

GEOM = RadarGeometry.default()
finite = st.floats(-1e4, 1e4, allow_nan=False)


def test_default_geometry_values():
    assert GEOM.wavelength == pytest.approx(299792458.0 / 9.6e9)
    assert GEOM.slant_range == 608015.0
    assert GEOM.incidence == pytest.approx(math.radians(30))


@pytest.mark.parametrize("kw", [dict(wavelength=0), dict(slant_range=-1), dict(incidence=0),
                                dict(incidence=math.pi / 2), dict(range_spacing=0)])
def test_geometry_rejects_invalid(kw):
    base = dict(wavelength=0.03, slant_range=6e5, incidence=0.5)
    base.update(kw)
    with pytest.raises(ValueError):
        RadarGeometry(**base)


@pytest.mark.parametrize("x, expected", [(0.0, 0.0), (3 * np.pi, np.pi), (-3.5 * np.pi, 0.5 * np.pi),
                                         (np.pi, np.pi), (-np.pi, np.pi)])
def test_wrap_examples(x, expected):
    assert wrap(x) == pytest.approx(expected, abs=1e-12)


@given(finite)
def test_wrap_range_and_idempotent(x):
    w = wrap(x)
    assert -np.pi < w <= np.pi
    assert wrap(w) == w
    k = (x - w) / (2 * np.pi)
    assert abs(k - round(k)) < 1e-9


def test_phase_to_height_examples():
    assert phase_to_height(GEOM, 15.0, 0.0) == 0.0
    assert phase_to_height(GEOM, 15.0, 2 * np.pi) == pytest.approx(316.4, abs=0.1)
    assert height_to_phase(GEOM, 300.0, 1.0) == pytest.approx(0.3970, abs=1e-4)


def test_zero_baseline_is_degenerate():
    with pytest.raises(ValueError, match="degenerate baseline"):
        phase_to_height(GEOM, 0.0, 1.0)


@given(st.floats(1, 1000), st.floats(-500, 500))
def test_conversions_are_inverse(b, h):
    back = phase_to_height(GEOM, b, height_to_phase(GEOM, b, h))
    assert back == pytest.approx(h, rel=1e-12, abs=1e-12)


def test_height_ambiguity_examples():
    assert height_ambiguity(GEOM, 7.5) == pytest.approx(632.9, abs=0.1)
    assert height_ambiguity(GEOM, 15.0) == pytest.approx(316.4, abs=0.1)
    with pytest.raises(ValueError):
        height_ambiguity(GEOM, 0.0)


@given(st.floats(0.1, 1000), st.floats(1.1, 50))
def test_height_ambiguity_inverse_scaling(b, k):
    assert height_ambiguity(GEOM, b * k) == pytest.approx(height_ambiguity(GEOM, b) / k, rel=1e-12)


def test_coherence_to_phase_std():
    assert coherence_to_phase_std(1.0) == 0.0
    assert coherence_to_phase_std(0.99) == pytest.approx(0.1008, abs=1e-4)
    assert coherence_to_phase_std(0.9) == pytest.approx(0.3425, abs=1e-4)
    for bad in (0.0, -0.1, 1.01):
        with pytest.raises(ValueError):
            coherence_to_phase_std(bad)
    with pytest.warns(ApproximationWarning):
        coherence_to_phase_std(0.8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        coherence_to_phase_std(0.95)


@pytest.mark.parametrize("mode, l2, expected", [
    (1, 200, [7.5, 100, 215]), (2, 300, [150, 165, 315]), (3, 150, [90, 157.5, 165]), (4, 100, [7.5, 107.5, 115]),
])
def test_equivalent_baselines(mode, l2, expected):
    assert equivalent_baselines(BaselineConfiguration(15.0, l2, Mode(mode))) == expected


@given(st.floats(0.5, 50), st.floats(1.0, 20), st.sampled_from(list(Mode)))
def test_equivalent_baselines_ascending(l1, extra, mode):
    b = equivalent_baselines(BaselineConfiguration(l1, l1 + extra, mode))
    assert all(x < y for x, y in zip(b, b[1:]))


def test_configuration_kinds():
    assert BaselineConfiguration(15, 300, Mode.CONFIG1).kinds[0] is InterferogramKind.DUAL_ANTENNA
    assert Mode.CONFIG4.monostatic and not Mode.CONFIG2.monostatic
    assert [k.orbit_factor for k in BaselineConfiguration(15, 100, Mode.CONFIG4).kinds] == [0, 2, 2]
    with pytest.raises(ValueError):
        BaselineConfiguration(0, 100)


def test_simplified_chain_has_one_fewer_link():
    cfg = BaselineConfiguration(15, 300, Mode.CONFIG2)
    assert simplified_baselines(cfg) == [165, 315]
    assert len(simplified_baselines(cfg)) == len(equivalent_baselines(cfg)) - 1


def _brute_force_b1(physical, max_int):
    cands = list(physical)
    for b in physical[1:]:
        for i in range(1, max_int + 1):
            v = abs(b - i * physical[0])
            if v > 0:
                cands.append(v)
    return min(cands)


def test_effective_baselines_examples():
    s = effective_baselines([150, 165, 315], max_int=3)
    assert s.effective == (15, 150, 165, 315)
    c = s.combination_map[0]
    assert not c.is_physical and c.value(s.physical) == pytest.approx(15)
    assert effective_baselines([7.5, 100, 215]).shortest == 7.5
    single = effective_baselines([42.0])
    assert single.shortest == single.longest == 42.0
    with pytest.raises(ValueError):
        effective_baselines([])


@given(st.lists(st.floats(1, 500), min_size=1, max_size=4, unique=True), st.integers(0, 5))
@settings(max_examples=200)
def test_effective_baselines_invariants(raw, max_int):
    phys = sorted(raw)
    if any(b - a < 1e-6 for a, b in zip(phys, phys[1:])):
        return
    s = effective_baselines(phys, max_int=max_int)
    assert list(s.effective) == sorted(s.effective)
    assert s.longest == max(phys)
    assert s.shortest <= min(phys)
    assert s.shortest == pytest.approx(_brute_force_b1(phys, max_int))
    for value, comb in zip(s.effective, s.combination_map):
        assert comb.value(s.physical) == pytest.approx(value, rel=1e-12)
    if max_int == 0:
        assert list(s.effective) == phys


def test_baseline_set_validation():
    with pytest.raises(ValueError):
        BaselineSet.from_physical([10, 5])
    with pytest.raises(ValueError):
        BaselineSet.from_physical([0, 5])


def test_combination_variance_inflation():
    s = effective_baselines([150, 165, 315], max_int=3)
    var = s.chain_variances([1.0, 1.0, 1.0])
    assert var[0] == pytest.approx(2.0)
    assert var[1:] == pytest.approx([1.0, 1.0, 1.0])


def test_helix_projection():
    f = HelixFormation(400.0, 0.0)
    assert helix_perpendicular_baseline(f, 0.0, GEOM) == pytest.approx(400 * math.cos(math.radians(30)))
    g = HelixFormation(400.0, 300.0, 0.4)
    u = np.linspace(0, 2 * np.pi, 17)
    assert np.allclose(helix_perpendicular_baseline(g, u, GEOM), helix_perpendicular_baseline(g, u + 2 * np.pi, GEOM))
    assert helix_perpendicular_baseline(g, 0.3, GEOM) != pytest.approx(helix_perpendicular_baseline(g, np.pi - 0.3, GEOM))
    with pytest.raises(ValueError):
        HelixFormation(-1.0, 0.0)
