import math

import numpy as np
import pytest

from heins_lab import strip_map as sm
from heins_lab.errors import PreconditionError
from heins_lab.rotation import power


@pytest.fixture(scope="module")
def straight_map():
    return sm.solve_strip_map(sm.straight(math.pi, 0.0, 0.0), 30.0, mesh=64)


@pytest.fixture(scope="module")
def quarter_map():
    prof = sm.construction_profile(power(1.0, 0.25))
    return prof, sm.solve_strip_map(prof, 50.0, mesh=64)


def test_straight_strip_is_identity(straight_map):
    assert sm.core_increment(straight_map, 4.0, 20.0) == pytest.approx(16.0, abs=1e-6)
    assert straight_map.residual < 1e-9
    w = np.array([10.0 + 0.3j, 15.0 - 1.0j])
    Z = straight_map.Z(w)
    assert np.allclose(Z.imag, w.imag, atol=1e-6)


def test_straight_strip_bounds():
    prof = sm.straight(2.0, 1.0, 0.0)
    assert sm.wars_IIIa_lower(prof, 1.0, 11.0) == pytest.approx(5 * math.pi)
    assert sm.wars_VI_lower(prof, 1.0, 11.0) == pytest.approx(5 * math.pi)
    assert sm.wars_IVa_upper(prof, 1.0, 11.0, 0.0) == pytest.approx(5 * math.pi + 8 * math.pi)


def test_profile_tracks_rotation():
    rf = power(1.0, 0.25)
    prof = sm.construction_profile(rf)
    u = np.array([5.0, 50.0])
    mid = 0.5 * (prof.pm(u) + prof.pp(u))
    assert np.allclose(mid, rf.h(u) + 1.5 * math.pi)
    assert np.all(prof.theta(u) > 0)


def test_construction_map_bounds_order(quarter_map):
    prof, smap = quarter_map
    xd = sm.core_increment(smap, 5.0, 40.0)
    m = sm.slope_bound(prof, 5.0, 40.0)
    assert sm.wars_IIIa_lower(prof, 5.0, 40.0) - 4 * math.pi <= xd <= sm.wars_IVa_upper(prof, 5.0, 40.0, m)
    assert sm.wars_VI_lower(prof, 5.0, 40.0) <= xd + 1e-3


def test_conformality_residuals(quarter_map):
    _, smap = quarter_map
    assert smap.residual < 1e-8
    assert smap.cr_residual < 1e-3


def test_core_curve_maps_to_real_axis(quarter_map):
    prof, smap = quarter_map
    u = np.linspace(6, 30, 20)
    curve = sm.image_curve_Xiii(smap, 0.0, u)
    assert np.all(np.abs(curve.relative_residual) < 0.02)
    assert np.all(np.diff(curve.X) > 0)


def test_preconditions():
    prof = sm.straight()
    with pytest.raises(PreconditionError):
        sm.solve_strip_map(prof, 10.0)
    with pytest.raises(PreconditionError):
        sm.solve_strip_map(prof, 30.0, mesh=63)
    with pytest.raises(PreconditionError):
        sm.wars_IIIa_lower(prof, -1.0, 3.0)
    with pytest.raises(PreconditionError):
        sm.wars_IVa_upper(sm.construction_profile(power(1.0, 0.25)), 3.0, 10.0, 1e-6)
    with pytest.raises(PreconditionError):
        sm.wars_VI_lower(sm.construction_profile(power(1.0, 0.5)), 3.0, 10.0)
