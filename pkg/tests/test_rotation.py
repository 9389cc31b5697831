import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heins_lab.errors import GeometryError, PreconditionError
from heins_lab.rotation import (RotatingHalfPlane, RotationFunction, classify, constant, habs2_int, power,
                                sqint, sqrt_log, sqrtlog_limsup_probe, tail_fit)


def test_closed_form_integrals():
    rf = power(1.0, 0.25)
    # int_1^inf (x^{-3/4}/4)^2 = 1/8, int_1^inf 3/16 x^{-7/4} = 1/4
    assert sqint(rf, math.inf) == pytest.approx(0.125, rel=1e-9)
    assert habs2_int(rf, math.inf) == pytest.approx(0.25, rel=1e-9)
    assert habs2_int(power(1.0, 0.5), math.inf) == pytest.approx(0.5, rel=1e-9)
    assert sqint(power(1.0, 0.5), math.e**2) == pytest.approx(0.5, rel=1e-9)


def test_tail_fit_verdicts():
    assert tail_fit(lambda x: x**-1.5).verdict == "convergent"
    assert tail_fit(lambda x: 1.0 / x).verdict == "divergent"
    fit = tail_fit(lambda x: x**-1.5)
    assert fit.beta == pytest.approx(0.5, abs=1e-6)


@pytest.mark.parametrize("rf,verdict", [
    (power(1.0, 0.25), "constructible"),
    (constant(2.0), "constructible"),
    (sqrt_log(1.0), "constant_only_sqrtlog"),
    (power(1.0, 0.5), "constant_only_regular"),
    (power(1.0, 1.0), "constant_only_regular"),
])
def test_classify(rf, verdict):
    assert classify(rf).verdict == verdict


def test_sqrtlog_probe():
    r = np.exp(np.geomspace(1, 700, 200))
    assert sqrtlog_limsup_probe(sqrt_log(2.0), r) == pytest.approx(2.0)


def test_table_family_matches_knots():
    x = np.linspace(1, 50, 30)
    rf = RotationFunction("table", knots=tuple(zip(x, x**0.25)))
    assert rf.h(10.0) == pytest.approx(10**0.25, rel=1e-3)
    assert rf.dh(100.0) == pytest.approx(rf.dh(60.0))  # linear continuation
    with pytest.raises(PreconditionError):
        RotationFunction("table", knots=((1, 0), (2, 1), (3, 0)))


def test_json_roundtrip():
    rf = power(2.0, 0.3).shifted(0.5)
    assert RotationFunction.from_json('{"family": "power", "a": 2, "p": 0.3, "shift": 0.5}') == rf
    assert RotationFunction.from_dict(rf.to_dict()) == rf
    with pytest.raises(PreconditionError):
        RotationFunction.from_dict({"family": "power", "q": 1})
    with pytest.raises(PreconditionError):
        RotationFunction.from_dict({"family": "spline"})


def test_origin_rejected():
    with pytest.raises(GeometryError):
        RotatingHalfPlane(power()).contains(0j)


def test_constant_half_plane_is_upper_half_plane():
    hp = RotatingHalfPlane(constant(0.0))
    z = np.array([1j, -1j, 2 + 1j, -3 - 0.1j])
    assert hp.contains(z).tolist() == [True, False, True, False]


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-3, 1e6), st.floats(-math.pi, math.pi), st.floats(0.1, 3.0), st.floats(0.05, 0.95))
def test_half_plane_and_complement_are_disjoint(r, ang, a, p):
    hp = RotatingHalfPlane(power(a, p))
    z = r * complex(math.cos(ang), math.sin(ang))
    inside, outside = hp.contains(z), hp.complement().contains(z)
    assert not (inside and outside)
    alpha = float(hp.unwrapped_angle(z))
    s = float(hp.rotation.s(r))
    assert s - math.pi < alpha <= s + math.pi + 1e-12


@settings(max_examples=100, deadline=None)
@given(st.floats(1.5, 1e4), st.floats(0.1, 3.0), st.floats(0.05, 0.95))
def test_derivatives_match_finite_differences(x, a, p):
    rf = power(a, p)
    h = 1e-5 * x
    fd1 = (rf.h(x + h) - rf.h(x - h)) / (2 * h)
    fd2 = (rf.dh(x + h) - rf.dh(x - h)) / (2 * h)
    assert rf.dh(x) == pytest.approx(fd1, rel=1e-6, abs=1e-12)
    assert rf.d2h(x) == pytest.approx(fd2, rel=1e-5, abs=1e-12)


@settings(max_examples=10, deadline=None)
@given(st.floats(-10, 10))
def test_classification_is_shift_invariant(delta):
    for rf in (power(1.0, 0.25), power(1.0, 0.5)):
        assert classify(rf.shifted(delta)).verdict == classify(rf).verdict
