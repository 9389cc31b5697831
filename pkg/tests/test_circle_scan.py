import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from heins_lab import circle_scan as cs
from heins_lab.errors import PreconditionError


def test_canonical_boundaries_and_tags():
    a = cs.scan_circle(cs.exp_pair(), 5.0, 256)
    assert np.allclose(np.sort(a.boundaries), [math.pi / 2, 1.5 * math.pi], atol=2 * math.pi / 256 * 2**-10)
    assert set(a.tags) == {"f", "g"}
    assert cs.longest_arc_fraction(a, "f") == pytest.approx(0.5, abs=1e-3)


def test_shifted_exponentials_move_the_boundary():
    # |2 e^z| > 1 iff Re z > -log 2, so on |z| = R the arc is cos(theta) > -log(2)/R
    R = 4.0
    a = cs.scan_circle(cs.exp_pair(cf=2.0), R, 1024)
    m = cs.longest_arc_fraction(a, "f")
    assert m == pytest.approx(math.acos(-math.log(2) / R) / math.pi, abs=2 / 1024)


def test_constant_pair_has_no_boundaries():
    a = cs.scan_circle(cs.constant_pair(2.0, 0.5), 3.0, 64)
    assert a.boundaries.size == 0
    assert math.isinf(cs.longest_arc_fraction(a, "f"))
    assert cs.longest_arc_fraction(a, "g") == 0.0
    assert cs.eta(math.inf) == 0.0 and math.isinf(cs.eta(0.0))


def test_reflected_pair_uses_rotated_samples():
    pair = cs.reflected_pair(lambda z: np.real(z))
    a = cs.scan_circle(pair, 2.0, 128)
    assert np.allclose(a.log_g, -a.log_f)


def test_bad_inputs():
    with pytest.raises(PreconditionError):
        cs.scan_circle(cs.exp_pair(), 1.0, 100)
    with pytest.raises(PreconditionError):
        cs.scan_circle(cs.exp_pair(), -1.0, 128)
    with pytest.raises(PreconditionError):
        cs.lemma3_delta(0.5)


def test_growth_profile_canonical():
    prof = cs.lemma1_profile(cs.exp_pair(), tau_max=3, steps=60, n=512)
    assert cs.defect_integral(prof) == pytest.approx(0.0, abs=1e-6)
    # LHS(tau) = pi e^{2 tau} / 2 exactly for u = log+|e^z|
    assert prof.lhs[-1] == pytest.approx(math.pi * math.exp(6) / 2, rel=1e-6)
    assert prof.witnessed_constant > 0


def test_two_arcs_canonical_passes():
    rep = cs.two_arcs_check(cs.exp_pair(), [0.5, 2.0, 5.0], eps=0.05, n=512)
    assert rep.passed.all() and rep.failing_measure == 0.0
    assert np.all(rep.B_measure < 1e-5)


def test_two_arcs_fails_for_unbalanced_pair():
    # on |z| = e, |e^{-3} e^z| <= 1 everywhere, so the arc where f is large is empty
    pair = cs.exp_pair(cf=math.exp(-3), a=1.0, cg=1.0, b=1.0)
    rep = cs.two_arcs_check(pair, [1.0], eps=0.1, n=512)
    assert not rep.passed[0]


def test_min_modulus_sup():
    v = cs.min_modulus_sup(cs.exp_pair(), {"r_min": 1, "r_max": 10, "n_r": 10, "n_theta": 64})
    assert v == pytest.approx(1.0, abs=1e-12)


@settings(max_examples=2000, deadline=None)
@given(st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.floats(1e-3, 0.499))
def test_lemma3_inequality(x, frac, eps):
    y = (1.0 - x) * frac
    if y <= 0 or abs(x - 0.5) <= eps:
        return
    assert 1 / x + 1 / y > 4 + cs.lemma3_delta(eps)
