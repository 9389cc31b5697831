import math

import numpy as np
import pytest

from heins_lab import harmonic_measure as hm
from heins_lab.errors import PreconditionError
from heins_lab.rotation import constant, sqrt_log


def sqrt_h(a):
    return np.sqrt(np.asarray(a, dtype=float))


def test_series_oracle():
    # by symmetry each side of a square carries 1/4 at the centre
    assert hm.rectangle_series(math.pi / 2, math.pi / 2, math.pi) == pytest.approx(0.25, abs=1e-12)
    # far from the target edge the first term dominates
    x, L = 1.0, 10.0
    assert hm.rectangle_series(x, math.pi / 2, L) == pytest.approx(4 / math.pi * math.sinh(x) / math.sinh(L), rel=1e-4)


def test_square_against_quarter_disk():
    """The square maps conformally onto the disk sending the centre to 0 and each side to a quarter arc."""
    r = hm.walk_on_spheres(hm.DiskDomain(0.0, math.pi / 2), 0j, walks=40_000, seed=1)
    s = hm.rectangle_series(math.pi / 2, math.pi / 2, math.pi)
    assert abs(r.omega - s) <= 3 * r.stderr


def test_polygon_distance_and_area():
    dom = hm.rectangle(2.0)
    assert dom.polygon.area == pytest.approx(2 * math.pi, rel=1e-9)
    d, lab = dom.distance(np.array([[1.9, 1.5], [1.0, 0.2]]))
    assert d == pytest.approx([0.1, 0.2]) and lab.tolist() == [True, False]


def test_additivity():
    dom = hm.rectangle(3.0)
    z0 = complex(1.5, 1.2)
    r = hm.walk_on_spheres(dom, z0, walks=20_000, seed=4)
    comp = hm.walk_on_spheres(hm.PolygonDomain(dom.polygon.a, ~dom.polygon.target), z0, walks=20_000, seed=5)
    assert abs(r.omega + comp.omega - 1.0) <= 3 * math.hypot(r.stderr, comp.stderr)


def test_monotone_in_the_target():
    small = hm.LogDomain(sqrt_h, 4.0)
    big = hm.LogDomain(sqrt_h, 4.0, extra_target=1.0)
    z0 = complex(1.0, 1.0 + math.pi / 2)
    a = hm.walk_on_spheres(small, z0, walks=10_000, seed=9)
    b = hm.walk_on_spheres(big, z0, walks=10_000, seed=9)
    assert b.hits >= a.hits


def test_rectangle_geodesic_is_straight():
    p = hm.HMProblem(hm.rectangle(5.0), complex(1.0, 1.5))
    g = hm.geodesic_dist(p)
    assert g.value == pytest.approx(4.0, rel=1e-6)
    assert g.straight == pytest.approx(4.0)


def test_geodesic_at_least_chain():
    rf = sqrt_log(1.0, x_min=0.0)
    tk = hm.build_tk(rf.h, 1.0, 1e30, a0=1.0)
    p = hm.HMProblem(hm.LogDomain(rf.h, 100.0), complex(1.0, 1.0 + math.pi / 2))
    g = hm.geodesic_dist(p, spacing=0.2)
    assert g.value >= hm.chain_lower_bound(rf.h, tk, 100.0) * (1 - 0.005)


def test_beurling_bound_on_rectangle():
    L = 4.0
    p = hm.HMProblem(hm.rectangle(L), complex(0.5, math.pi / 2))
    bound, g = hm.problem_bound(p)
    assert hm.rectangle_series(0.5, math.pi / 2, L) <= bound


def test_preconditions():
    dom = hm.rectangle(3.0)
    with pytest.raises(PreconditionError):
        hm.HMProblem(dom, complex(1.0, 4.0))
    with pytest.raises(PreconditionError):
        hm.HMProblem(dom, complex(1.0, 1.0), sigma=np.array([[1.0, 0.0], [3.0, 1.0]]))
    with pytest.raises(PreconditionError):
        hm.walk_on_spheres(dom, complex(1, 1), shell=0.1)
    with pytest.raises(PreconditionError):
        hm.build_tk(constant(1.0).h, 1.0, 1e40)
    with pytest.raises(PreconditionError):
        hm.build_tk(sqrt_h, 2.0, 1e40)


def test_t_k_sequence():
    tk = hm.build_tk(sqrt_h, 1.0, 1e40, a0=1.0)
    assert tk.check()
    # t_2 is the first t with sqrt(t)/2 > h(t_1) + pi + 1/8
    t1 = tk.t_values[0]
    assert tk.t_values[1] == pytest.approx((2 * (math.sqrt(t1) + math.pi + 0.125)) ** 2, rel=2e-4)
    assert tk.n(tk.t_values[3]) == 3 and tk.n(tk.t_values[3] * 0.999) == 2


def test_decay_bound_algebra():
    tk = hm.build_tk(sqrt_h, 1.0, 1e40, a0=1.0)
    t = np.array([50.0, 1e3, 1e6])
    n = np.array([tk.n(x) for x in t])
    direct = 8 / math.pi * np.exp(t - (t - tk.t_values[0] + n / 8) ** 2 / t)
    assert np.allclose(hm.decay_bound(tk, 1.0, t), direct, rtol=1e-9)
    ns = hm.n_star(tk.t_values[0], 1.0, 1.0)
    assert 8 / math.pi * math.exp(2 * (tk.t_values[0] - ns / 8)) < 1e-6
    assert 8 / math.pi * math.exp(2 * (tk.t_values[0] - (ns - 1) / 8)) >= 1e-6


def test_seeded_runs_are_reproducible():
    dom = hm.rectangle(2.0)
    a = hm.walk_on_spheres(dom, complex(1, 1), walks=2000, seed=3)
    b = hm.walk_on_spheres(dom, complex(1, 1), walks=2000, seed=3)
    assert a == b
