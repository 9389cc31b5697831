import math

import numpy as np
import pytest

from heins_lab import construction as con
from heins_lab.errors import GeometryError, PreconditionError
from heins_lab.rotation import power


def test_requires_constructible_rotation():
    with pytest.raises(PreconditionError):
        con.build(power(1.0, 0.5))


def test_omega_avoids_half_plane(constructed):
    cp = constructed.profile
    assert con.omega_hits_half_plane(cp) == 0
    d = con.dist_omega_to_omegas(cp)
    assert d.sampled > 0 and d.analytic > 0


def test_g_on_the_boundary_spirals(constructed):
    cp = constructed.profile
    u = np.array([3.0, 5.0, 8.0])
    w = np.exp(u + 1j * cp.phi_minus(u))
    lg = con.eval_g(cp, w)
    # log g + 2 log w is purely imaginary on the spirals
    assert np.allclose((lg + 2 * con.log_branch(cp, w)).real, 0.0, atol=1e-6)
    with pytest.raises(GeometryError):
        con.eval_g(cp, np.array([5.0 + 0j]))


def test_contour_orientation_oracle(constructed):
    """Replacing g by 1/w^2 on the same contour must give -1/z^2 inside and 0 outside."""
    cp = constructed.profile
    cont = constructed.contour(1e4)
    ratio = np.exp(-2 * np.log(cont.w) - con.eval_g(cp, cont.w))
    oracle = con.Contour(cont.pieces, cont.arc_u, cont.panels, cont.w, cont.coef * ratio, cont.abs_g_dw,
                         cont.node_panel, cont.centers, cont.radii, cont.tail)
    u = np.array([3.0, 4.0])
    inside = np.exp(u + 1j * 0.5 * (cp.phi_minus(u) + cp.phi_plus(u)))
    outside = np.array([5.0 + 0j, -30.0 + 0j, 40j])
    outside = outside[~con.in_omega(cp, outside)]
    I_in = con._cauchy(oracle, cp, inside)
    I_out = con._cauchy(oracle, cp, outside)
    assert np.allclose(I_in, -1 / inside**2, atol=1e-7)
    assert np.allclose(I_out, 0.0, atol=1e-7)


def test_f_is_continuous_across_the_boundary(constructed):
    cp = constructed.profile
    u = 3.5
    v = float(cp.phi_minus(u))
    z = np.exp(u + 1j * np.array([v + 1e-3, v - 1e-3]))
    lf = constructed.log_abs_f(z)
    assert abs(lf[0] - lf[1]) < 1e-2


def test_deformation_invariance(constructed):
    z = np.array([7.0 + 3.0j, -12.0 + 9.0j])
    for zz in z:
        R = 2 * abs(zz)
        v1, t1 = con.eval_f_deformed(constructed, zz, R)
        v2, t2 = con.eval_f_deformed(constructed, zz, 2 * R)
        pb = con.pompeiu_bound(constructed, zz, R, 2 * R)
        assert abs(v1[0] - v2[0]) <= 2 * (t1[0] + t2[0] + pb[0])
    with pytest.raises(PreconditionError):
        con.eval_f_deformed(constructed, 30.0, 20.0)


def test_f_matches_full_contour_far_from_omega(constructed):
    z = np.array([-5.0 + 1.0j])
    v, tail = con.eval_f_deformed(constructed, z, 15.0)
    assert abs(v[0] - constructed(z)[0]) < 1e-4


def test_a_priori_bound_on_half_plane(constructed, quarter_power):
    eps = con.dist_omega_to_omegas(constructed.profile).sampled
    K = constructed.a_priori_bound(eps)
    zs = con.sample_half_plane(quarter_power, 100, r_max=1e3, seed=5)
    assert np.all(constructed.log_abs_f(zs) <= math.log(K))


def test_gamma_growth(constructed):
    curve = con.gamma_curve(constructed, [50.0, 100.0, 200.0])
    assert np.all(np.diff(curve.log_abs_g) > 0)
    assert np.all(np.abs(curve.residual) < 0.05)
    with pytest.raises(PreconditionError):
        con.gamma_curve(constructed, [10.0, 50.0])
