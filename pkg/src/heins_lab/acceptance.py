"""The eight end-to-end acceptance checks.

Each ``criterion_k()`` returns a dict with ``passed``, ``seconds``,
``limit`` and a ``details`` dict holding both sides of every comparison.
"""

from __future__ import annotations

import math
import time

import numpy as np

from . import circle_scan as cs
from . import construction as con
from . import harmonic_measure as hm
from . import strip_map as sm
from .rotation import classify, power, sqrt_log

TWO_PI = 2.0 * math.pi


def _timed(limit):
    def deco(fn):
        def run(**kw):
            t0 = time.perf_counter()
            passed, details = fn(**kw)
            dt = time.perf_counter() - t0
            return {"name": fn.__name__, "passed": bool(passed and dt < limit), "checks_passed": bool(passed),
                    "seconds": round(dt, 3), "limit": limit, "details": details}

        run.__name__ = fn.__name__
        run.__doc__ = fn.__doc__
        return run

    return deco


@_timed(10.0)
def two_arcs_exactness():
    """(e^z, e^-z): arc boundaries, m = 1/2 and zero growth defect."""
    n = 4096
    pair = cs.exp_pair()
    tol_b = TWO_PI / n * 2.0**-10
    rows = []
    ok = True
    for R in (1.0, 10.0, 100.0, 1000.0):
        a = cs.scan_circle(pair, R, n)
        b = np.sort(a.boundaries)
        err_b = float(np.max(np.abs(b - [math.pi / 2, 1.5 * math.pi]))) if b.size == 2 else math.inf
        mu, mv = cs.longest_arc_fraction(a, "f"), cs.longest_arc_fraction(a, "g")
        good = err_b <= tol_b and abs(mu - 0.5) <= 2 / n and abs(mv - 0.5) <= 2 / n
        ok &= good
        rows.append({"R": R, "boundary_err": err_b, "m_u": mu, "m_v": mv, "pass": good})
    prof = cs.lemma1_profile(pair, tau_grid=np.arange(1, 121) * 0.05, n=n)
    d = cs.defect_integral(prof)
    ok &= abs(d) < 0.01
    return ok, {"circles": rows, "boundary_tol": tol_b, "defect": d, "defect_tol": 0.01}


@_timed(5.0)
def lemma3_constant(samples=10_000, seed=0):
    """delta(eps) formula and the strict inequality on random (x, y)."""
    eps_grid = np.linspace(0.01, 0.49, 49)
    formula_err = max(abs(cs.lemma3_delta(e) - min(4 / (1 - e * e) - 4, 4 / (1 - e) - 4)) for e in eps_grid)
    rng = np.random.default_rng(seed)
    x = rng.uniform(0, 1, samples)
    y = (1 - x) * rng.uniform(0, 1, samples)
    keep = (x > 0) & (y > 0)
    x, y = x[keep], y[keep]
    eps = rng.uniform(1e-3, 0.5 - 1e-3, x.size)
    active = np.abs(x - 0.5) > eps
    delta = np.array([cs.lemma3_delta(e) for e in eps])
    viol = int(np.sum(active & ~(1 / x + 1 / y > 4 + delta)))
    return formula_err == 0.0 and viol == 0, {"formula_err": formula_err, "samples": int(x.size),
                                               "active": int(active.sum()), "violations": viol}


@_timed(120.0)
def m_sum_bound(circles=100, n_canonical=1024, n_constructed=128):
    """m_u + m_v <= 1 on every scanned circle, canonical and constructed pairs."""
    out = {}
    total = 0
    viol = 0
    pair = cs.exp_pair()
    tol = cs.m_resolution(n_canonical)
    worst = 0.0
    for R in np.geomspace(0.1, 1000, circles):
        a = cs.scan_circle(pair, R, n_canonical)
        s = cs.longest_arc_fraction(a, "f") + cs.longest_arc_fraction(a, "g")
        worst = max(worst, s)
        viol += s > 1 + tol
        total += 1
    out["canonical"] = {"circles": circles, "max_sum": worst, "tol": 1 + tol}
    cf = con.build(power(1.0, 0.25), fixed_R_cut=True)
    eps = con.dist_omega_to_omegas(cf.profile).sampled
    K = cf.a_priori_bound(eps)
    logK = math.log(K)
    F = cs.reflected_pair(lambda z: cf.log_abs_f(z) - logK)
    tol = cs.m_resolution(n_constructed)
    worst = 0.0
    for R in np.geomspace(1.0, 1000, circles):
        a = cs.scan_circle(F, R, n_constructed)
        s = cs.longest_arc_fraction(a, "f") + cs.longest_arc_fraction(a, "g")
        worst = max(worst, s)
        viol += s > 1 + tol
        total += 1
    out["constructed"] = {"circles": circles, "max_sum": worst, "tol": 1 + tol, "K": K}
    out["total_circles"] = total
    out["violations"] = int(viol)
    return viol == 0 and total >= 200, out


RECTANGLES = ((2.0, 1.0, 1.5), (3.0, 2.0, 1.0), (4.0, 3.5, 0.5), (1.5, 0.5, 2.5), (5.0, 4.0, 1.57))


def random_cap(rng):
    """A graph-strip cap with h(a) = A a^p and a start point inside."""
    A = rng.uniform(0.5, 2.0)
    p = rng.uniform(0.25, 0.75)
    t = rng.uniform(3.0, 8.0)
    a0 = rng.uniform(0.5, 1.5)

    def h(a, A=A, p=p):
        return A * np.asarray(a, dtype=float) ** p

    dom = hm.LogDomain(h, t)
    z0 = complex(a0, float(h(a0)) + rng.uniform(0.5, math.pi - 0.5))
    return hm.HMProblem(dom, z0), {"A": A, "p": p, "t": t, "z0": [z0.real, z0.imag]}


@_timed(120.0)
def harmonic_measure_calibration(seed=7):
    """Disk, rectangle series oracle and the extremal-length bound on random caps."""
    disk = hm.walk_on_spheres(hm.DiskDomain(), 0j, walks=100_000, seed=seed)
    ok_disk = abs(disk.omega - 0.5) <= 0.01
    rects = []
    for i, (L, x, y) in enumerate(RECTANGLES):
        r = hm.wos_measure(hm.HMProblem(hm.rectangle(L), complex(x, y)), walks=20_000, seed=seed + i)
        s = hm.rectangle_series(x, y, L)
        rects.append({"L": L, "z0": [x, y], "omega": r.omega, "stderr": r.stderr, "series": s,
                      "pass": abs(r.omega - s) <= 3 * r.stderr})
    rng = np.random.default_rng(seed)
    caps = []
    for i in range(20):
        prob, info = random_cap(rng)
        bound, g = hm.problem_bound(prob)
        r = hm.wos_measure(prob, walks=10_000, seed=seed + 100 + i)
        info.update(omega=r.omega, stderr=r.stderr, dist=g.value, bound=bound,
                    **{"pass": r.omega <= bound + 3 * r.stderr})
        caps.append(info)
    ok = ok_disk and all(r["pass"] for r in rects) and all(c["pass"] for c in caps)
    return ok, {"disk": {"omega": disk.omega, "stderr": disk.stderr, "pass": ok_disk},
                "rectangles": rects, "caps": caps}


@_timed(120.0)
def sqrt_decay(seed=11):
    """t_k for h = sqrt(a), c = 1; analytic bound below 1e-6 at n*; MC below it."""
    h = sqrt_log(1.0, x_min=0.0).h
    tk = hm.build_tk(h, 1.0, 1e60, a0=1.0)
    C = 1.0
    ns = hm.n_star(tk.t_values[0], tk.c, C)
    ok = tk.check() and len(tk.t_values) > ns + 1
    t_win = np.geomspace(tk.t_values[ns], tk.t_values[ns + 1], 64)[:-1]
    b_win = hm.decay_bound(tk, C, t_win)
    ok &= bool(np.all(b_win < 1e-6))
    ds = hm.u_decay(h, tk, C, [2.0, 3.0, 5.0, 8.0, 12.0, 16.0, 20.0], walks=20_000, seed=seed)
    mc_ok = ds.mc <= ds.bound + 3 * ds.mc_err
    ok &= bool(np.all(mc_ok))
    return ok, {"t_k_head": tk.t_values[:5].tolist(), "count": len(tk.t_values), "n_star": ns,
                "max_bound_at_n_star": float(b_win.max()),
                "mc": [{"t": float(t), "n": int(n), "bound": float(b), "mc": float(m), "err": float(e),
                        "pass": bool(p)} for t, n, b, m, e, p in zip(ds.t, ds.n, ds.bound, ds.mc, ds.mc_err, mc_ok)]}


@_timed(300.0)
def strip_window(meshes=(64, 96, 128), u1=5.0, u2=60.0):
    """Straight strip exactness; bounds around X2 - X1 on the construction profile."""
    prof = sm.straight(math.pi, 0.0, 0.0)
    smap = sm.solve_strip_map(prof, 40.0, mesh=64)
    s1, s2 = 5.0, 25.0
    xd = sm.core_increment(smap, s1, s2)
    st = {"x_diff": xd, "exact": s2 - s1,
          "IIIa": sm.wars_IIIa_lower(prof, s1, s2), "IVa": sm.wars_IVa_upper(prof, s1, s2, 0.0),
          "VI": sm.wars_VI_lower(prof, s1, s2)}
    ok_st = (abs(xd - (s2 - s1)) <= 1e-6 and st["IIIa"] - 4 * math.pi <= xd <= st["IVa"]
             and st["VI"] <= xd + 1e-6)
    st["pass"] = ok_st
    prof = sm.construction_profile(power(1.0, 0.25))
    m = sm.slope_bound(prof, u1, u2)
    lo_III = sm.wars_IIIa_lower(prof, u1, u2)
    up = sm.wars_IVa_upper(prof, u1, u2, m)
    lo_VI = sm.wars_VI_lower(prof, u1, u2)
    diffs = []
    for mesh in meshes:
        smap = sm.solve_strip_map(prof, u2 + 10.0, mesh=mesh)
        diffs.append(sm.core_increment(smap, u1, u2))
    xd = diffs[-1]
    slack = float(max(diffs) - min(diffs))
    ok_c = lo_VI - slack <= xd <= up and lo_III - xd <= 4 * math.pi
    return ok_st and ok_c, {"straight": st, "construction": {
        "meshes": list(meshes), "x_diff": diffs, "slack": slack, "m": m, "IIIa": lo_III,
        "IIIa_excess": lo_III - xd, "IVa": up, "VI": lo_VI, "pass": ok_c}}


@_timed(600.0)
def construction_end_to_end(seed=3):
    """Boundary smallness, deformation invariance, a-priori bound, growth along Gamma, type."""
    rf = power(1.0, 0.25)
    cf = con.build(rf)
    d = {}
    # (a) log|g| + 2 log|w| on the boundary, two truncation radii
    exc = [cf.boundary_log_excess(1e4), cf.boundary_log_excess(1e6)]
    ok_a = all(math.isfinite(e) for e in exc) and exc[1] <= exc[0] + 1e-6
    d["a"] = {"excess_1e4": exc[0], "excess_1e6": exc[1], "pass": ok_a}
    # (b) deformation invariance
    rng = np.random.default_rng(seed)
    r = np.concatenate([rng.uniform(6.0, 9.5, 10), rng.uniform(10.5, 25.0, 10)])
    z = r * np.exp(1j * rng.uniform(0, TWO_PI, 20))
    rows = []
    for zz in z:
        R1 = 2 * abs(zz)
        v1, t1 = con.eval_f_deformed(cf, zz, R1)
        v2, t2 = con.eval_f_deformed(cf, zz, 2 * R1)
        pb = float(con.pompeiu_bound(cf, zz, R1, 2 * R1)[0])
        diff = float(abs(v1[0] - v2[0]))
        tol = 2 * (float(t1[0]) + float(t2[0]) + pb)
        rows.append({"z": [zz.real, zz.imag], "diff": diff, "tol": tol, "pass": diff <= tol})
    ok_b = all(x["pass"] for x in rows)
    d["b"] = {"points": rows, "pass": ok_b}
    # (c) sup |f| on the rotating half-plane against the a-priori constant
    eps = con.dist_omega_to_omegas(cf.profile)
    K = cf.a_priori_bound(eps.sampled)
    zs = con.sample_half_plane(rf, 500, r_max=1e4, seed=seed)
    sup = float(np.exp(np.max(cf.log_abs_f(zs))))
    ok_c = sup <= K
    d["c"] = {"eps": eps.sampled, "eps_analytic": eps.analytic, "K": K, "sup_abs_f": sup, "pass": ok_c}
    # (d) growth along Gamma
    curve = con.gamma_curve(cf, [50.0, 100.0, 200.0, 400.0])
    lf = cf.log_abs_f(curve.points)
    c = con.fit_growth_constant(curve)
    ok_d = bool(np.all(np.diff(lf) > 0)) and c > 0
    d["d"] = {"log_abs_f": lf.tolist(), "c": c, "pass": ok_d}
    # (e) type estimate under grid extension
    e1 = con.exp_type_estimate(cf.log_abs_f, np.geomspace(20, 400, 12))
    e2 = con.exp_type_estimate(cf.log_abs_f, np.geomspace(20, 800, 14))
    ok_e = math.isfinite(e1) and math.isfinite(e2) and abs(e2 - e1) <= 0.1 * abs(e1)
    d["e"] = {"grid_400": e1, "grid_800": e2, "rel_change": abs(e2 - e1) / abs(e1), "pass": ok_e}
    return ok_a and ok_b and ok_c and ok_d and ok_e, d


@_timed(5.0)
def classification_table():
    """The three reference rotations land in their expected classes."""
    cases = [("x^(1/4)", power(1.0, 0.25), "constructible"),
             ("sqrt(log r)", sqrt_log(1.0), "constant_only_sqrtlog"),
             ("sqrt(x)", power(1.0, 0.5), "constant_only_regular")]
    rows = []
    for name, rf, want in cases:
        got = classify(rf).verdict
        rows.append({"rotation": name, "verdict": got, "expected": want, "pass": got == want})
    return all(r["pass"] for r in rows), {"rows": rows}


CRITERIA = (two_arcs_exactness, lemma3_constant, m_sum_bound, harmonic_measure_calibration,
            sqrt_decay, strip_window, construction_end_to_end, classification_table)


def run_all():
    return [fn() for fn in CRITERIA]
