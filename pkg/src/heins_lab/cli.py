"""Command-line entry point: ``heins-lab <command> ...``.

Exit codes: 0 ok, 1 failed check, 2 geometry error, 3 numeric error,
4 precondition violation, 64 usage error.

CSV columns
  scan            tau,m_u,m_v,eta_u,eta_v,lhs,rhs,two_arcs_pass,B_measure
  stripmap-check  u1,u2,x_diff,IIIa,IVa,VI,pass_IIIa,pass_IVa,pass_VI
  construct probe kind,re,im,log_abs_f
Every CSV starts with one ``#`` line recording the run parameters.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from . import acceptance
from . import circle_scan as cs
from . import construction as con
from . import harmonic_measure as hm
from . import strip_map as sm
from . import svg
from .errors import LabError, PreconditionError
from .rotation import RotationFunction, classify

USAGE_EXIT = 64


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_EXIT, f"{self.prog}: usage error: {message}\n")


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        return x if math.isfinite(x) else str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    return x


def _dumps(obj):
    return json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n"


def _emit(text, path):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(text)


def _csv(header, rows, params):
    buf = io.StringIO()
    buf.write("# " + json.dumps(_jsonable(params), sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def _rotation(arg) -> RotationFunction:
    if arg is None:
        raise _UsageError("--rotation is required")
    p = Path(arg)
    text = p.read_text() if not arg.lstrip().startswith("{") and p.exists() else arg
    try:
        return RotationFunction.from_json(text)
    except json.JSONDecodeError as e:
        raise _UsageError(f"--rotation: invalid JSON ({e})") from None
    except PreconditionError as e:
        raise _UsageError(f"--rotation: {e}") from None


class _UsageError(Exception):
    pass


def _point(text):
    try:
        a, b = (float(v) for v in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'a,b'") from None
    return complex(a, b)


def _threads():
    try:
        return max(1, int(os.environ.get("HEINS_LAB_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------- commands
def cmd_classify(args):
    rf = _rotation(args.rotation)
    c = classify(rf)
    _emit(_dumps({"rotation": rf.to_dict(), "verdict": c.verdict, "evidence": c.evidence}), args.out)
    return 0


def _scan_pair(args):
    if args.pair == "canonical":
        return cs.exp_pair(), {}
    cf = con.build(_rotation(args.rotation), fixed_R_cut=True)
    eps = con.dist_omega_to_omegas(cf.profile).sampled
    K = cf.a_priori_bound(eps)
    logK = math.log(K)
    return cs.reflected_pair(lambda z: cf.log_abs_f(z) - logK), {"K": K, "eps": eps}


def cmd_scan(args):
    pair, extra = _scan_pair(args)
    tau = np.arange(1, int(round(args.tau_max / args.step)) + 1) * args.step
    prof = cs.lemma1_profile(pair, tau_grid=tau, n=args.n)
    two = cs.two_arcs_check(pair, tau, args.eps, n=args.n)
    rows = zip(tau, prof.m_u, prof.m_v, prof.eta_u, prof.eta_v, prof.lhs, prof.rhs, two.passed, two.B_measure)
    params = {"command": "scan", "pair": args.pair, "n": args.n, "eps": args.eps, "tau_max": args.tau_max,
              "step": args.step, "defect": cs.defect_integral(prof), **extra}
    _emit(_csv(["tau", "m_u", "m_v", "eta_u", "eta_v", "lhs", "rhs", "two_arcs_pass", "B_measure"], rows, params),
          args.out)
    if args.svg:
        sel = [float(t) for t in args.svg_tau]
        arcs = [cs.scan_circle(pair, math.exp(t), args.n) for t in sel]
        _emit(svg.ring_diagram(arcs, [f"tau={t:g}" for t in sel]), args.svg)
    return 0


def cmd_stripmap(args):
    if args.profile == "straight":
        prof = sm.straight(math.pi, 0.0, 0.0)
    else:
        prof = sm.construction_profile(_rotation(args.rotation))
    windows = [tuple(float(v) for v in w.split(":")) for w in args.windows.split(",")]
    u_max = max(w[1] for w in windows) + 10.0
    u_max = max(u_max, prof.u_min + 20.0)
    smap = sm.solve_strip_map(prof, u_max, mesh=args.mesh)
    rows = []
    failed = False
    for u1, u2 in windows:
        xd = sm.core_increment(smap, u1, u2)
        m = sm.slope_bound(prof, u1, u2)
        lo3 = sm.wars_IIIa_lower(prof, u1, u2)
        up = sm.wars_IVa_upper(prof, u1, u2, m)
        lo6 = sm.wars_VI_lower(prof, u1, u2)
        flags = (lo3 - 4 * math.pi <= xd, xd <= up, lo6 - args.slack <= xd)
        failed |= not all(flags)
        rows.append((u1, u2, xd, lo3, up, lo6, *flags))
    params = {"command": "stripmap-check", "profile": args.profile, "mesh": args.mesh, "slack": args.slack,
              "residual": smap.residual, "cr_residual": smap.cr_residual}
    _emit(_csv(["u1", "u2", "x_diff", "IIIa", "IVa", "VI", "pass_IIIa", "pass_IVa", "pass_VI"], rows, params),
          args.out)
    if args.svg:
        u = np.linspace(prof.u_min, u_max - 5, 400)
        curves = [(np.c_[u, prof.pm(u)], "#000", 1.5), (np.c_[u, prof.pp(u)], "#000", 1.5)]
        for y in (-0.75, 0.0, 0.75):
            v, _ = smap.trace(y * math.pi / 2, u)
            curves.append((np.c_[u, v], "#d62728", 1))
        _emit(svg.polylines(curves), args.svg)
    return 1 if failed else 0


def _manifest(cf, rf):
    eps = con.dist_omega_to_omegas(cf.profile)
    curve = con.gamma_curve(cf, [50.0, 100.0, 200.0, 400.0])
    return {
        "rotation": rf.to_dict(),
        "R_cut": cf.R_cut_min,
        "eps": eps.sampled,
        "eps_analytic": eps.analytic,
        "boundary_mass": cf.boundary_mass(),
        "a_priori_K": cf.a_priori_bound(eps.sampled),
        "boundary_log_excess": cf.boundary_log_excess(),
        "growth_c": con.fit_growth_constant(curve),
        "gamma_log_abs_g": curve.log_abs_g,
        "version": __version__,
    }


def cmd_construct(args):
    rf = _rotation(args.rotation)
    cf = con.build(rf, mesh=args.mesh)
    if args.action == "build":
        _emit(_dumps(_manifest(cf, rf)), args.out)
        return 0
    if args.action == "eval":
        if args.z is None:
            raise _UsageError("construct eval: --z is required")
        lf = complex(cf.log_f(np.array([args.z]))[0])
        out = {"z": args.z, "log_abs_f": lf.real, "certified_tail": float(cf.certified_tail(np.array([args.z]))[0])}
        if lf.real < 700:
            out["f"] = complex(np.exp(lf))
        _emit(_dumps(out), args.out)
        return 0
    # probe
    zs = con.sample_half_plane(rf, args.samples, r_max=1e4, seed=args.seed)
    lf = cf.log_abs_f(zs)
    curve = con.gamma_curve(cf, np.geomspace(30.0, 400.0, 24))
    lg = cf.log_abs_f(curve.points)
    rows = [("omega_s", z.real, z.imag, v) for z, v in zip(zs, lf)]
    rows += [("gamma", z.real, z.imag, v) for z, v in zip(curve.points, lg)]
    _emit(_csv(["kind", "re", "im", "log_abs_f"], rows, {"command": "construct probe", "seed": args.seed,
                                                        "samples": args.samples, "rotation": rf.to_dict()}),
          args.out)
    if args.svg:
        cp = cf.profile
        r = np.geomspace(10.0, 400.0, 600)
        u = np.log(r)
        curves = [(r * np.exp(1j * cp.phi_minus(u)), "#d62728", 1.5), (r * np.exp(1j * cp.phi_plus(u)), "#d62728", 1.5),
                  (r * np.exp(1j * rf.s(r)), "#1f77b4", 1), (r * np.exp(1j * (rf.s(r) + math.pi)), "#1f77b4", 1),
                  (curve.points, "#2ca02c", 2)]
        _emit(svg.polylines(curves), args.svg)
    return 0


def cmd_hm(args):
    if args.disk_demo:
        r = hm.walk_on_spheres(hm.DiskDomain(), 0j, walks=args.walks, shell=args.shell, seed=args.seed)
        out = {"omega": r.omega, "stderr": r.stderr, "censored": r.censored, "exact": 0.5,
               "pass": abs(r.omega - 0.5) <= 0.01, "seed": args.seed, "walks": args.walks}
        _emit(_dumps(out), args.out)
        return 0 if out["pass"] else 1
    rf = _rotation(args.rotation)
    if args.t is None or args.z0 is None:
        raise _UsageError("hm: --t and --z0 are required without --disk-demo")
    prob = hm.HMProblem(hm.LogDomain(rf.h, args.t), args.z0)
    r = hm.wos_measure(prob, walks=args.walks, shell=args.shell, seed=args.seed)
    bound, g = hm.problem_bound(prob)
    lam = g.value**2 / prob.domain.area
    out = {"omega": r.omega, "stderr": r.stderr, "censored": r.censored, "dist": g.value, "lambda": lam,
           "bound": bound, "pass": r.omega <= bound + 3 * r.stderr, "seed": args.seed, "walks": args.walks,
           "dist_history": g.history}
    _emit(_dumps(out), args.out)
    return 0 if out["pass"] else 1


def cmd_report(args):
    names = args.only.split(",") if args.only else [fn.__name__ for fn in acceptance.CRITERIA]
    table = {fn.__name__: fn for fn in acceptance.CRITERIA}
    unknown = [n for n in names if n not in table]
    if unknown:
        raise _UsageError(f"report --only: unknown criteria {unknown}")
    with ThreadPoolExecutor(max_workers=_threads()) as ex:
        results = list(ex.map(lambda n: table[n](), names))
    summary = {"version": __version__, "criteria": results, "all_passed": all(r["passed"] for r in results)}
    for r in results:
        sys.stderr.write(f"{'PASS' if r['passed'] else 'FAIL'} {r['name']} ({r['seconds']:.1f}s)\n")
    outdir = Path(args.out_dir)
    outdir.mkdir(parents=True, exist_ok=True)
    (outdir / "manifest.json").write_text(_dumps(summary))
    return 0 if summary["all_passed"] else 1


# ------------------------------------------------------------------ parser
def build_parser():
    p = _Parser(prog="heins-lab", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("classify", help="classify a rotation function")
    c.add_argument("--rotation", required=True, help="inline JSON or path to a JSON file")
    c.add_argument("--out")
    c.set_defaults(func=cmd_classify)

    c = sub.add_parser("scan", help="circle scans: CSV tau,m_u,m_v,eta_u,eta_v,lhs,rhs,two_arcs_pass,B_measure")
    c.add_argument("--pair", choices=["canonical", "constructed"], default="canonical")
    c.add_argument("--rotation", help="rotation for --pair constructed")
    c.add_argument("--n", type=int, default=1024)
    c.add_argument("--tau-max", type=float, default=6.0)
    c.add_argument("--step", type=float, default=0.05)
    c.add_argument("--eps", type=float, default=0.1)
    c.add_argument("--out")
    c.add_argument("--svg")
    c.add_argument("--svg-tau", nargs="+", default=["0.5", "2", "4"])
    c.set_defaults(func=cmd_scan)

    c = sub.add_parser("stripmap-check", help="CSV u1,u2,x_diff,IIIa,IVa,VI,pass flags")
    c.add_argument("--profile", choices=["straight", "construction"], default="construction")
    c.add_argument("--rotation", default='{"family": "power", "a": 1, "p": 0.25}')
    c.add_argument("--windows", default="5:60", help="comma-separated u1:u2 windows")
    c.add_argument("--mesh", type=int, default=64)
    c.add_argument("--slack", type=float, default=1e-3, help="allowance below the VI lower bound")
    c.add_argument("--out")
    c.add_argument("--svg")
    c.set_defaults(func=cmd_stripmap)

    c = sub.add_parser("construct", help="build f for a rotation; actions: build (manifest), eval, probe")
    c.add_argument("action", nargs="?", choices=["build", "eval", "probe"], default="build")
    c.add_argument("--rotation", required=True)
    c.add_argument("--mesh", type=int, default=64)
    c.add_argument("--z", type=_point, help="evaluation point a,b")
    c.add_argument("--samples", type=int, default=500)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--out")
    c.add_argument("--svg")
    c.set_defaults(func=cmd_construct)

    c = sub.add_parser("hm", help="walk-on-spheres harmonic measure: JSON omega,stderr,censored,dist,lambda,bound,pass")
    c.add_argument("--rotation")
    c.add_argument("--t", type=float)
    c.add_argument("--z0", type=_point)
    c.add_argument("--walks", type=int, default=10_000)
    c.add_argument("--seed", type=int, default=0)
    c.add_argument("--shell", type=float, default=1e-4)
    c.add_argument("--disk-demo", action="store_true")
    c.add_argument("--out")
    c.set_defaults(func=cmd_hm)

    c = sub.add_parser("report", help="run the acceptance suite and write manifest.json")
    c.add_argument("--out-dir", default="heins_lab_report")
    c.add_argument("--only", help="comma-separated criterion names")
    c.set_defaults(func=cmd_report)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except _UsageError as e:
        sys.stderr.write(f"heins-lab: usage error: {e}\n")
        return USAGE_EXIT
    except LabError as e:
        sys.stderr.write(f"heins-lab: {type(e).__name__}: {e}\n")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
