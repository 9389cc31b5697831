"""An entire function of finite exponential type bounded on a rotating half-plane.

Pipeline: the strip ``phi_-(u) < v < phi_+(u)`` around the spiral is mapped
onto {|Im Z| < pi/2}; ``g(w) = exp(exp(Z(log w))) / w^2`` lives on the
spiral region Omega (|w| > 10) and is O(1/|w|^2) on its boundary; ``f`` is
the Cauchy integral of g over the boundary of Omega.

All values of g are handled as ``log g = exp(Z) - 2 log w`` so that nothing
overflows deep inside Omega.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.spatial import cKDTree

from .errors import GeometryError, NumericError, PreconditionError
from .rotation import RotatingHalfPlane, RotationFunction, classify
from .strip_map import NumericStripMap, construction_profile, solve_strip_map

R_FLOOR = 10.0
U_FLOOR = math.log(R_FLOOR)
GL_ORDER = 16
_GL_X, _GL_W = np.polynomial.legendre.leggauss(GL_ORDER)
CHUNK = 2_000_000
NEAR_FACTOR = 3.0
MAX_SPLIT = 4096
OVERFLOW_LOG = 600.0


def eval_e(z):
    """log e(z) for e(z) = exp(exp(z)): real part log|e|, imaginary part a phase."""
    return np.exp(np.asarray(z, dtype=complex))


@dataclass(frozen=True)
class ConstructionProfile:
    rotation: RotationFunction
    smap: NumericStripMap

    @property
    def strip(self):
        return self.smap.profile

    def phi_minus(self, u):
        return self.strip.pm(u)

    def phi_plus(self, u):
        return self.strip.pp(u)

    @property
    def u_max(self):
        return self.smap.u_max

    def half_plane(self):
        return RotatingHalfPlane(self.rotation)


def build_profile(rf: RotationFunction, mesh: int = 64, R_cut_max: float = 1e6,
                  anchor_u: float = U_FLOOR, require_constructible: bool = True) -> ConstructionProfile:
    """Solve the strip map for the construction strip of ``rf``.

    X is anchored to vanish on the core curve at |w| = 10 so that e^X ~ |w|/10.
    """
    if require_constructible:
        verdict = classify(rf).verdict
        if verdict != "constructible":
            raise PreconditionError(f"rotation is classified {verdict!r}, not constructible")
    prof = construction_profile(rf, U_FLOOR)
    th = prof.theta(np.linspace(U_FLOOR, 60, 200))
    if not np.allclose(th, math.pi - 2.0 / (np.linspace(U_FLOOR, 60, 200) ** 2 + 1), atol=1e-12):
        raise GeometryError("construction strip width identity violated")
    u_max = max(U_FLOOR + 20.0, math.log(R_cut_max) + 10.0)
    smap = solve_strip_map(prof, u_max, mesh, anchor_u=anchor_u)
    return ConstructionProfile(rf, smap)


# ------------------------------------------------------------- g and Omega
def log_branch(cp: ConstructionProfile, w):
    """log w with imaginary part in [phi_-(log|w|), phi_- + 2 pi)."""
    w = np.asarray(w, dtype=complex)
    u = np.log(np.abs(w))
    lo = cp.phi_minus(u)
    v = lo + np.mod(np.angle(w) - lo, 2 * math.pi)
    return u + 1j * v


def in_omega(cp: ConstructionProfile, w):
    w = np.asarray(w, dtype=complex)
    r = np.abs(w)
    with np.errstate(divide="ignore"):
        zeta = log_branch(cp, np.where(r > 0, w, 1.0))
    return (r > R_FLOOR) & (zeta.imag < cp.phi_plus(zeta.real))


def log_g_zeta(cp: ConstructionProfile, zeta):
    """log g at w = exp(zeta), zeta in the closed strip."""
    return np.exp(cp.smap.Z(zeta)) - 2.0 * np.asarray(zeta)


def eval_g(cp: ConstructionProfile, w):
    """log g(w) for w in the closure of Omega (|w| >= 10)."""
    w = np.asarray(w, dtype=complex)
    if np.any(np.abs(w) < R_FLOOR * (1 - 1e-12)):
        raise GeometryError("g is only defined for |w| >= 10")
    zeta = log_branch(cp, w)
    if np.any(zeta.imag > cp.phi_plus(zeta.real) + 1e-9):
        raise GeometryError("point outside the closure of Omega")
    return log_g_zeta(cp, zeta)


# ----------------------------------------------------------------- contours
@dataclass
class Contour:
    """Gauss-Legendre panels on a piecewise-smooth path in the log-plane."""

    pieces: list  # (kind, t0, t1, sign) with kind in lower, upper, arc
    arc_u: float
    panels: np.ndarray  # (P, 3): piece index, t0, t1
    w: np.ndarray
    coef: np.ndarray  # 1/(2 pi i) * g(w) w zeta'(t) * weight * sign
    abs_g_dw: np.ndarray  # |g| |dw| * weight
    node_panel: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    tail: dict = field(default_factory=dict)


def _zeta(cp, kind, t, arc_u):
    t = np.asarray(t, dtype=float)
    prof = cp.strip
    if kind == "lower":
        return t + 1j * prof.pm(t), 1.0 + 1j * prof.pm(t, 1)
    if kind == "upper":
        return t + 1j * prof.pp(t), 1.0 + 1j * prof.pp(t, 1)
    return arc_u + 1j * t, 1j * np.ones_like(t)


def _log_g_piece(cp, kind, zeta):
    if kind == "arc":
        return log_g_zeta(cp, zeta)
    # Y = -pi/2 on phi_-, +pi/2 on phi_+ exactly
    eta = 0.0 if kind == "lower" else 1.0
    X = cp.smap.X_at(zeta.real, np.full(zeta.shape, eta))
    sgn = -1.0 if kind == "lower" else 1.0
    return 1j * sgn * np.exp(X) - 2.0 * zeta


def _nodes(cp, kind, a, b, sign, arc_u):
    """Quadrature nodes for panels [a_i, b_i] of one piece (vectorized)."""
    a = np.atleast_1d(a)
    b = np.atleast_1d(b)
    half = 0.5 * (b - a)
    t = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
    wt = half[:, None] * _GL_W[None, :]
    zeta, dz = _zeta(cp, kind, t, arc_u)
    lg = _log_g_piece(cp, kind, zeta)
    w = np.exp(zeta)
    g = np.exp(lg)
    coef = sign * g * w * dz * wt / (2j * math.pi)
    absgdw = np.abs(g) * np.abs(w * dz) * wt
    return w, coef, absgdw


def _spiral_edges(cp, u0, u1):
    edges = [u0]
    u = u0
    while u < u1:
        Xb = max(cp.smap.X_at(u, 0.0), cp.smap.X_at(u, 1.0))
        step = min(0.1, 8.0 * math.exp(-Xb))
        u = min(u + step, u1)
        edges.append(u)
    return np.array(edges)


def build_contour(cp: ConstructionProfile, u_cut: float, arc_u: float = U_FLOOR) -> Contour:
    """Boundary of Omega cut to arc_u < log|w| < u_cut, positively oriented."""
    if u_cut > cp.u_max - 1e-9:
        raise GeometryError("truncation radius beyond the solved strip map")
    edges = _spiral_edges(cp, arc_u, u_cut)
    lo_arc, hi_arc = float(cp.phi_minus(arc_u)), float(cp.phi_plus(arc_u))
    n_arc = max(8, int(math.ceil((hi_arc - lo_arc) / 0.1)))
    arc_edges = np.linspace(lo_arc, hi_arc, n_arc + 1)
    pieces = [("lower", edges, 1.0), ("upper", edges, -1.0), ("arc", arc_edges, -1.0)]
    W, C, A, NP, panels = [], [], [], [], []
    for k, (kind, e, sign) in enumerate(pieces):
        w, c, ab = _nodes(cp, kind, e[:-1], e[1:], sign, arc_u)
        base = len(panels)
        panels.extend((k, t0, t1) for t0, t1 in zip(e[:-1], e[1:]))
        W.append(w)
        C.append(c)
        A.append(ab)
        NP.append(np.repeat(np.arange(base, base + len(e) - 1), GL_ORDER))
    w = np.concatenate([x.ravel() for x in W])
    wp = w.reshape(-1, GL_ORDER)
    centers = wp.mean(axis=1)
    radii = np.max(np.abs(wp - centers[:, None]), axis=1)
    # the chord underestimates the panel extent only marginally; pad by 10%
    radii *= 1.1
    tail_slope = max(float(np.max(np.abs(cp.strip.pm(np.linspace(u_cut, cp.u_max, 200), 1)))),
                     float(np.max(np.abs(cp.strip.pp(np.linspace(u_cut, cp.u_max, 200), 1)))))
    cont = Contour(
        pieces=[(kind, float(e[0]), float(e[-1]), sign) for kind, e, sign in pieces],
        arc_u=arc_u,
        panels=np.array(panels, dtype=float),
        w=w,
        coef=np.concatenate([x.ravel() for x in C]),
        abs_g_dw=np.concatenate([x.ravel() for x in A]),
        node_panel=np.concatenate(NP),
        centers=centers,
        radii=radii,
        tail={"R_cut": math.exp(u_cut), "slope": tail_slope},
    )
    return cont


def tail_bound(cont: Contour, z) -> np.ndarray:
    """Bound on the neglected boundary integral beyond R_cut for each z.

    On the spirals |g| |dw| = e^{-u} sqrt(1 + phi'^2) du and the distance to
    the tail is at least R_cut - |z|.
    """
    R = cont.tail["R_cut"]
    m = cont.tail["slope"]
    gap = R - np.abs(np.asarray(z))
    if np.any(gap <= 0):
        raise PreconditionError("evaluation point beyond the truncation radius")
    return math.sqrt(1.0 + m * m) / (math.pi * R * gap)


def contour_length_per_annulus(cp: ConstructionProfile, n_max: int = 200) -> np.ndarray:
    """Arclength of the boundary spirals inside n < |w| < n + 1."""
    out = []
    for n in range(int(R_FLOOR), n_max):
        u = np.linspace(math.log(n), math.log(n + 1), 64)
        L = 0.0
        for phi in (cp.strip.pm, cp.strip.pp):
            speed = np.exp(u) * np.hypot(1.0, phi(u, 1))
            L += np.trapezoid(speed, u)
        out.append(L)
    return np.array(out)


def _cauchy(cont: Contour, cp: ConstructionProfile, z, strict=False):
    """(1/2 pi i) * integral of g(w) / (z - w) dw over the contour."""
    z = np.asarray(z, dtype=complex).ravel()
    out = np.zeros(z.shape, dtype=complex)
    n_nodes = len(cont.w)
    step = max(1, CHUNK // max(n_nodes, 1))
    capped = 0
    for s in range(0, len(z), step):
        zc = z[s:s + step]
        out[s:s + step] = (cont.coef[None, :] / (zc[:, None] - cont.w[None, :])).sum(axis=1)
        # near-field correction
        dc = np.abs(zc[:, None] - cont.centers[None, :])
        pi_, pp_ = np.nonzero(dc < NEAR_FACTOR * cont.radii[None, :])
        if pi_.size == 0:
            continue
        for i, p in zip(pi_, pp_):
            sl = slice(p * GL_ORDER, (p + 1) * GL_ORDER)
            zz = zc[i]
            d = float(np.min(np.abs(zz - cont.w[sl])))
            rho = cont.radii[p]
            nsplit = 1 << int(min(math.ceil(math.log2(max(2.0 * NEAR_FACTOR * rho / max(d, 1e-300), 1.0))), 12))
            if nsplit <= 1:
                continue
            if nsplit >= MAX_SPLIT:
                capped += 1
            piece_idx, t0, t1 = cont.panels[p]
            kind, _, _, sign = cont.pieces[int(piece_idx)]
            e = np.linspace(t0, t1, nsplit + 1)
            w, c, _ = _nodes(cp, kind, e[:-1], e[1:], sign, cont.arc_u)
            direct = np.sum(cont.coef[sl] / (zz - cont.w[sl]))
            refined = np.sum(c.ravel() / (zz - w.ravel()))
            out[s + i] += refined - direct
    if strict and capped:
        raise NumericError(f"{capped} evaluation points lie on the contour to working precision")
    return out


# ----------------------------------------------------------- the function f
@dataclass
class ConstructedFunction:
    profile: ConstructionProfile
    R_cut_min: float = 1e4
    fixed_R_cut: bool = False
    _contours: dict = field(default_factory=dict, repr=False)

    def R_cut_for(self, z) -> float:
        if self.fixed_R_cut:
            return self.R_cut_min
        zmax = float(np.max(np.abs(z))) if np.size(z) else 0.0
        R = max(self.R_cut_min, 100.0 * zmax)
        return 10.0 ** math.ceil(math.log10(R) - 1e-12)

    def contour(self, R_cut: float) -> Contour:
        key = round(math.log(R_cut), 9)
        if key not in self._contours:
            self._contours[key] = build_contour(self.profile, math.log(R_cut))
        return self._contours[key]

    def boundary_integral(self, z, R_cut=None):
        z = np.asarray(z, dtype=complex)
        R = self.R_cut_for(z) if R_cut is None else R_cut
        cont = self.contour(R)
        return _cauchy(cont, self.profile, z).reshape(z.shape), cont

    def log_f(self, z, R_cut=None):
        """Complex log f(z) (branch irrelevant); handles |f| beyond overflow."""
        z = np.asarray(z, dtype=complex)
        I, _ = self.boundary_integral(z, R_cut)
        inside = in_omega(self.profile, z)
        out = np.empty(z.shape, dtype=complex)
        with np.errstate(divide="ignore"):
            out[~inside] = np.log(I[~inside])
        if np.any(inside):
            lg = eval_g(self.profile, z[inside])
            out[inside] = lg + np.log1p(I[inside] * np.exp(-lg))
        return out

    def log_abs_f(self, z, R_cut=None):
        return np.real(self.log_f(z, R_cut))

    def __call__(self, z, R_cut=None):
        lf = self.log_f(z, R_cut)
        if np.any(lf.real > 700):
            raise NumericError("|f| overflows double precision; use log_abs_f")
        return np.exp(lf)

    # ---- diagnostics
    def certified_tail(self, z, R_cut=None):
        z = np.asarray(z, dtype=complex)
        R = self.R_cut_for(z) if R_cut is None else R_cut
        return tail_bound(self.contour(R), z)

    def boundary_mass(self, R_cut=None) -> float:
        """int |g| |dw| over the whole boundary (truncated part plus its bound)."""
        cont = self.contour(R_cut or self.R_cut_min)
        m = cont.tail["slope"]
        return float(np.sum(cont.abs_g_dw)) + 2.0 * math.sqrt(1 + m * m) / cont.tail["R_cut"]

    def a_priori_bound(self, eps: float, R_cut=None) -> float:
        """(1 / (2 pi eps)) * int |g| |dw|, an upper bound for |f| on Omega_s."""
        return self.boundary_mass(R_cut) / (2.0 * math.pi * eps)

    def boundary_log_excess(self, R_cut=None) -> float:
        """max over boundary nodes of log|g| + 2 log|w|."""
        cont = self.contour(R_cut or self.R_cut_min)
        return float(np.max(self._boundary_log_g(cont) + 2.0 * np.log(np.abs(cont.w))))

    def _boundary_log_g(self, cont):
        out = []
        for k, (kind, t0, t1, sign) in enumerate(cont.pieces):
            sel = cont.panels[:, 0] == k
            a, b = cont.panels[sel, 1], cont.panels[sel, 2]
            half = 0.5 * (b - a)
            t = (0.5 * (a + b))[:, None] + half[:, None] * _GL_X[None, :]
            zeta, _ = _zeta(self.profile, kind, t, cont.arc_u)
            out.append(np.real(_log_g_piece(self.profile, kind, zeta)).ravel())
        return np.concatenate(out)


def build(rf: RotationFunction, mesh: int = 64, R_cut_max: float = 1e6, R_cut_min: float = 1e4,
          fixed_R_cut: bool = False, require_constructible: bool = True) -> ConstructedFunction:
    cp = build_profile(rf, mesh, R_cut_max, require_constructible=require_constructible)
    return ConstructedFunction(cp, R_cut_min, fixed_R_cut)


def eval_f(cf: ConstructedFunction, z):
    return cf(z)


# --------------------------------------------------------- deformed contour
def eval_f_deformed(cf: ConstructedFunction, z, R: float, R_cut=None):
    """f(z) from the contour (boundary of Omega outside |w| = R) + (|w| = R inside Omega).

    Valid for |z| < R. Returns (value, certified tail).
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(np.abs(z) >= R):
        raise PreconditionError("deformed evaluation needs |z| < R")
    if R <= R_FLOOR:
        raise PreconditionError("deformation radius must exceed 10")
    Rc = cf.R_cut_for(z) if R_cut is None else R_cut
    cont = build_contour(cf.profile, math.log(Rc), arc_u=math.log(R))
    return _cauchy(cont, cf.profile, z), tail_bound(cont, z)


def pompeiu_bound(cf: ConstructedFunction, z, R1: float, R2: float, nu: int = 96, neta: int = 48) -> np.ndarray:
    """Bound on the change of the deformed integral between radii R1 < R2.

    By the Cauchy-Pompeiu formula the change equals
    (1/pi) * area integral of (dg/dwbar) / (w - z) over Omega between the radii,
    which vanishes for exactly analytic g. dg/dwbar = g e^Z Z_zetabar / wbar.
    """
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    cp = cf.profile
    xu, wu = np.polynomial.legendre.leggauss(nu)
    xe, we = np.polynomial.legendre.leggauss(neta)
    a, b = math.log(R1), math.log(R2)
    u = 0.5 * (a + b) + 0.5 * (b - a) * xu
    eta = 0.5 + 0.5 * xe
    U, E = np.meshgrid(u, eta, indexing="ij")
    th = cp.strip.theta(U)
    zeta = U + 1j * (cp.strip.pm(U) + th * E)
    lg = log_g_zeta(cp, zeta)
    eZ = np.exp(cp.smap.Z(zeta))
    dbar = cp.smap.dbar(zeta)
    w = np.exp(zeta)
    # |dg/dwbar| dA = |g| |e^Z| |Z_zetabar| / |w| * |w|^2 du dv
    dens = np.exp(lg.real) * np.abs(eZ) * np.abs(dbar) * np.abs(w) * th
    wts = (0.5 * (b - a) * wu)[:, None] * (0.5 * we)[None, :]
    out = []
    for zz in z:
        out.append(np.sum(dens * wts / np.abs(w - zz)) / math.pi)
    return np.array(out)


# ------------------------------------------------------------ geometry
@dataclass(frozen=True)
class DistanceReport:
    sampled: float
    analytic: float
    location: complex


def _spiral(r, angle):
    return r * np.exp(1j * angle)


def dist_omega_to_omegas(cp: ConstructionProfile, r_max: float = 1e3, n: int = 20000) -> DistanceReport:
    """Distance between Omega and Omega_s, sampled on both boundaries and refined."""
    rf = cp.rotation
    r_om = np.geomspace(R_FLOOR, r_max, n)
    u = np.log(r_om)
    arc_v = np.linspace(float(cp.phi_minus(U_FLOOR)), float(cp.phi_plus(U_FLOOR)), 2000)
    omega_pts = np.concatenate([_spiral(r_om, cp.phi_minus(u)), _spiral(r_om, cp.phi_plus(u)),
                                R_FLOOR * np.exp(1j * arc_v)])
    r_s = np.geomspace(1e-3, 1.2 * r_max, n)
    s = rf.s(r_s)
    hs_pts = np.concatenate([_spiral(r_s, s), _spiral(r_s, s + math.pi)])
    tree = cKDTree(np.c_[hs_pts.real, hs_pts.imag])
    d, j = tree.query(np.c_[omega_pts.real, omega_pts.imag])
    i = int(np.argmin(d))
    # local refinement around the closest pair
    z0, w0 = omega_pts[i], hs_pts[j[i]]
    best = float(d[i])
    for scale in (1e-2, 1e-3, 1e-4):
        rr = np.abs(w0) * (1 + scale * np.linspace(-1, 1, 801))
        rr = rr[rr > 0]
        cand = np.concatenate([_spiral(rr, rf.s(rr)), _spiral(rr, rf.s(rr) + math.pi)])
        k = int(np.argmin(np.abs(cand - z0)))
        if abs(cand[k] - z0) < best:
            best, w0 = float(abs(cand[k] - z0)), cand[k]
    if best <= 0:
        raise GeometryError("Omega touches the rotating half-plane")
    analytic = float(np.min(r_om / (20.0 * (np.log(r_om) ** 2 + 1.0))))
    return DistanceReport(best, analytic, complex(z0))


def omega_hits_half_plane(cp: ConstructionProfile, samples: int = 20000, seed: int = 0) -> int:
    """Number of sampled points of Omega that fall inside Omega_s (should be 0)."""
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(U_FLOOR, U_FLOOR + 8, samples))
    u = np.log(r)
    v = cp.phi_minus(u) + rng.uniform(0, 1, samples) * (cp.phi_plus(u) - cp.phi_minus(u))
    return int(np.sum(cp.half_plane().contains(r * np.exp(1j * v))))


def sample_half_plane(rf: RotationFunction, n: int, r_min=0.5, r_max=1e4, seed=0):
    rng = np.random.default_rng(seed)
    r = np.exp(rng.uniform(math.log(r_min), math.log(r_max), n))
    a = rf.s(r) + rng.uniform(1e-6, 1 - 1e-6, n) * math.pi
    return r * np.exp(1j * a)


# ------------------------------------------------------------------ Gamma
@dataclass(frozen=True)
class GammaCurve:
    r: np.ndarray
    t: np.ndarray
    residual: np.ndarray  # t(r) - s(r) - 3 pi / 2
    points: np.ndarray
    log_abs_g: np.ndarray


def gamma_curve(cf: ConstructedFunction, r_grid) -> GammaCurve:
    """Image of the real axis of the straight strip under z -> exp(W(z))."""
    r = np.asarray(r_grid, dtype=float)
    cp = cf.profile
    R_cut = cf.R_cut_for(r)
    if np.any(r < R_FLOOR * math.e) or np.any(r > R_cut / math.e):
        raise PreconditionError("r_grid must lie in [10 e, R_cut / e]")
    if np.log(r).max() > cp.u_max:
        raise GeometryError("strip map mesh exhausted")
    u = np.log(r)
    v, X = cp.smap.trace(0.0, u)
    resid = v - cp.rotation.h(u) - 1.5 * math.pi
    pts = r * np.exp(1j * v)
    lg = np.exp(X) - 2.0 * u
    return GammaCurve(r, v, resid, pts, lg)


def fit_growth_constant(curve: GammaCurve) -> float:
    """Slope c of log|g| against |w| along Gamma."""
    A = np.vstack([curve.r, np.ones_like(curve.r)]).T
    coef, *_ = np.linalg.lstsq(A, curve.log_abs_g, rcond=None)
    return float(coef[0])


def exp_type_estimate(log_abs_fn, r_grid, n: int = 512) -> float:
    """Type of f: slope c in log M(r) ~ c r + a log r + b, fitted on the upper half of r_grid.

    M(r) = max_{|z|=r} |f|. The log r term absorbs the algebraic factor of
    g, which otherwise biases max log M(r) / r downwards at moderate r.
    """
    r = np.asarray(r_grid, dtype=float)
    if r.size < 6:
        raise PreconditionError("need at least 6 radii")
    th = 2 * math.pi * np.arange(n) / n
    M = np.array([float(np.max(log_abs_fn(rr * np.exp(1j * th)))) for rr in r])
    if not np.all(np.isfinite(M)):
        raise NumericError("non-finite max modulus")
    rr, mm = r[r.size // 2:], M[r.size // 2:]
    A = np.c_[rr, np.log(rr), np.ones_like(rr)]
    coef, *_ = np.linalg.lstsq(A, mm, rcond=None)
    return float(coef[0])
