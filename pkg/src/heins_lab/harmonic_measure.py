"""Harmonic measure in graph-strip caps and its extremal-length bound.

``V = {a + bi : a > 0, h(a) < b < h(a) + pi}`` is cut at ``Re = t``; the
right edge ``E_t`` is the target arc. Harmonic measure is estimated by
walk-on-spheres, ``dist(sigma, E_t)`` by shortest paths on a grid graph,
and both feed the bound ``omega <= (8/pi) exp(-pi dist^2 / area)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import sparse
from scipy.sparse.csgraph import dijkstra
from scipy.spatial import cKDTree

from .errors import GeometryError, PreconditionError

STEP_BUDGET = 1_000_000
CURVE_SPACING = 0.01


# ------------------------------------------------------------- oracles
def rectangle_series(x, y, L, height=math.pi, terms=2001):
    """Harmonic measure of the right edge of (0, L) x (0, height) at (x, y).

    Separation of variables: sum over odd k of
    4/(k pi) sin(k pi y / H) sinh(k pi x / H) / sinh(k pi L / H).
    """
    k = np.arange(1, 2 * terms, 2, dtype=float)
    s = math.pi / height
    # sinh(kx)/sinh(kL) without overflow
    ratio = np.exp(k * s * (x - L)) * (-np.expm1(-2 * k * s * x)) / (-np.expm1(-2 * k * s * L))
    return float(np.sum(4.0 / (k * math.pi) * np.sin(k * s * y) * ratio))


# ------------------------------------------------------------- domains
class DiskDomain:
    """Unit disk; the target is the boundary arc arg in [lo, hi)."""

    def __init__(self, lo=0.0, hi=math.pi):
        self.lo, self.hi = lo, hi

    def distance(self, p):
        d = 1.0 - np.hypot(p[:, 0], p[:, 1])
        ang = np.mod(np.arctan2(p[:, 1], p[:, 0]) - self.lo, 2 * math.pi)
        return d, ang < (self.hi - self.lo)

    @property
    def area(self):
        return math.pi


class PolygonDomain:
    """Polygon with per-edge target labels; edges are pre-densified."""

    def __init__(self, verts, target):
        verts = np.asarray(verts, dtype=float)
        self.a = verts
        self.b = np.roll(verts, -1, axis=0)
        self.target = np.asarray(target, dtype=bool)
        mid = 0.5 * (self.a + self.b)
        self.seg_len = np.hypot(*(self.b - self.a).T)
        self.tree = cKDTree(mid)

    @property
    def area(self):
        x, y = self.a[:, 0], self.a[:, 1]
        return 0.5 * abs(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))

    def _seg_dist(self, p, idx):
        a, b = self.a[idx], self.b[idx]
        ab = b - a
        t = np.einsum("...i,...i->...", p[:, None, :] - a, ab) / np.maximum(np.einsum("...i,...i->...", ab, ab), 1e-300)
        t = np.clip(t, 0.0, 1.0)
        q = a + t[..., None] * ab
        return np.hypot(*(p[:, None, :] - q).transpose(2, 0, 1))

    def distance(self, p, k=8):
        _, idx = self.tree.query(p, k=k)
        d = self._seg_dist(p, idx)
        j = np.argmin(d, axis=1)
        rows = np.arange(len(p))
        return d[rows, j], self.target[idx[rows, j]]

    def contains(self, p):
        """Even-odd point-in-polygon test."""
        x, y = p[:, 0:1], p[:, 1:2]
        ax, ay = self.a[:, 0], self.a[:, 1]
        bx, by = self.b[:, 0], self.b[:, 1]
        cond = (ay > y) != (by > y)
        with np.errstate(divide="ignore", invalid="ignore"):
            xint = ax + (y - ay) * (bx - ax) / (by - ay)
        return np.sum(cond & (x < xint), axis=1) % 2 == 1


def _densify(pts, spacing):
    out = [pts[:1]]
    for p, q in zip(pts[:-1], pts[1:]):
        n = max(1, int(math.ceil(np.hypot(*(q - p)) / spacing)))
        s = np.linspace(0, 1, n + 1)[1:, None]
        out.append(p + s * (q - p))
    return np.vstack(out)


def _graph_points(h, a0, a1, spacing):
    """Points (a, h(a)) resampled to roughly uniform arclength."""
    a = np.unique(np.concatenate([np.linspace(a0, a1, 20001), a0 + np.geomspace(1e-9, 1.0, 400) * (a1 - a0)]))
    b = np.asarray(h(a), dtype=float)
    s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(a), np.diff(b)))])
    n = max(2, int(math.ceil(s[-1] / spacing)) + 1)
    ss = np.linspace(0, s[-1], n)
    aa = np.interp(ss, s, a)
    return np.c_[aa, h(aa)]


@dataclass(frozen=True)
class LogDomain:
    """G_t = {0 < a < t, h(a) < b < h(a) + pi}; target E_t is the edge a = t."""

    h: object  # callable a -> h(a); a RotationFunction's .h works
    t: float
    spacing: float = CURVE_SPACING
    extra_target: float = 0.0  # also count the top graph on a > t - extra_target

    def lower(self, a):
        return np.asarray(self.h(a), dtype=float)

    def upper(self, a):
        return self.lower(a) + math.pi

    @property
    def area(self):
        return math.pi * self.t

    @cached_property
    def polygon(self) -> PolygonDomain:
        t, sp = self.t, self.spacing
        low = _graph_points(self.lower, 0.0, t, sp)
        up = _graph_points(self.upper, 0.0, t, sp)[::-1]
        right = _densify(np.array([low[-1], up[0]]), sp)[1:-1]
        left = _densify(np.array([up[-1], low[0]]), sp)[1:-1]
        verts = np.vstack([low, right, up, left])
        n_low, n_r, n_up = len(low), len(right), len(up)
        target = np.zeros(len(verts), bool)
        # edge i joins verts[i] -> verts[i+1]
        target[n_low - 1:n_low + n_r] = True
        if self.extra_target > 0:
            up_idx = np.arange(n_low + n_r, n_low + n_r + n_up - 1)
            target[up_idx[verts[up_idx, 0] > t - self.extra_target]] = True
        return PolygonDomain(verts, target)

    def distance(self, p):
        return self.polygon.distance(p)

    def inside(self, a, b, margin=0.0):
        a = np.asarray(a)
        b = np.asarray(b)
        lo = self.lower(np.clip(a, 0, self.t))
        return (a > margin) & (a < self.t - margin) & (b > lo + margin) & (b < lo + math.pi - margin)

    @property
    def E(self):
        return (complex(self.t, float(self.lower(self.t))), complex(self.t, float(self.upper(self.t))))


def rectangle(L: float) -> LogDomain:
    return LogDomain(lambda a: np.zeros_like(np.asarray(a, dtype=float)), L)


@dataclass(frozen=True)
class HMProblem:
    domain: LogDomain
    z0: complex
    sigma: np.ndarray = field(default=None)  # polyline (k, 2)

    def __post_init__(self):
        if self.sigma is None:
            a0 = self.z0.real
            sig = np.array([[a0, float(self.domain.lower(a0))], [a0, self.z0.imag]])
            object.__setattr__(self, "sigma", sig)
        if not self.domain.inside(self.z0.real, self.z0.imag):
            raise PreconditionError("z0 must lie inside G_t")
        if np.any(np.asarray(self.sigma)[:, 0] >= self.domain.t):
            raise PreconditionError("sigma touches the target arc E_t")


# ------------------------------------------------------ walk on spheres
@dataclass(frozen=True)
class WoSResult:
    omega: float
    stderr: float
    walks: int
    hits: int
    censored: int
    seed: int

    def within(self, value, k=3.0):
        return abs(self.omega - value) <= k * max(self.stderr, 1e-300) or (self.stderr == 0 and self.omega == value)


def walk_on_spheres(domain, z0, walks=10_000, shell=1e-4, seed=0, budget=STEP_BUDGET) -> WoSResult:
    if not 1e-6 < shell < 1e-2:
        raise PreconditionError("shell must lie in (1e-6, 1e-2)")
    if walks < 1000:
        raise PreconditionError("at least 1000 walks are required")
    rng = np.random.default_rng(seed)
    p = np.tile([z0.real, z0.imag], (walks, 1)).astype(float)
    alive = np.arange(walks)
    hit = np.zeros(walks, bool)
    steps = 0
    while alive.size and steps < budget:
        d, lab = domain.distance(p[alive])
        if np.any(~np.isfinite(d)):
            raise GeometryError("distance evaluator failed")
        done = d < shell
        hit[alive[done]] = lab[done]
        alive, d = alive[~done], d[~done]
        phi = rng.uniform(0.0, 2 * math.pi, alive.size)
        p[alive, 0] += d * np.cos(phi)
        p[alive, 1] += d * np.sin(phi)
        steps += 1
    censored = int(alive.size)
    n = walks - censored
    hits = int(hit.sum())
    om = hits / n if n else math.nan
    se = math.sqrt(om * (1 - om) / n) if n else math.nan
    return WoSResult(om, se, walks, hits, censored, seed)


def wos_measure(p: HMProblem, walks=10_000, shell=1e-4, seed=0) -> WoSResult:
    res = walk_on_spheres(p.domain, p.z0, walks, shell, seed)
    if res.censored > 0.001 * walks:
        raise GeometryError(f"{res.censored} walks censored (> 0.1%)")
    return res


# --------------------------------------------------- geodesic distance
def _offsets(K=3):
    out = []
    for i in range(-K, K + 1):
        for j in range(-K, K + 1):
            if (i, j) != (0, 0) and math.gcd(abs(i), abs(j)) == 1:
                out.append((i, j))
    return np.array(out)


def _point_seg_dist(p, a, b):
    ab = b - a
    t = np.clip(((p - a) @ ab) / max(ab @ ab, 1e-300), 0, 1)
    return np.hypot(*(p - (a + t[:, None] * ab)).T)


def _grid_geodesic(p: HMProblem, spacing: float, K: int = 3) -> float:
    dom = p.domain
    t = dom.t
    a = np.arange(0.0, t + 1e-12, spacing)
    lo = dom.lower(a)
    b = np.arange(lo.min(), lo.max() + math.pi + 1e-12, spacing)
    A, B = np.meshgrid(a, b, indexing="ij")
    ins = dom.inside(A, B) | ((A >= t - 1e-12) & (B > dom.lower(t)) & (B < dom.upper(t)))
    ids = -np.ones(A.shape, int)
    ids[ins] = np.arange(ins.sum())
    nn = int(ins.sum())
    if nn == 0:
        raise GeometryError("grid too coarse: no interior nodes; refine")
    rows, cols, wts = [], [], []
    I, J = np.nonzero(ins)
    for di, dj in _offsets(K):
        I2, J2 = I + di, J + dj
        ok = (I2 >= 0) & (I2 < A.shape[0]) & (J2 >= 0) & (J2 < A.shape[1])
        I1, J1, I2, J2 = I[ok], J[ok], I2[ok], J2[ok]
        ok = ins[I2, J2]
        I1, J1, I2, J2 = I1[ok], J1[ok], I2[ok], J2[ok]
        good = np.ones(I1.size, bool)
        for s in (0.25, 0.5, 0.75):
            am = A[I1, J1] + s * (A[I2, J2] - A[I1, J1])
            bm = B[I1, J1] + s * (B[I2, J2] - B[I1, J1])
            good &= dom.inside(am, bm) | (am >= t - 1e-12)
        rows.append(ids[I1[good], J1[good]])
        cols.append(ids[I2[good], J2[good]])
        wts.append(np.full(good.sum(), spacing * math.hypot(di, dj)))
    # super-source: index nn, joined to nodes near sigma
    pts = np.c_[A[ins], B[ins]]
    sig = np.asarray(p.sigma, float)
    dsig = np.full(nn, np.inf)
    for s0, s1 in zip(sig[:-1], sig[1:]):
        dsig = np.minimum(dsig, _point_seg_dist(pts, s0, s1))
    near = np.nonzero(dsig <= 1.5 * spacing)[0]
    if near.size == 0:
        raise GeometryError("no grid node near sigma; refine")
    rows.append(np.full(near.size, nn))
    cols.append(near)
    wts.append(np.maximum(dsig[near], 1e-12))
    G = sparse.csr_matrix((np.concatenate(wts), (np.concatenate(rows), np.concatenate(cols))), shape=(nn + 1, nn + 1))
    dist = dijkstra(G, directed=True, indices=nn)
    tgt = np.nonzero((pts[:, 0] >= t - 1.5 * spacing) & (pts[:, 1] >= dom.lower(t)) & (pts[:, 1] <= dom.upper(t)))[0]
    vals = dist[tgt] + (t - pts[tgt, 0])
    best = float(np.min(vals))
    if not math.isfinite(best):
        raise GeometryError("sigma and E_t are disconnected on the grid; refine")
    return best


@dataclass(frozen=True)
class GeodesicResult:
    value: float
    history: tuple  # (spacing, value) per level
    straight: float | None


def geodesic_dist(p: HMProblem, spacing: float = 0.1, rel_tol: float = 0.005, max_levels: int = 4) -> GeodesicResult:
    """Shortest in-domain path length from sigma to E_t.

    Grid graph with all primitive offsets up to 3 cells (32 directions),
    halving the spacing until successive values change by < rel_tol.
    """
    dom = p.domain
    sig = np.asarray(p.sigma, float)
    if np.any(sig[:, 0] >= dom.t):
        raise PreconditionError("sigma touches E_t: the distance is zero")
    hist = []
    prev = None
    h = spacing
    for _ in range(max_levels):
        v = _grid_geodesic(p, h)
        hist.append((h, v))
        if prev is not None and abs(prev - v) <= rel_tol * v:
            break
        prev = v
        h *= 0.5
    value = hist[-1][1]
    # straight-line distance from sigma's endpoint z0 when that segment is inside
    straight = None
    z0 = sig[-1]
    seg_a = np.linspace(z0[0], dom.t, 400)
    if np.all(dom.inside(seg_a[:-1], np.full(399, z0[1])) | (seg_a[:-1] >= dom.t)) and \
            dom.lower(dom.t) < z0[1] < dom.upper(dom.t):
        straight = dom.t - z0[0]
    return GeodesicResult(value, tuple(hist), straight)


def beurling_bound(dist: float, area: float) -> float:
    """(8/pi) * exp(-pi * dist^2 / area)."""
    return 8.0 / math.pi * math.exp(-math.pi * dist**2 / area)


def problem_bound(p: HMProblem, **kw) -> tuple:
    g = geodesic_dist(p, **kw)
    return beurling_bound(g.value, p.domain.area), g


# ------------------------------------------------------------ t_k chain
@dataclass(frozen=True)
class TkSequence:
    c: float
    t_values: np.ndarray
    h_values: np.ndarray

    def n(self, t) -> int:
        """n with n + 1 = number of t_k <= t."""
        return max(int(np.searchsorted(self.t_values, t, side="right")) - 1, 0)

    def check(self):
        c = self.c
        ok1 = np.all(self.h_values >= c * np.sqrt(self.t_values) * (1 - 1e-12))
        ok2 = np.all(self.h_values[1:] / 2 > self.h_values[:-1] + math.pi + c * c / 8)
        return bool(ok1 and ok2)


def _admissible(h, c, t):
    return np.asarray(h(t)) >= c * np.sqrt(t) * (1 - 1e-12)


def build_tk(h, c: float, t_max: float, a0: float = 0.0, ratio: float = 1e-4) -> TkSequence:
    """Greedy t_k on the geometric grid t_j = t_start (1 + ratio)^j."""
    if c <= 0:
        raise PreconditionError("c must be positive")
    probe = np.geomspace(1.0, t_max, 3000)
    okp = _admissible(h, c, probe)
    decades = max(1, int(math.log10(t_max)) - 1)
    for d in range(decades, max(decades - 3, 0), -1):
        band = (probe >= 10.0**d) & (probe < 10.0 ** (d + 1))
        if band.any() and not okp[band].any():
            raise PreconditionError(f"h(t) >= c sqrt(t) fails on [1e{d}, 1e{d + 1}]: outside the sqrt-log regime")
    if not okp[probe > t_max / 10].any():
        raise PreconditionError("h(t) >= c sqrt(t) fails on the tail")
    chunk = 100_000
    ts, hs = [], []
    t_lo = max(a0, 1e-3)
    while True:
        found = None
        start = t_lo * (1 + ratio)
        while start <= t_max and found is None:
            grid = start * (1 + ratio) ** np.arange(chunk)
            grid = grid[grid <= t_max]
            hv = np.asarray(h(grid), dtype=float)
            ok = _admissible(h, c, grid)
            if ts:
                ok &= hv / 2 > hs[-1] + math.pi + c * c / 8
            idx = np.nonzero(ok)[0]
            if idx.size:
                found = (float(grid[idx[0]]), float(hv[idx[0]]))
            elif grid.size:
                start = grid[-1] * (1 + ratio)
            else:
                break
        if found is None:
            break
        ts.append(found[0])
        hs.append(found[1])
        t_lo = found[0]
    if not ts:
        raise PreconditionError("no admissible t_1 below t_max")
    seq = TkSequence(c, np.array(ts), np.array(hs))
    if not seq.check():
        raise PreconditionError("t_k sequence violates its defining inequalities")
    return seq


def chain_lower_bound(h, tk: TkSequence, t: float) -> float:
    """(t - t_{n+1}) + sum_k sqrt((t_{k+1} - t_k)^2 + (h(t_{k+1}) - h(t_k) - pi)_+^2)."""
    tv = tk.t_values[tk.t_values <= t]
    if tv.size == 0:
        return 0.0
    hv = np.asarray(h(tv), dtype=float)
    rise = np.maximum(np.diff(hv) - math.pi, 0.0)
    return float((t - tv[-1]) + np.sum(np.hypot(np.diff(tv), rise)))


@dataclass(frozen=True)
class DecaySeries:
    t: np.ndarray
    n: np.ndarray
    bound: np.ndarray  # (8C/pi) exp(t - (t - t1 + c^2 n/8)^2 / t)
    majorant: np.ndarray  # (8C/pi) exp(2 (t1 - c^2 n / 8))
    two_pi_form: np.ndarray  # (8C/pi) exp(2 pi (t1 - c^2 n / 8))
    mc: np.ndarray  # C e^t omega, nan where not sampled
    mc_err: np.ndarray


def decay_bound(tk: TkSequence, C: float, t, n=None):
    t = np.asarray(t, dtype=float)
    if n is None:
        n = np.array([tk.n(x) for x in np.atleast_1d(t)]).reshape(t.shape)
    D = tk.t_values[0] - tk.c**2 * np.asarray(n) / 8.0
    # t - (t - D)^2 / t written without cancellation
    return 8.0 * C / math.pi * np.exp(2.0 * D - D * D / t)


def n_star(t1: float, c: float, C: float, level: float = 1e-6) -> int:
    """Smallest n with (8C/pi) exp(2 (t1 - c^2 n / 8)) < level."""
    return int(math.floor(8.0 * (t1 + 0.5 * math.log(8.0 * C / (math.pi * level))) / c**2)) + 1


def u_decay(h, tk: TkSequence, C: float, t_grid, z0_a: float = 1.0, mc_t_max: float = 20.0,
            walks: int = 20_000, seed: int = 0) -> DecaySeries:
    t = np.asarray(t_grid, dtype=float)
    n = np.array([tk.n(x) for x in t])
    D = tk.t_values[0] - tk.c**2 * n / 8.0
    bound = decay_bound(tk, C, t, n)
    major = 8.0 * C / math.pi * np.exp(2.0 * D)
    two_pi = 8.0 * C / math.pi * np.exp(2.0 * math.pi * D)
    mc = np.full(t.shape, np.nan)
    err = np.full(t.shape, np.nan)
    for i, tt in enumerate(t):
        if tt <= mc_t_max and tt > z0_a:
            dom = LogDomain(h, float(tt))
            z0 = complex(z0_a, float(dom.lower(z0_a)) + math.pi / 2)
            r = wos_measure(HMProblem(dom, z0), walks=walks, seed=seed + i)
            mc[i] = C * math.exp(tt) * r.omega
            err[i] = C * math.exp(tt) * r.stderr
    return DecaySeries(t, n, bound, major, two_pi, mc, err)
