"""Sub-level arc sets of a pair of entire functions on circles |z| = R.

Everything is computed from log-magnitudes so that pairs like (e^z, e^-z)
can be scanned at radii where |f| itself overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import NumericError, PreconditionError

TWO_PI = 2.0 * math.pi
BISECT_STEPS = 10


@dataclass(frozen=True)
class FunctionPair:
    """Two evaluators of log|f| and log|g| on complex arrays.

    With ``reflected=True`` the pair is (F(z), F(-z)) and ``log_abs_g`` is
    never called on circle samples: g-samples are f-samples rotated by pi.
    """

    log_abs_f: Callable
    log_abs_g: Callable
    type_bound: float = math.inf
    name: str = "pair"
    reflected: bool = False


def exp_pair(cf=1.0, a=1.0, cg=1.0, b=1.0) -> FunctionPair:
    """(cf * e^{a z}, cg * e^{-b z})."""
    lcf, lcg = math.log(cf), math.log(cg)
    return FunctionPair(
        lambda z: lcf + a * np.real(z),
        lambda z: lcg - b * np.real(z),
        type_bound=max(a, b),
        name=f"({cf}e^({a}z), {cg}e^(-{b}z))",
    )


def constant_pair(cf, cg) -> FunctionPair:
    lcf, lcg = math.log(abs(cf)), math.log(abs(cg))
    return FunctionPair(
        lambda z: np.full(np.shape(z), lcf),
        lambda z: np.full(np.shape(z), lcg),
        type_bound=0.0,
        name=f"({cf}, {cg})",
    )


def _log_abs(fn):
    def wrapped(z):
        with np.errstate(over="ignore", divide="ignore"):
            return np.log(np.abs(fn(z)))

    return wrapped


def pair_from_functions(f, g, type_bound=math.inf, name="pair") -> FunctionPair:
    """Pair from complex-valued evaluators; overflow becomes log|.| = inf."""
    return FunctionPair(_log_abs(f), _log_abs(g), type_bound, name)


def reflected_pair(log_abs_F, type_bound=math.inf, name="(F(z), F(-z))") -> FunctionPair:
    return FunctionPair(log_abs_F, lambda z: log_abs_F(-np.asarray(z)), type_bound, name, reflected=True)


def _evaluate(fn, z):
    v = np.asarray(fn(z), dtype=float)
    if np.any(np.isnan(v)):
        raise NumericError("NaN in function evaluation")
    return np.broadcast_to(v, np.shape(z)).copy()


# ------------------------------------------------------------------ scans
@dataclass(frozen=True)
class ArcSet:
    """Tagged tiling of [0, 2pi) on the circle of radius R."""

    R: float
    n: int
    starts: np.ndarray
    ends: np.ndarray
    f_small: np.ndarray  # |f| <= 1 on the piece
    g_small: np.ndarray  # |g| <= 1 on the piece
    log_f: np.ndarray  # samples at 2 pi k / n
    log_g: np.ndarray

    @property
    def lengths(self):
        return self.ends - self.starts

    @property
    def tags(self):
        out = []
        for fs, gs in zip(self.f_small, self.g_small):
            out.append("both" if fs and gs else "f" if fs else "g" if gs else "neither")
        return out

    @property
    def boundaries(self):
        return self.starts[1:] if self.starts[0] == 0.0 else self.starts


def _refine(fn, R, k, n, state):
    """Bisect each sample interval [t_k, t_k+1] whose end states differ."""
    lo = TWO_PI * k / n
    hi = TWO_PI * (k + 1) / n
    s_lo = state[k]
    for _ in range(BISECT_STEPS):
        mid = 0.5 * (lo + hi)
        s_mid = _evaluate(fn, R * np.exp(1j * mid)) > 0
        same = s_mid == s_lo
        lo = np.where(same, mid, lo)
        hi = np.where(same, hi, mid)
    return np.mod(hi, TWO_PI)


def scan_circle(pair: FunctionPair, R: float, n: int = 1024) -> ArcSet:
    if R <= 0:
        raise PreconditionError("radius must be positive")
    if n < 16 or n & (n - 1):
        raise PreconditionError("n must be a power of two >= 16")
    theta = TWO_PI * np.arange(n) / n
    z = R * np.exp(1j * theta)
    lf = _evaluate(pair.log_abs_f, z)
    lg = np.roll(lf, -n // 2) if pair.reflected else _evaluate(pair.log_abs_g, z)

    cuts = [np.array([0.0])]
    for fn, samples in ((pair.log_abs_f, lf), (pair.log_abs_g, lg)):
        state = samples > 0
        k = np.nonzero(state != np.roll(state, -1))[0]
        if k.size:
            cuts.append(_refine(fn, R, k, n, state))
    bps = np.unique(np.concatenate(cuts))
    starts = bps
    ends = np.append(bps[1:], TWO_PI)
    keep = ends > starts
    starts, ends = starts[keep], ends[keep]
    mid = R * np.exp(1j * 0.5 * (starts + ends))
    f_small = _evaluate(pair.log_abs_f, mid) <= 0
    g_small = _evaluate(pair.log_abs_g, mid) <= 0
    return ArcSet(float(R), n, starts, ends, f_small, g_small, lf, lg)


def _longest_run(mask, lengths):
    if mask.all():
        return math.inf
    if not mask.any():
        return 0.0
    first_gap = int(np.argmin(mask))
    m = np.roll(mask, -first_gap)
    L = np.roll(lengths, -first_gap)
    best = cur = 0.0
    for on, length in zip(m, L):
        cur = cur + length if on else 0.0
        best = max(best, cur)
    return best


def longest_arc_fraction(aset: ArcSet, which: str = "f") -> float:
    """m(R): longest arc of the closed super-level set as a fraction of 2 pi.

    Returns ``inf`` when the whole circle lies in the super-level set.
    """
    small = aset.f_small if which == "f" else aset.g_small
    run = _longest_run(~small, aset.lengths)
    return run if math.isinf(run) else run / TWO_PI


def eta(m: float) -> float:
    if math.isinf(m):
        return 0.0
    if m == 0:
        return math.inf
    return 1.0 / m


def m_resolution(n: int) -> float:
    """Slack on m_u + m_v coming from the bisection width."""
    return 4.0 * math.pi / n * 2.0**-BISECT_STEPS


# --------------------------------------------------------------- profiles
@dataclass(frozen=True)
class GrowthProfile:
    tau: np.ndarray
    m_u: np.ndarray
    m_v: np.ndarray
    eta_u: np.ndarray
    eta_v: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    lhs_v: np.ndarray
    rhs_v: np.ndarray
    n: int
    applicable: bool
    applicable_v: bool

    @property
    def ratio(self):
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.lhs / self.rhs

    @property
    def witnessed_constant(self) -> float:
        """Infimum of LHS/RHS over the grid: an empirical C for the growth lemma."""
        if not self.applicable:
            return math.nan
        return float(np.min(self.ratio))


def _cumtrapz(y, x):
    out = np.zeros_like(y)
    out[1:] = np.cumsum(0.5 * (y[1:] + y[:-1]) * np.diff(x))
    return out


def _rhs(eta_vals, tau_full):
    if not np.all(np.isfinite(eta_vals)):
        return np.full(len(tau_full) - 1, np.nan), False
    inner = _cumtrapz(eta_vals, tau_full)
    return _cumtrapz(np.exp(inner), tau_full)[1:], True


def default_tau_grid(tau_max=8.0, step=0.05):
    steps = int(round(tau_max / step))
    return np.linspace(tau_max / steps, tau_max, steps)


def lemma1_profile(pair: FunctionPair, tau_max: float = 8.0, steps: int = 160, n: int = 1024,
                   tau_grid=None) -> GrowthProfile:
    """Both sides of the growth lemma for u = log+|f| (and v = log+|g|).

    LHS(tau) = int u^2(e^tau e^{i theta}) d theta by the periodic trapezoid
    rule on the scan samples; RHS(tau) = int_0^tau exp(int_0^tau' eta) by
    nested trapezoids. Circles where the super-level set is empty give
    eta = inf and mark that side non-applicable.
    """
    if tau_grid is None:
        if tau_max < 1:
            raise PreconditionError("tau_max must be >= 1")
        tau_grid = np.linspace(tau_max / steps, tau_max, steps)
    tau = np.asarray(tau_grid, dtype=float)
    tau_full = np.concatenate([[0.0], tau])
    m_u, m_v, lhs, lhs_v = [], [], [], []
    for t in tau_full:
        a = scan_circle(pair, math.exp(t), n)
        m_u.append(longest_arc_fraction(a, "f"))
        m_v.append(longest_arc_fraction(a, "g"))
        lhs.append(np.sum(np.maximum(a.log_f, 0.0) ** 2) * TWO_PI / n)
        lhs_v.append(np.sum(np.maximum(a.log_g, 0.0) ** 2) * TWO_PI / n)
    m_u, m_v = np.array(m_u), np.array(m_v)
    eu = np.array([eta(m) for m in m_u])
    ev = np.array([eta(m) for m in m_v])
    rhs, ok_u = _rhs(eu, tau_full)
    rhs_v, ok_v = _rhs(ev, tau_full)
    return GrowthProfile(tau, m_u[1:], m_v[1:], eu[1:], ev[1:], np.array(lhs[1:]), rhs,
                         np.array(lhs_v[1:]), rhs_v, n, ok_u, ok_v)


def defect_integral(profile: GrowthProfile) -> float:
    """Trapezoid integral of (eta_u + eta_v)/2 - 2 over the profile grid."""
    integrand = 0.5 * (profile.eta_u + profile.eta_v) - 2.0
    if not np.all(np.isfinite(integrand)):
        raise NumericError("defect integrand is infinite (empty super-level set on some circle)")
    floor = -(1e-9 + 2.0 * m_resolution(profile.n))
    bad = integrand < floor
    if bad.any():
        i = int(np.argmax(bad))
        raise NumericError(
            f"defect integrand {integrand[i]:.3e} < 0 at tau={profile.tau[i]:.3f}: "
            "m_u + m_v <= 1 is violated"
        )
    return float(np.trapezoid(integrand, profile.tau))


def lemma3_delta(eps: float) -> float:
    """delta(eps) with 1/x + 1/y > 4 + delta when x + y <= 1, |x - 1/2| > eps."""
    if not 0 < eps < 0.5:
        raise PreconditionError("eps must lie in (0, 1/2)")
    return min(4.0 / (1.0 - eps**2) - 4.0, 4.0 / (1.0 - eps) - 4.0)


# -------------------------------------------------------------- two arcs
@dataclass(frozen=True)
class TwoArcsReport:
    tau: np.ndarray
    passed: np.ndarray
    B_measure: np.ndarray
    I_length: np.ndarray
    J_length: np.ndarray
    eps: float

    @property
    def failing_measure(self) -> float:
        """Measure of the failing part of the tau grid (empirical E_eps)."""
        t = self.tau
        if len(t) == 1:
            return 0.0 if self.passed[0] else 1.0
        edges = np.concatenate([[t[0] - 0.5 * (t[1] - t[0])], 0.5 * (t[1:] + t[:-1]),
                                [t[-1] + 0.5 * (t[-1] - t[-2])]])
        return float(np.sum(np.diff(edges)[~self.passed]))


def _measure_in(bad, starts, ends, a):
    """Measure of bad pieces inside [a, a + pi) (mod 2 pi), vectorized over a."""
    knots = np.concatenate([starts, [TWO_PI]])
    cum = np.concatenate([[0.0], np.cumsum(np.where(bad, ends - starts, 0.0))])
    total = cum[-1]

    def F(x):
        k = np.floor(x / TWO_PI)
        return k * total + np.interp(x - k * TWO_PI, knots, cum)

    return F(a + math.pi) - F(a)


def semicircle_defect(aset: ArcSet) -> float:
    """min over semicircles C of the angular measure of the set B where
    (|f| <= 1 < |g|) fails on C or (|g| <= 1 < |f|) fails on -C."""
    good_I = ~aset.f_small & aset.g_small
    good_J = aset.f_small & ~aset.g_small
    cand = np.mod(np.concatenate([aset.starts, aset.starts - math.pi]), TWO_PI)
    B = _measure_in(~good_J, aset.starts, aset.ends, cand) + \
        _measure_in(~good_I, aset.starts, aset.ends, cand + math.pi)
    return float(np.min(B))


def two_arcs_check(pair: FunctionPair, tau_grid, eps: float, n: int = 1024) -> TwoArcsReport:
    if not 0 < eps < math.pi / 2:
        raise PreconditionError("eps must lie in (0, pi/2)")
    tau = np.asarray(tau_grid, dtype=float)
    ok, Bs, Is, Js = [], [], [], []
    for t in tau:
        a = scan_circle(pair, math.exp(t), n)
        I = _longest_run(~a.f_small & a.g_small, a.lengths)
        J = _longest_run(a.f_small & ~a.g_small, a.lengths)
        B = semicircle_defect(a)
        ok.append(I >= math.pi - eps and J >= math.pi - eps and B <= eps)
        Bs.append(B)
        Is.append(I)
        Js.append(J)
    return TwoArcsReport(tau, np.array(ok), np.array(Bs), np.array(Is), np.array(Js), eps)


def min_modulus_sup(pair: FunctionPair, sample_spec) -> float:
    """max over samples of min(|f|, |g|).

    ``sample_spec`` is either an array of points or a dict with keys
    r_min, r_max, n_r, n_theta describing an annulus grid.
    """
    if isinstance(sample_spec, dict):
        r = np.linspace(sample_spec["r_min"], sample_spec["r_max"], sample_spec["n_r"])
        th = TWO_PI * np.arange(sample_spec["n_theta"]) / sample_spec["n_theta"]
        z = (r[:, None] * np.exp(1j * th[None, :])).ravel()
    else:
        z = np.asarray(sample_spec, dtype=complex).ravel()
    lf = _evaluate(pair.log_abs_f, z)
    lg = _evaluate(pair.log_abs_g, z)
    return float(np.exp(np.max(np.minimum(lf, lg))))
