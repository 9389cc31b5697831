"""Rotation functions, rotating half-planes and the three-way classification.

A rotation function is stored in its logarithmic form ``h(x) = s(e^x)``; every
domain in the package (the rotating half-plane, the strip around the spiral,
the log-domain of the harmonic-measure estimates) is built from ``h``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline

from .errors import GeometryError, NumericError, PreconditionError

FAMILIES = ("power", "sqrt_log", "constant", "table")

# classification gates
TAIL_BETA_MIN = 0.05
TAIL_RESIDUAL_MAX = 1e-3
HPRIME_TAIL_TOL = 1e-3
SQRTLOG_THRESHOLD = 0.05
TAIL_X_START = 2.0**10
TAIL_DOUBLINGS = 10
X_TAIL_MAX = 1e6


@dataclass(frozen=True)
class RotationFunction:
    """``h(x) = s(e^x)`` for one of the built-in families.

    ``power``: ``a * x**p``; ``sqrt_log``: ``a * sqrt(x)`` known by values only
    (no regularity is claimed for it); ``constant``: ``c``; ``table``: natural
    cubic spline through ``knots``, continued linearly past the last knot.
    ``shift`` is added to every family. Below ``x_min`` the function is
    continued as the constant ``h(x_min)``.
    """

    family: str
    a: float = 1.0
    p: float = 0.25
    c: float = 0.0
    knots: tuple = ()
    x_min: float = 1.0
    shift: float = 0.0

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise PreconditionError(f"unknown rotation family {self.family!r}")
        if self.family == "power" and (self.a < 0 or self.p < 0):
            raise PreconditionError("power family needs a >= 0 and p >= 0")
        if self.family == "table":
            k = np.asarray(self.knots, dtype=float)
            if k.ndim != 2 or k.shape[1] != 2 or len(k) < 3:
                raise PreconditionError("table family needs at least 3 [x, h] knots")
            if np.any(np.diff(k[:, 0]) <= 0):
                raise PreconditionError("table knots must have increasing x")
            xs = np.linspace(k[0, 0], k[-1, 0], 50 * len(k))
            if np.any(self._spline(xs, 1) < -1e-12):
                raise PreconditionError("table spline is not monotone; add knots")

    # ------------------------------------------------------------------ eval
    @property
    def values_only(self) -> bool:
        return self.family == "sqrt_log"

    @cached_property
    def _table(self):
        k = np.asarray(self.knots, dtype=float)
        return CubicSpline(k[:, 0], k[:, 1], bc_type="natural", extrapolate=True)

    def _spline(self, x, nu):
        sp = self._table
        x0, x1 = sp.x[0], sp.x[-1]
        xc = np.clip(x, x0, x1)
        out = sp(xc, nu)
        # linear continuation past the last knot (natural end: h'' = 0)
        right = x > x1
        if nu == 0:
            out = np.where(right, sp(x1) + sp(x1, 1) * (x - x1), out)
        elif nu == 1:
            out = np.where(right, sp(x1, 1), out)
        else:
            out = np.where(right, 0.0, out)
        return out

    def _raw(self, x, nu):
        f = self.family
        if f == "constant":
            return np.full_like(x, self.c if nu == 0 else 0.0)
        if f == "table":
            return self._spline(x, nu)
        a = self.a
        p = 0.5 if f == "sqrt_log" else self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            if nu == 0:
                return a * x**p
            if nu == 1:
                return a * p * x ** (p - 1.0) if p != 0 else np.zeros_like(x)
            return a * p * (p - 1.0) * x ** (p - 2.0) if p not in (0.0, 1.0) else np.zeros_like(x)

    def _eval(self, x, nu):
        x = np.asarray(x, dtype=float)
        below = x < self.x_min
        xe = np.where(below, self.x_min, x)
        out = self._raw(xe, nu)
        if nu == 0:
            out = out + self.shift
        else:
            out = np.where(below, 0.0, out)
        return out if out.ndim else float(out)

    def h(self, x):
        return self._eval(x, 0)

    def dh(self, x):
        return self._eval(x, 1)

    def d2h(self, x):
        return self._eval(x, 2)

    def s(self, r):
        """Rotation function on the radius scale."""
        return self.h(np.log(r))

    def shifted(self, delta: float) -> "RotationFunction":
        d = self.to_dict()
        d["shift"] = self.shift + delta
        return RotationFunction.from_dict(d)

    # ------------------------------------------------------------------ json
    def to_dict(self) -> dict:
        d = {"family": self.family, "x_min": self.x_min}
        if self.family == "power":
            d.update(a=self.a, p=self.p)
        elif self.family == "sqrt_log":
            d.update(a=self.a)
        elif self.family == "constant":
            d.update(c=self.c)
        else:
            d.update(knots=[list(k) for k in self.knots])
        if self.shift:
            d["shift"] = self.shift
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "RotationFunction":
        d = dict(d)
        fam = d.pop("family", None)
        if fam is None:
            raise PreconditionError("rotation JSON is missing 'family'")
        allowed = {"a", "p", "c", "knots", "x_min", "shift"}
        extra = set(d) - allowed
        if extra:
            raise PreconditionError(f"unexpected rotation fields: {sorted(extra)}")
        if "knots" in d:
            d["knots"] = tuple(tuple(float(v) for v in k) for k in d["knots"])
        for key in ("a", "p", "c", "x_min", "shift"):
            if key in d:
                d[key] = float(d[key])
        return cls(family=fam, **d)

    @classmethod
    def from_json(cls, text: str) -> "RotationFunction":
        return cls.from_dict(json.loads(text))


def power(a=1.0, p=0.25, x_min=1.0) -> RotationFunction:
    return RotationFunction("power", a=a, p=p, x_min=x_min)


def sqrt_log(a=1.0, x_min=1.0) -> RotationFunction:
    return RotationFunction("sqrt_log", a=a, x_min=x_min)


def constant(c=0.0, x_min=1.0) -> RotationFunction:
    return RotationFunction("constant", c=c, x_min=x_min)


@dataclass(frozen=True)
class RotatingHalfPlane:
    rotation: RotationFunction

    def complement(self) -> "RotatingHalfPlane":
        return RotatingHalfPlane(self.rotation.shifted(math.pi))

    def unwrapped_angle(self, z):
        """Representative of arg z in (s(|z|) - pi, s(|z|) + pi]."""
        z = np.asarray(z, dtype=complex)
        s = self.rotation.s(np.abs(z))
        d = np.angle(z) - s
        d = -(np.mod(-d + math.pi, 2 * math.pi) - math.pi)
        return s + d

    def contains(self, z):
        z = np.asarray(z, dtype=complex)
        if np.any(z == 0):
            raise GeometryError("the origin is not part of any rotating half-plane")
        s = self.rotation.s(np.abs(z))
        alpha = self.unwrapped_angle(z)
        out = (alpha > s) & (alpha < s + math.pi)
        return bool(out) if out.ndim == 0 else out


def contains(hp: RotatingHalfPlane, z):
    return hp.contains(z)


# ---------------------------------------------------------------- integrals
def _checked(fn):
    def wrapped(x):
        v = fn(x)
        if not np.isfinite(v):
            raise NumericError(f"non-finite integrand at x={x!r}")
        return v

    return wrapped


def _quad(fn, lo, hi, points=None):
    if hi <= lo:
        raise PreconditionError("upper limit must exceed x_min")
    kw = dict(epsabs=0.0, epsrel=1e-10, limit=500)
    if points is not None and math.isfinite(hi):
        pts = [p for p in points if lo < p < hi]
        if pts:
            kw["points"] = pts
    val, _ = integrate.quad(_checked(fn), lo, hi, **kw)
    return val


def _knot_points(rf):
    return [k[0] for k in rf.knots] if rf.family == "table" else None


def sqint(rf: RotationFunction, X: float) -> float:
    """Integral of h'(x)^2 over [x_min, X]; X may be ``inf``."""
    return _quad(lambda x: rf.dh(x) ** 2, rf.x_min, X, _knot_points(rf))


def habs2_int(rf: RotationFunction, X: float) -> float:
    """Integral of |h''(x)| over [x_min, X]; X may be ``inf``."""
    return _quad(lambda x: abs(rf.d2h(x)), rf.x_min, X, _knot_points(rf))


@dataclass(frozen=True)
class TailFit:
    verdict: str  # convergent | divergent | unclear
    beta: float
    residual: float
    increments: tuple = field(default=(), repr=False)


def tail_fit(integrand, x_start=TAIL_X_START, doublings=TAIL_DOUBLINGS) -> TailFit:
    """Fit the doubling increments of a tail integral against c * X**(-beta)."""
    xs = x_start * 2.0 ** np.arange(doublings)
    inc = np.array(
        [integrate.quad(_checked(integrand), x, 2 * x, epsabs=0.0, epsrel=1e-10, limit=200)[0] for x in xs]
    )
    if np.all(inc <= 1e-300):
        return TailFit("convergent", math.inf, 0.0, tuple(inc))
    if np.any(inc <= 0):
        return TailFit("unclear", math.nan, math.inf, tuple(inc))
    A = np.vstack([np.ones_like(xs), -np.log(xs)]).T
    coef, *_ = np.linalg.lstsq(A, np.log(inc), rcond=None)
    resid = float(np.sqrt(np.mean((A @ coef - np.log(inc)) ** 2)))
    beta = float(coef[1])
    if resid >= TAIL_RESIDUAL_MAX:
        verdict = "unclear"
    elif beta > TAIL_BETA_MIN:
        verdict = "convergent"
    else:
        verdict = "divergent"
    return TailFit(verdict, beta, resid, tuple(inc))


def sqrtlog_probe_log(rf: RotationFunction, x_grid) -> float:
    x = np.asarray(x_grid, dtype=float)
    x = x[x > 0]
    tail = x[len(x) // 2:]
    if tail.size == 0:
        return 0.0
    return float(np.max(rf.h(tail) / np.sqrt(tail)))


def sqrtlog_limsup_probe(rf: RotationFunction, r_grid) -> float:
    """Max of s(r)/sqrt(log r) over the upper half of ``r_grid``."""
    return sqrtlog_probe_log(rf, np.log(np.asarray(r_grid, dtype=float)))


@dataclass(frozen=True)
class Classification:
    verdict: str  # constructible | constant_only_regular | constant_only_sqrtlog | undetermined
    evidence: dict


def classify(rf: RotationFunction) -> Classification:
    sq = tail_fit(lambda x: rf.dh(x) ** 2)
    d2 = tail_fit(lambda x: abs(rf.d2h(x)))
    x_tail = np.geomspace(TAIL_X_START, X_TAIL_MAX, 64)
    hp = np.asarray(rf.dh(x_tail))
    hp_end = float(hp[-1])
    hp_decreasing = bool(np.all(np.diff(hp) <= 1e-15))
    probe = sqrtlog_probe_log(rf, np.geomspace(1.0, X_TAIL_MAX, 400))
    ev = {
        "sqint_tail": {"verdict": sq.verdict, "beta": sq.beta, "residual": sq.residual},
        "habs2_tail": {"verdict": d2.verdict, "beta": d2.beta, "residual": d2.residual},
        "hprime_at_xmax": hp_end,
        "hprime_decreasing": hp_decreasing,
        "sqrtlog_probe": probe,
        "values_only": rf.values_only,
    }
    if sq.verdict == "convergent" and abs(hp_end) < HPRIME_TAIL_TOL and hp_decreasing:
        verdict = "constructible"
    elif not rf.values_only and sq.verdict == "divergent" and d2.verdict == "convergent":
        verdict = "constant_only_regular"
    elif sq.verdict != "convergent" and probe > SQRTLOG_THRESHOLD:
        verdict = "constant_only_sqrtlog"
    else:
        verdict = "undetermined"
    return Classification(verdict, ev)
