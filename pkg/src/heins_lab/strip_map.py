"""Conformal map of a curved semi-infinite strip onto {|Im Z| < pi/2}.

The curved strip ``S = {u + iv : phi_-(u) < v < phi_+(u), u > u_min}`` is
straightened by ``eta = (v - phi_-(u)) / theta(u)``. In (u, eta) the
imaginary part Y of the map solves a variable-coefficient Laplace problem:

    F_uu + 2 a F_ueta + (a^2 + b^2) F_etaeta + c F_eta = 0,
    a = eta_u = -(phi_-' + eta theta') / theta,   b = 1 / theta,
    c = eta_uu = -(phi_-'' + eta theta'') / theta - 2 a theta' / theta,

with F = -pi/2 on eta = 0, F = pi/2 on eta = 1, the straight-strip profile
at u_max and a reflecting (Neumann) end at u_min. X is the harmonic
conjugate, obtained by integrating the Cauchy-Riemann relations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy import integrate
from scipy.interpolate import RectBivariateSpline

from .errors import GeometryError, NumericError, PreconditionError
from .rotation import RotationFunction, tail_fit

HALF_PI = 0.5 * math.pi
GATE_U = 1e6


def _zero(u):
    return np.zeros_like(np.asarray(u, dtype=float))


@dataclass(frozen=True)
class StripProfile:
    """Boundary curves phi_- < phi_+ given as (value, first, second derivative)."""

    phi_minus: tuple
    phi_plus: tuple
    u_min: float = 0.0
    name: str = "profile"

    def theta(self, u, nu=0):
        return self.phi_plus[nu](u) - self.phi_minus[nu](u)

    def psi(self, u, nu=0):
        return 0.5 * (self.phi_plus[nu](u) + self.phi_minus[nu](u))

    def pm(self, u, nu=0):
        return self.phi_minus[nu](u)

    def pp(self, u, nu=0):
        return self.phi_plus[nu](u)

    def check(self, u):
        th = self.theta(np.asarray(u, dtype=float))
        if np.any(th <= 0):
            raise GeometryError("theta(u) <= 0: boundary curves cross")


def from_theta_psi(theta, psi, u_min=0.0, name="profile") -> StripProfile:
    """Profile from (theta, theta', theta'') and (psi, psi', psi'') triples."""
    lo = tuple((lambda f, g: (lambda u: g(u) - 0.5 * f(u)))(t, p) for t, p in zip(theta, psi))
    hi = tuple((lambda f, g: (lambda u: g(u) + 0.5 * f(u)))(t, p) for t, p in zip(theta, psi))
    return StripProfile(lo, hi, u_min, name)


def straight(width=math.pi, center=0.0, u_min=0.0) -> StripProfile:
    th = (lambda u: width + _zero(u), _zero, _zero)
    ps = (lambda u: center + _zero(u), _zero, _zero)
    return from_theta_psi(th, ps, u_min, "straight")


def construction_theta():
    return (
        lambda u: math.pi - 2.0 / (np.asarray(u) ** 2 + 1.0),
        lambda u: 4.0 * np.asarray(u) / (np.asarray(u) ** 2 + 1.0) ** 2,
        lambda u: -4.0 * (3.0 * np.asarray(u) ** 2 - 1.0) / (np.asarray(u) ** 2 + 1.0) ** 3,
    )


def rotation_psi(rf: RotationFunction, offset=1.5 * math.pi):
    return (lambda u: rf.h(u) + offset, rf.dh, rf.d2h)


def construction_profile(rf: RotationFunction, u_min=math.log(10.0)) -> StripProfile:
    """phi_- = h + pi + 1/(u^2+1), phi_+ = h + 2 pi - 1/(u^2+1)."""
    return from_theta_psi(construction_theta(), rotation_psi(rf), u_min, "construction")


# ------------------------------------------------------------------ solver
@dataclass(frozen=True)
class NumericStripMap:
    profile: StripProfile
    u: np.ndarray
    eta: np.ndarray
    X: np.ndarray  # shape (len(u), len(eta))
    Y: np.ndarray
    anchor_u: float
    residual: float
    cr_residual: float
    boundary_error: float
    meta: dict = field(default_factory=dict)

    @property
    def u_max(self):
        return float(self.u[-1])

    @property
    def mesh(self):
        return len(self.eta) - 1

    @cached_property
    def _sx(self):
        return RectBivariateSpline(self.u, self.eta, self.X, kx=3, ky=3)

    @cached_property
    def _sy(self):
        return RectBivariateSpline(self.u, self.eta, self.Y, kx=3, ky=3)

    def to_eta(self, w, strict=True):
        w = np.asarray(w, dtype=complex)
        u = w.real
        if strict and (np.any(u < self.u[0] - 1e-9) or np.any(u > self.u[-1] + 1e-9)):
            raise GeometryError(
                f"point outside the solved mesh u in [{self.u[0]:.3f}, {self.u[-1]:.3f}]; raise u_max"
            )
        p = self.profile
        eta = (w.imag - p.pm(u)) / p.theta(u)
        if strict and (np.any(eta < -1e-9) or np.any(eta > 1 + 1e-9)):
            raise GeometryError("point outside the strip")
        return u, eta

    def Z(self, w):
        u, eta = self.to_eta(w)
        eta = np.clip(eta, 0.0, 1.0)
        x = self._sx.ev(u, eta)
        y = self._sy.ev(u, eta)
        return x + 1j * y

    def X_at(self, u, eta):
        return self._sx.ev(u, eta)

    def Y_at(self, u, eta):
        return self._sy.ev(u, eta)

    def dbar(self, w):
        """d Z / d wbar at w; zero for an exactly conformal map."""
        u, eta = self.to_eta(w)
        eta = np.clip(eta, 0.0, 1.0)
        p = self.profile
        th = p.theta(u)
        a = -(p.pm(u, 1) + eta * p.theta(u, 1)) / th
        Xu, Xe = self._sx.ev(u, eta, dx=1), self._sx.ev(u, eta, dy=1)
        Yu, Ye = self._sy.ev(u, eta, dx=1), self._sy.ev(u, eta, dy=1)
        X_u, X_v = Xu + a * Xe, Xe / th
        Y_u, Y_v = Yu + a * Ye, Ye / th
        return 0.5 * ((X_u - Y_v) + 1j * (Y_u + X_v))

    def core_X(self, u):
        return self._sx.ev(u, np.full_like(np.asarray(u, dtype=float), 0.5))

    def level_eta(self, y, u_grid):
        """eta(u) on the preimage of the line Im Z = y."""
        if not abs(y) < HALF_PI:
            raise PreconditionError("|y| must be < pi/2")
        u_grid = np.asarray(u_grid, dtype=float)
        if np.any(u_grid < self.u[0]) or np.any(u_grid > self.u[-1]):
            raise GeometryError("level curve requested outside the mesh")
        fine = np.linspace(0.0, 1.0, 8 * self.mesh + 1)
        Yv = self._sy(u_grid, fine)
        out = np.empty(len(u_grid))
        for i, row in enumerate(Yv):
            row = np.maximum.accumulate(row)
            out[i] = np.interp(y, row, fine)
        return out

    def trace(self, y, u_grid):
        """(v, X) along the preimage of Im Z = y."""
        eta = self.level_eta(y, u_grid)
        p = self.profile
        v = p.pm(u_grid) + p.theta(u_grid) * eta
        return v, self._sx.ev(u_grid, eta)

    def W(self, z):
        """Inverse map on points of the straight strip."""
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        out = np.empty(z.shape, dtype=complex)
        for k, zz in enumerate(z):
            v, x = self.trace(zz.imag, self.u)
            if not (x[0] <= zz.real <= x[-1]):
                raise GeometryError("inverse requested outside the mapped region")
            xm = np.maximum.accumulate(x)
            u = np.interp(zz.real, xm, self.u)
            e = self.level_eta(zz.imag, [u])[0]
            out[k] = u + 1j * (self.profile.pm(u) + self.profile.theta(u) * e)
        return out


def _coefficients(profile, u, eta):
    U, E = np.meshgrid(u, eta, indexing="ij")
    th = profile.theta(U)
    th1 = profile.theta(U, 1)
    th2 = profile.theta(U, 2)
    a = -(profile.pm(U, 1) + E * th1) / th
    b = 1.0 / th
    c = -(profile.pm(U, 2) + E * th2) / th - 2.0 * a * th1 / th
    return a, b, c


def solve_strip_map(profile: StripProfile, u_max: float, mesh: int = 64, du: float | None = None,
                    anchor_u: float | None = None) -> NumericStripMap:
    """Finite-difference solve for Y, path integration for X.

    ``mesh`` is the number of transverse intervals; ``du`` defaults to
    6.4 / mesh. X is normalised to vanish on the core curve at ``anchor_u``
    (default u_min + 5).
    """
    u_min = profile.u_min
    if u_max < u_min + 20:
        raise PreconditionError("u_max must be at least u_min + 20")
    if mesh < 64 or mesh % 2:
        raise PreconditionError("mesh must be an even number >= 64")
    du = 6.4 / mesh if du is None else du
    nu_ = int(math.ceil((u_max - u_min) / du)) + 1
    u = np.linspace(u_min, u_max, nu_)
    du = u[1] - u[0]
    eta = np.linspace(0.0, 1.0, mesh + 1)
    de = eta[1] - eta[0]
    profile.check(u)
    a, b, c = _coefficients(profile, u, eta)

    ne = mesh + 1
    idx = np.arange(nu_ * ne).reshape(nu_, ne)
    rows, cols, vals = [], [], []
    rhs = np.zeros(nu_ * ne)

    def put(r, cidx, v):
        rows.append(r.ravel())
        cols.append(cidx.ravel())
        vals.append(np.broadcast_to(v, r.shape).ravel())

    # Dirichlet rows: eta = 0, eta = 1 and the straight profile at u_max
    lin = -HALF_PI + math.pi * eta
    dir_mask = np.zeros((nu_, ne), bool)
    dir_mask[:, 0] = dir_mask[:, -1] = dir_mask[-1, :] = True
    target = np.broadcast_to(lin, (nu_, ne))
    r = idx[dir_mask]
    put(r, r, 1.0)
    rhs[r] = target[dir_mask]

    # interior rows
    I, J = np.meshgrid(np.arange(1, nu_ - 1), np.arange(1, ne - 1), indexing="ij")
    A, B, C = a[I, J], b[I, J], c[I, J]
    r = idx[I, J]
    cuu = 1.0 / du**2
    cee = (A**2 + B**2) / de**2
    cue = 2.0 * A / (4.0 * du * de)
    ce = C / (2.0 * de)
    put(r, idx[I, J], -2.0 * cuu - 2.0 * cee)
    put(r, idx[I + 1, J], cuu)
    put(r, idx[I - 1, J], cuu)
    put(r, idx[I, J + 1], cee + ce)
    put(r, idx[I, J - 1], cee - ce)
    put(r, idx[I + 1, J + 1], cue)
    put(r, idx[I - 1, J - 1], cue)
    put(r, idx[I + 1, J - 1], -cue)
    put(r, idx[I - 1, J + 1], -cue)

    # reflecting end at u_min: dY/du (at fixed v) = F_u + a F_eta = 0
    J0 = np.arange(1, ne - 1)
    r = idx[0, J0]
    A0 = a[0, J0]
    put(r, idx[0, J0], -3.0 / (2 * du))
    put(r, idx[1, J0], 4.0 / (2 * du))
    put(r, idx[2, J0], -1.0 / (2 * du))
    put(r, idx[0, J0 + 1], A0 / (2 * de))
    put(r, idx[0, J0 - 1], -A0 / (2 * de))

    M = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nu_ * ne, nu_ * ne))
    F = spla.spsolve(M.tocsc(), rhs)
    res = float(np.max(np.abs(M @ F - rhs)))
    if not np.all(np.isfinite(F)) or res > 1e-6:
        raise NumericError(f"linear solve did not converge (residual {res:.3e})")
    F = F.reshape(nu_, ne)

    # harmonic conjugate
    Fu = np.gradient(F, du, axis=0, edge_order=2)
    Fe = np.gradient(F, de, axis=1, edge_order=2)
    U, E = np.meshgrid(u, eta, indexing="ij")
    th = profile.theta(U)
    Yu = Fu + a * Fe  # dY/du at fixed v
    dX_du = Fe / th - Yu * (profile.pm(U, 1) + E * profile.theta(U, 1))
    dX_de = -Yu * th
    jc = mesh // 2
    Xc = np.concatenate([[0.0], np.cumsum(0.5 * (dX_du[1:, jc] + dX_du[:-1, jc]) * du)])
    X = np.empty_like(F)
    X[:, jc] = Xc
    steps = 0.5 * (dX_de[:, 1:] + dX_de[:, :-1]) * de
    up = np.cumsum(steps[:, jc:], axis=1)
    X[:, jc + 1:] = Xc[:, None] + up
    down = np.cumsum(steps[:, :jc][:, ::-1], axis=1)
    X[:, :jc] = (Xc[:, None] - down)[:, ::-1]

    anchor = u_min + 5.0 if anchor_u is None else anchor_u
    X -= np.interp(anchor, u, X[:, jc])

    # discrete Cauchy-Riemann residual of (X, F) on interior nodes
    Xu_e = np.gradient(X, du, axis=0, edge_order=2)
    Xe = np.gradient(X, de, axis=1, edge_order=2)
    r1 = (Xu_e + a * Xe) - Fe / th
    r2 = Xe / th + Yu
    rr = np.hypot(r1, r2)[:, 2:-2]
    # corners at u_min carry a boundary singularity; u_max carries the closure layer
    window = (u > u_min + 2.0) & (u < u[-1] - 5.0)
    cr = float(np.max(rr[window]))
    cr_full = float(np.max(rr[2:-2]))
    bnd = float(max(np.max(np.abs(F[:, 0] + HALF_PI)), np.max(np.abs(F[:, -1] - HALF_PI))))
    return NumericStripMap(profile, u, eta, X, F, anchor, res, cr, bnd,
                           meta={"du": du, "mesh": mesh, "cr_residual_full": cr_full})


# ----------------------------------------------------------- estimates
def _quad(fn, a, b):
    if b < a:
        raise PreconditionError("u1 must not exceed u2")
    val, err = integrate.quad(fn, a, b, epsabs=0.0, epsrel=1e-10, limit=1000)
    if not math.isfinite(val):
        raise NumericError("quadrature failed")
    return val


def _check_u1(profile, u1):
    if u1 < profile.u_min - 1e-12:
        raise PreconditionError("u1 must be >= u_min")


def wars_IIIa_lower(profile: StripProfile, u1: float, u2: float) -> float:
    """pi * int du / theta; never exceeds X2 - X1 + 4 pi."""
    _check_u1(profile, u1)
    return math.pi * _quad(lambda t: 1.0 / profile.theta(t), u1, u2)


def _main_term(profile, u1, u2):
    return math.pi * _quad(lambda t: (1.0 + profile.psi(t, 1) ** 2) / profile.theta(t), u1, u2)


def _theta_term(profile, u1, u2):
    return _quad(lambda t: profile.theta(t, 1) ** 2 / profile.theta(t), u1, u2)


def slope_bound(profile, u1, u2, samples=4001):
    t = np.linspace(u1, u2, samples)
    return float(max(np.max(np.abs(profile.pm(t, 1))), np.max(np.abs(profile.pp(t, 1)))))


def wars_IVa_upper(profile: StripProfile, u1: float, u2: float, m: float) -> float:
    _check_u1(profile, u1)
    if slope_bound(profile, u1, u2) > m:
        raise PreconditionError(f"|phi'| exceeds m = {m} on [{u1}, {u2}]")
    return (_main_term(profile, u1, u2) + math.pi / 12.0 * _theta_term(profile, u1, u2)
            + 8.0 * math.pi * (1.0 + 4.0 / 3.0 * m * m))


def tail_gates(profile: StripProfile) -> dict:
    """Numerical checks of phi' -> 0, phi'' in L1 and psi' in L2 on the tail."""
    tail = np.geomspace(1e3, GATE_U, 64)
    out = {}
    ok = True
    for name, phi in (("minus", profile.phi_minus), ("plus", profile.phi_plus)):
        d1 = np.abs(phi[1](tail))
        d2 = tail_fit(lambda t, f=phi[2]: abs(float(f(t))))
        good = d1[-1] < 1e-3 and bool(np.all(np.diff(d1) <= 1e-15)) and d2.verdict == "convergent"
        out[name] = {"dphi_end": float(d1[-1]), "d2_tail": d2.verdict, "ok": good}
        ok &= good
    sq = tail_fit(lambda t: float(profile.psi(t, 1)) ** 2)
    out["psi_sq_tail"] = sq.verdict
    ok &= sq.verdict == "convergent"
    out["ok"] = bool(ok)
    return out


def wars_VI_lower(profile: StripProfile, u1: float, u2: float) -> float:
    _check_u1(profile, u1)
    gates = tail_gates(profile)
    if not gates["ok"]:
        raise PreconditionError(f"profile fails the tail gates: {gates}")
    return _main_term(profile, u1, u2) - math.pi / 4.0 * _theta_term(profile, u1, u2)


@dataclass(frozen=True)
class ImageCurve:
    y: float
    u: np.ndarray
    v: np.ndarray
    X: np.ndarray
    residual: np.ndarray  # f_y(u) - psi(u) - theta(u) y / pi

    @property
    def relative_residual(self):
        return self.residual / self.theta_values

    theta_values: np.ndarray = field(default=None)


def image_curve_Xiii(smap: NumericStripMap, y: float, u_grid) -> ImageCurve:
    u_grid = np.asarray(u_grid, dtype=float)
    v, X = smap.trace(y, u_grid)
    p = smap.profile
    th = p.theta(u_grid)
    res = v - p.psi(u_grid) - th * y / math.pi
    return ImageCurve(y, u_grid, v, X, res, th)


def core_increment(smap: NumericStripMap, u1: float, u2: float) -> float:
    """X2 - X1 between the core-curve points above u1 and u2."""
    return float(smap.core_X(np.array([u2]))[0] - smap.core_X(np.array([u1]))[0])
