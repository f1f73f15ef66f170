#!/usr/bin/env python3
"""
uwl.py - one worldline seen as many particles.

An observer at X sees the worldline x(s) wherever X - x(s) is null, i.e. at
the roots s of the light-cone polynomial det(X - x(s)). Each root is a
"duplicon": real roots are R particles, conjugate pairs are C particles.
Moving the observer along its own worldline makes the roots move; R/C
transitions are annihilations and creations, coincident roots are merges.
Sums over the complete root set obey Vieta-type conservation laws for
inertial observers.

The same bookkeeping applies to implicit systems F_a(t, x, y, z) = 0,
solved at each time by iterated resultants.

Usage:
    wl = PolyWorldline.from_text(["s", "0", "0", "0"])
    duplicons(wl, (5, 0, 0, 1))                   # s = 4, 6 (both R)
    run = evolve(wl, PolyWorldline.from_text(["s", "0", "0", "1"]), np.linspace(0, 10, 200))
    report = conservation_report(run)
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from numpy.polynomial import polynomial as P
from scipy import linalg
from scipy.cluster.hierarchy import fcluster, linkage
from scipy.spatial.distance import pdist, squareform

import polygrammar
from biquat_core import complex_point
from numerics import DEFAULT_TOL, CPoly, Tolerances, TrackEvent, Tracking, poly_roots, root_track

log = logging.getLogger(__name__)

MAX_WL_DEGREE = 6
MAX_IMPLICIT_DEGREE = 4


class ObserverOnWorldlineError(ArithmeticError):
    pass


class NotOnLightConeError(ArithmeticError):
    pass


class CoincidentPointError(ArithmeticError):
    pass


class NonGenericSystemError(ArithmeticError):
    pass


# --- Worldlines -----------------------------------------------------------------------


@dataclass
class PolyWorldline:
    """x^mu(s) as four ascending coefficient arrays (complex allowed)."""

    coords: List[np.ndarray]
    texts: Tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.coords) != 4:
            raise ValueError("a worldline needs four coordinate polynomials")
        self.coords = [np.trim_zeros(np.atleast_1d(np.asarray(c, dtype=complex)), "b") for c in self.coords]
        self.coords = [c if len(c) else np.zeros(1, dtype=complex) for c in self.coords]
        if self.degree > MAX_WL_DEGREE:
            raise ValueError(f"worldline degree {self.degree} exceeds {MAX_WL_DEGREE}")
        if self.degree == 0:
            raise ValueError("worldline is a single point: every coordinate is constant")

    @classmethod
    def from_text(cls, texts: Sequence[str]) -> "PolyWorldline":
        coords = []
        s = sp.Symbol("s")
        for text in texts:
            poly = sp.Poly(polygrammar.parse_expr(text, polygrammar.WORLDLINE), s)
            coords.append(np.array([complex(c) for c in reversed(poly.all_coeffs())]))
        return cls(coords, tuple(texts))

    @classmethod
    def inertial(cls, start, velocity) -> "PolyWorldline":
        """Observer x(tau) = start + tau * (1, velocity)."""
        start = np.asarray(start, dtype=float)
        vel = np.concatenate([[1.0], np.asarray(velocity, dtype=float)])
        return cls([np.array([start[k], vel[k]]) for k in range(4)])

    @property
    def degree(self) -> int:
        return max(len(c) - 1 for c in self.coords)

    def is_real(self) -> bool:
        return all(np.all(c.imag == 0) for c in self.coords)

    def at(self, s) -> np.ndarray:
        return np.array([P.polyval(s, c) for c in self.coords])

    def velocity(self, s) -> np.ndarray:
        return np.array([P.polyval(s, P.polyder(c)) if len(c) > 1 else 0j * s for c in self.coords])


def lce_polynomial(wl: PolyWorldline, X) -> CPoly:
    """(t - x0(s))^2 - sum_a (x_a - x_a(s))^2 as a polynomial in s."""
    X = np.asarray(X, dtype=complex)
    n = 2 * wl.degree + 1
    out = np.zeros(n, dtype=complex)
    for mu, sign in enumerate((1, -1, -1, -1)):
        d = P.polysub([X[mu]], wl.coords[mu])
        sq = P.polymul(d, d)
        out[: len(sq)] += sign * sq
    scale = max(1.0, float(np.max(np.abs(X))), max(float(np.max(np.abs(c))) for c in wl.coords))
    if np.all(np.abs(out) <= 1e-14 * scale**2):
        raise ObserverOnWorldlineError(f"observer on worldline: light-cone polynomial vanishes identically at {X.tolist()}")
    return CPoly(out)


@dataclass
class Duplicon:
    sigma: complex
    cls: str                             # "R" or "C"
    position: np.ndarray
    velocity: np.ndarray
    multiplicity: int = 1


def classify(sigma: complex, eps_real: float) -> str:
    return "R" if abs(sigma.imag) <= eps_real * (1.0 + abs(sigma)) else "C"


def duplicons(wl: PolyWorldline, X, eps_real: Optional[float] = None, tol: Tolerances = DEFAULT_TOL) -> List[Duplicon]:
    """Every finite root of the light-cone polynomial, classified R or C."""
    eps = tol.real_eps if eps_real is None else eps_real
    roots = poly_roots(lce_polynomial(wl, X), tol)
    out = []
    for r in roots.finite():
        out.append(Duplicon(r.value, classify(r.value, eps), wl.at(r.value), wl.velocity(r.value), r.multiplicity))
    return out


def twistor_of_duplicon(wl: PolyWorldline, X, sigma: complex) -> np.ndarray:
    """Unit spinor xi with (X - x(sigma)) xi = 0, first nonzero component real positive."""
    d = np.asarray(X, dtype=complex) - wl.at(sigma)
    M = complex_point(*d).m
    norm = np.linalg.norm(M)
    if norm <= 1e-12:
        raise CoincidentPointError(f"coincident point: observer sits on the worldline at s={sigma}")
    if abs(np.linalg.det(M)) > 1e-8 * (1.0 + norm**2):
        raise NotOnLightConeError(f"not on light cone: det = {np.linalg.det(M):.3g} at s={sigma}")
    _, _, vh = linalg.svd(M)
    xi = vh[-1].conj()
    xi = xi / np.linalg.norm(xi)
    lead = xi[0] if abs(xi[0]) > 1e-12 else xi[1]
    return xi * (abs(lead) / lead)


# --- Evolution -------------------------------------------------------------------------


@dataclass
class Event:
    time: float
    kind: str                            # "annihilation", "creation" or "merge"
    participants: Tuple[int, ...]
    location: complex


@dataclass
class Photon:
    """Null ray from a merge point on the worldline to the observer event."""

    time: float
    sigma: complex
    source: np.ndarray
    observer: np.ndarray
    interval: complex                    # det(observer - source), zero for a null ray


@dataclass
class Evolution:
    wl: PolyWorldline
    observer: PolyWorldline
    taus: np.ndarray
    tracking: Tracking
    classes: np.ndarray                  # (T, n) "R"/"C"/"inf"
    events: List[Event] = field(default_factory=list)
    photons: List[Photon] = field(default_factory=list)
    flags: List[str] = field(default_factory=list)
    eps_real: float = DEFAULT_TOL.real_eps

    @property
    def trajectories(self) -> np.ndarray:
        return self.tracking.trajectories

    def positions(self) -> np.ndarray:
        """(T, n, 4) duplicon positions x(s) along the run (nan at infinity)."""
        traj = self.trajectories
        out = np.full(traj.shape + (4,), np.nan + 0j)
        ok = np.isfinite(traj)
        out[ok] = np.array([self.wl.at(s) for s in traj[ok]]).reshape(-1, 4)
        return out


def _class_row(values: np.ndarray, eps: float) -> np.ndarray:
    return np.array(["inf" if not np.isfinite(v) else classify(v, eps) for v in values], dtype=object)


def _classify_event(family: Callable[[float], CPoly], ev: TrackEvent, dt: float, eps: float, tol: Tolerances) -> str:
    before = poly_roots(family(ev.t - 0.25 * dt), tol).expanded()
    after = poly_roots(family(ev.t + 0.25 * dt), tol).expanded()
    r_before = int(np.sum(_class_row(before, eps) == "R"))
    r_after = int(np.sum(_class_row(after, eps) == "R"))
    if r_after < r_before:
        return "annihilation"
    if r_after > r_before:
        return "creation"
    return "merge"


def classify_events(family, tracking: Tracking, eps: float, tol: Tolerances) -> List[Event]:
    dt = float(np.min(np.abs(np.diff(tracking.t))))
    out = []
    for ev in tracking.events:
        if ev.kind == "degree drop":
            out.append(Event(ev.t, "degree drop", ev.participants, ev.location))
            continue
        sign = 1.0 if tracking.t[-1] > tracking.t[0] else -1.0
        kind = _classify_event(family, TrackEvent(ev.t, ev.kind, ev.participants), sign * dt, eps, tol)
        out.append(Event(ev.t, kind, ev.participants, ev.location))
    return out


def evolve(wl: PolyWorldline, observer: PolyWorldline, taus, tol: Tolerances = DEFAULT_TOL) -> Evolution:
    """Track the duplicons seen by ``observer`` along its worldline."""
    taus = np.asarray(taus, dtype=float)
    flags = []
    if observer.degree >= 2:
        flags.append("accelerated observer: conservation is diagnostic only")

    def family(tau: float) -> CPoly:
        return lce_polynomial(wl, observer.at(tau))

    tracking = root_track(family, taus, tol)
    classes = np.array([_class_row(row, tol.real_eps) for row in tracking.trajectories])
    for k, tau in enumerate(taus):
        X = observer.at(tau)
        for s in tracking.trajectories[k]:
            if np.isfinite(s) and np.linalg.norm(X - wl.at(s)) <= 1e-6 * (1.0 + np.linalg.norm(X)):
                if "observer on worldline" not in flags:
                    flags.append("observer on worldline")
    events = classify_events(family, tracking, tol.real_eps, tol)
    photons = []
    for ev in events:
        if ev.kind == "degree drop":
            continue
        X = observer.at(ev.time)
        sigma = _merge_point(family(ev.time), ev.location, tol)
        src = wl.at(sigma)
        photons.append(Photon(ev.time, sigma, src, X, complex_point_interval(X - src)))
    log.info("evolve: %d samples, %d events, flags=%s", len(taus), len(events), flags)
    return Evolution(wl, observer, taus, tracking, classes, events, photons, flags, tol.real_eps)


def _merge_point(L: CPoly, guess: complex, tol: Tolerances) -> complex:
    """Midpoint of the closest root pair of L near ``guess``."""
    vals = np.array([r.value for r in poly_roots(L, tol).finite() for _ in range(r.multiplicity)])
    if len(vals) < 2:
        return guess
    d = np.abs(vals[:, None] - vals[None, :]) + np.diag(np.full(len(vals), np.inf))
    d += np.abs(vals[:, None] - guess)
    i, j = np.unravel_index(np.argmin(d), d.shape)
    return complex(0.5 * (vals[i] + vals[j]))


def complex_point_interval(d) -> complex:
    d = np.asarray(d, dtype=complex)
    return complex(d[0] ** 2 - d[1] ** 2 - d[2] ** 2 - d[3] ** 2)


# --- Conservation ----------------------------------------------------------------------


@dataclass
class ConservationReport:
    taus: np.ndarray
    momentum: np.ndarray                 # (T, 4)  sum of xdot
    angular_momentum: np.ndarray         # (T, 4, 4) sum of xdot^m x^n - xdot^n x^m
    energy: np.ndarray                   # (T,) sum of xdot.xdot / 2, bilinear over all four components
    momentum_real: np.ndarray            # R-duplicon subtotals
    angular_momentum_real: np.ndarray
    deviations: Dict[str, float]
    complete: bool
    conservative: bool
    flags: List[str]
    eps_real: float
    notes: Tuple[str, ...] = ("energy is the interpretation sum of xdot.xdot / 2 over t, x, y, z without conjugation",)

    @property
    def max_deviation(self) -> float:
        return max(self.deviations["momentum"], self.deviations["angular_momentum"])


def _relative_spread(series: np.ndarray) -> float:
    flat = series.reshape(len(series), -1)
    ok = np.all(np.isfinite(flat), axis=1)
    if not np.any(ok):
        return float("nan")
    flat = flat[ok]
    return float(np.max(np.abs(flat - flat[0])) / (1.0 + np.max(np.abs(flat))))


def conservation_report(run: Evolution, tol: Tolerances = DEFAULT_TOL) -> ConservationReport:
    """Vieta-type sums over the complete root set at every tau.

    Velocities use ds/dtau = -L_tau / L_s of the light-cone polynomial L.
    Energy sums xdot.xdot / 2 over all four components with no conjugation,
    so it stays a symmetric polynomial in the roots like the other sums.
    """
    wl, obs = run.wl, run.observer
    T, n = run.trajectories.shape
    mom = np.zeros((T, 4), dtype=complex)
    ang = np.zeros((T, 4, 4), dtype=complex)
    energy = np.zeros(T, dtype=complex)
    mom_r = np.zeros((T, 4), dtype=complex)
    ang_r = np.zeros((T, 4, 4), dtype=complex)
    complete = True
    flags = list(run.flags)
    for k, tau in enumerate(run.taus):
        X = obs.at(tau)
        Xdot = obs.velocity(tau)
        L = lce_polynomial(wl, X)
        dL = L.derivative()
        for s in run.trajectories[k]:
            if not np.isfinite(s):
                complete = False
                continue
            x = wl.at(s)
            xp = wl.velocity(s)
            L_s = dL(s)
            L_tau = 2 * complex(np.sum(np.array([1, -1, -1, -1]) * (X - x) * Xdot))
            if abs(L_s) <= 1e-12 * (1.0 + np.max(np.abs(L.coeffs))):
                mom[k] = ang[k] = energy[k] = np.nan
                break
            xdot = xp * (-L_tau / L_s)
            m = np.outer(xdot, x) - np.outer(x, xdot)
            mom[k] += xdot
            ang[k] += m
            energy[k] += 0.5 * np.sum(xdot * xdot)
            if classify(s, run.eps_real) == "R":
                mom_r[k] += xdot
                ang_r[k] += m
    deviations = {
        "momentum": _relative_spread(mom),
        "angular_momentum": _relative_spread(ang),
        "energy": _relative_spread(energy),
    }
    if not complete:
        flags.append("incomplete: roots at infinity were left out")
    conservative = obs.degree <= 1 and complete
    log.info("conservation: deviations %s (eps_real=%g)", {k: f"{v:.3g}" for k, v in deviations.items()}, run.eps_real)
    return ConservationReport(run.taus, mom, ang, energy, mom_r, ang_r, deviations, complete, conservative, flags, run.eps_real)


# --- Implicit systems ---------------------------------------------------------------------


_T, _X, _Y, _Zs = sp.symbols("t x y z")


@dataclass
class ImplicitRoot:
    point: np.ndarray                    # (x, y, z) complex
    cls: str
    residual: float


class ImplicitUWL:
    """Three polynomials F_a(t, x, y, z); their common roots at fixed t are the particles."""

    def __init__(self, polys: Sequence[sp.Poly], texts: Sequence[str] = ()) -> None:
        if len(polys) != 3:
            raise ValueError("an implicit system needs exactly three polynomials")
        self.exprs = [sp.expand(p.as_expr()) for p in polys]
        for e in self.exprs:
            if e == 0:
                raise ValueError("implicit system member is identically zero")
            if sp.Poly(e, _T, _X, _Y, _Zs).total_degree() > MAX_IMPLICIT_DEGREE:
                raise ValueError(f"implicit system member exceeds total degree {MAX_IMPLICIT_DEGREE}")
        self.texts = tuple(texts) or tuple(str(e) for e in self.exprs)
        self._funcs = sp.lambdify((_T, _X, _Y, _Zs), self.exprs, "numpy")

    @classmethod
    def from_text(cls, texts: Sequence[str]) -> "ImplicitUWL":
        return cls([polygrammar.parse_polynomial(t, polygrammar.IMPLICIT) for t in texts], texts)

    def residual(self, t: float, p) -> float:
        return float(np.max(np.abs(np.array(self._funcs(t, *p), dtype=complex))))

    @cached_property
    def elimination(self) -> Tuple[sp.Expr, List[sp.Expr], List[sp.Expr]]:
        """(eliminant in t and x, back-substitution polys for y, for z)."""
        remaining, back_z = _eliminate_var(self.exprs, _Zs)
        remaining, back_y = _eliminate_var(remaining, _Y)
        uni = [e for e in remaining if sp.Poly(e, _X).degree() > 0]
        if not uni:
            raise NonGenericSystemError("non-generic system: nothing left to solve for x")
        g = uni[0]
        for e in uni[1:]:
            g = sp.gcd(g, e)
        if sp.Poly(g, _X).degree() <= 0:
            raise NonGenericSystemError("non-generic system: eliminants share no factor in x")
        if not back_y or not back_z:
            raise NonGenericSystemError("non-generic system: a coordinate is left free")
        return sp.expand(g), back_y, back_z

    def eliminant(self, t: float) -> CPoly:
        g, _, _ = self.elimination
        return _numeric_univariate(g, _X, {_T: t})


def _eliminate_var(exprs: List[sp.Expr], var: sp.Symbol) -> Tuple[List[sp.Expr], List[sp.Expr]]:
    with_var = [e for e in exprs if sp.Poly(e, var).degree() > 0]
    without = [e for e in exprs if sp.Poly(e, var).degree() <= 0]
    if len(with_var) <= 1:
        return without, with_var
    base = with_var[0]
    out = list(without)
    for other in with_var[1:]:
        r = sp.expand(sp.resultant(base, other, var))
        if r == 0:
            raise NonGenericSystemError(f"non-generic system: resultant in {var} vanishes identically")
        out.append(r)
    return out, with_var


def _numeric_univariate(expr: sp.Expr, var: sp.Symbol, values: Dict[sp.Symbol, complex]) -> CPoly:
    poly = sp.Poly(expr, var)
    coeffs = [complex(sp.N(c.subs(values))) for c in reversed(poly.all_coeffs())]
    return CPoly(coeffs)


def _solve_back(polys: List[sp.Expr], var: sp.Symbol, values: Dict[sp.Symbol, complex], tol: Tolerances) -> List[complex]:
    for e in polys:
        p = _numeric_univariate(e, var, values).trimmed(tol)
        if p.is_zero() or p.degree == 0:
            continue
        return [r.value for r in poly_roots(p, tol).finite()]
    return []


def implicit_roots(system: ImplicitUWL, t: float, tol: Tolerances = DEFAULT_TOL) -> List[ImplicitRoot]:
    """All (x, y, z) with F_a(t, x, y, z) = 0, verified to 1e-8."""
    g, back_y, back_z = system.elimination
    uni = system.eliminant(t).trimmed(tol)
    if uni.is_zero():
        raise NonGenericSystemError(f"non-generic system: eliminant vanishes at t={t}")
    if uni.degree == 0:
        return []
    out: List[ImplicitRoot] = []
    for rx in poly_roots(uni, tol).finite():
        for ry in _solve_back(back_y, _Y, {_T: t, _X: rx.value}, tol):
            for rz in _solve_back(back_z, _Zs, {_T: t, _X: rx.value, _Y: ry}, tol):
                p = np.array([rx.value, ry, rz])
                res = system.residual(t, p)
                if res <= 1e-8 and not any(np.allclose(p, q.point, atol=1e-9) for q in out):
                    cls = "R" if np.all(np.abs(p.imag) <= tol.real_eps * (1.0 + np.abs(p))) else "C"
                    out.append(ImplicitRoot(p, cls, res))
    return out


@dataclass
class ImplicitTrack:
    tracking: Tracking
    events: List[Event]


def implicit_track(system: ImplicitUWL, t_grid, tol: Tolerances = DEFAULT_TOL) -> ImplicitTrack:
    """Follow the x-roots of the eliminant over time and name the R/C transitions."""
    _ = system.elimination
    tracking = root_track(system.eliminant, t_grid, tol)
    events = classify_events(system.eliminant, tracking, tol.real_eps, tol)
    log.info("implicit track: %d events", len(events))
    return ImplicitTrack(tracking, events)


# --- Clustering ----------------------------------------------------------------------


@dataclass
class ClusterMetrics:
    min_distance: np.ndarray             # (T,)
    nearest: np.ndarray                  # (T, n)
    pair_count: np.ndarray               # (T,)
    cluster_count: np.ndarray            # (T,)
    radius: float
    pair_threshold: float


def cluster_metrics(positions, radius: float = 0.5, pair_threshold: Optional[float] = None) -> ClusterMetrics:
    """Pairing and single-linkage clustering of duplicon positions per tau.

    ``positions`` is (T, n, d), real or complex; complex coordinates are
    split into real and imaginary parts. Rows with non-finite entries are
    ignored at that tau.
    """
    pos = np.asarray(positions)
    if pos.ndim == 2:
        pos = pos[None]
    if np.iscomplexobj(pos):
        pos = np.concatenate([pos.real, pos.imag], axis=-1)
    thr = radius if pair_threshold is None else pair_threshold
    T, n, _ = pos.shape
    min_d = np.full(T, np.inf)
    nearest = np.full((T, n), np.inf)
    pairs = np.zeros(T, dtype=int)
    clusters = np.zeros(T, dtype=int)
    for k in range(T):
        ok = np.all(np.isfinite(pos[k]), axis=1)
        pts = pos[k][ok]
        if len(pts) < 2:
            clusters[k] = len(pts)
            continue
        d = pdist(pts)
        D = squareform(d)
        np.fill_diagonal(D, np.inf)
        nearest[k, np.nonzero(ok)[0]] = D.min(axis=1)
        min_d[k] = d.min()
        pairs[k] = int(np.sum(d <= thr))
        clusters[k] = int(fcluster(linkage(pts, method="single"), t=radius, criterion="distance").max())
    return ClusterMetrics(min_d, nearest, pairs, clusters, radius, thr)
