#!/usr/bin/env python3
"""
numerics.py - the numerical kernel shared by every other module.

Univariate complex polynomials (CPoly) and their roots (RootSet), Sylvester
resultants and discriminants (including the projective form that survives a
degree drop), numeric elimination of one variable from a pair of bivariate
polynomials, finite-difference derivatives of scalar samplers and tracking of
polynomial roots along a real parameter.

Usage:
    roots = poly_roots(CPoly([-1, 0, 1]))          # G^2 - 1
    disc = discriminant(CPoly([-1, 0, 1]))         # 4
    track = root_track(lambda t: CPoly([-t, 0, 1]), np.linspace(-1, 1, 21))
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from numpy.polynomial import polynomial as P
from scipy.optimize import linear_sum_assignment

log = logging.getLogger(__name__)

INF = complex(np.inf, 0.0)


@dataclass(frozen=True)
class Tolerances:
    """Every numerical threshold of the workbench in one place."""

    lead_cutoff: float = 1e-12       # |a_n| below this * max|a| -> root at infinity
    cluster_radius: float = 1e-6     # roots closer than this * (1+|r|) are one multiple root
    collision_eps: float = 1e-5      # trajectory approach that counts as a collision
    real_eps: float = 1e-9           # |Im s| <= real_eps * (1+|s|) -> real root
    locus_tol: float = 1e-8          # accepted |caustic value| on an extracted locus point
    rank_cutoff: float = 1e-7        # singular values below this * s_max count as zero
    max_iter: int = 500              # Aberth iterations before the companion fallback
    seed: int = 0                    # starting-point rotation of the root finder


DEFAULT_TOL = Tolerances()


# --- Polynomials -------------------------------------------------------------


@dataclass
class CPoly:
    """Complex polynomial, coefficients in ascending degree.

    The length of ``coeffs`` fixes the nominal degree, so a family whose
    leading coefficient vanishes at some parameter keeps its degree and the
    lost roots are reported at infinity.
    """

    coeffs: np.ndarray

    def __post_init__(self) -> None:
        self.coeffs = np.atleast_1d(np.asarray(self.coeffs, dtype=complex))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    def trimmed(self, tol: Tolerances = DEFAULT_TOL) -> "CPoly":
        """Drop leading coefficients that are negligible next to the largest one."""
        scale = np.max(np.abs(self.coeffs)) if len(self.coeffs) else 0.0
        if scale == 0.0:
            return CPoly(self.coeffs[:1] * 0)
        n = len(self.coeffs)
        while n > 1 and abs(self.coeffs[n - 1]) < tol.lead_cutoff * scale:
            n -= 1
        return CPoly(self.coeffs[:n])

    def __call__(self, x):
        return P.polyval(x, self.coeffs)

    def derivative(self) -> "CPoly":
        if self.degree == 0:
            return CPoly([0.0])
        return CPoly(P.polyder(self.coeffs))


@dataclass
class Root:
    value: complex
    multiplicity: int = 1
    at_infinity: bool = False


@dataclass
class RootSet:
    roots: List[Root]
    degree: int

    def finite(self) -> List[Root]:
        return [r for r in self.roots if not r.at_infinity]

    def count(self) -> int:
        """Finite roots with multiplicity plus roots at infinity."""
        return sum(r.multiplicity for r in self.finite()) + sum(1 for r in self.roots if r.at_infinity)

    def expanded(self) -> np.ndarray:
        """One entry per root (multiple roots repeated, infinity as ``inf``)."""
        out: List[complex] = []
        for r in self.roots:
            out.extend([INF if r.at_infinity else r.value] * (1 if r.at_infinity else r.multiplicity))
        return np.array(out, dtype=complex)

    def has_multiple(self) -> bool:
        return any(r.multiplicity > 1 for r in self.finite())


# --- Root finding -------------------------------------------------------------


def _aberth(desc: np.ndarray, start: np.ndarray, tol: Tolerances) -> Tuple[np.ndarray, bool]:
    """Aberth-Ehrlich simultaneous iteration on a polynomial (descending coefficients)."""
    z = start.copy()
    n = len(z)
    ddesc = np.polyder(desc)
    for _ in range(tol.max_iter):
        p = np.polyval(desc, z)
        dp = np.polyval(ddesc, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(dp != 0, p / dp, p)
            diff = z[:, None] - z[None, :]
            diff[np.arange(n), np.arange(n)] = np.inf
            s = np.sum(1.0 / diff, axis=1)
            w = ratio / (1.0 - ratio * s)
        w = np.where(np.isfinite(w), w, 0.0)
        z = z - w
        if np.all(np.abs(w) <= 4 * np.finfo(float).eps * (1.0 + np.abs(z))):
            return z, True
        if not np.all(np.isfinite(z)):
            return z, False
    return z, bool(np.all(np.abs(np.polyval(desc, z)) <= 1e-10 * (1 + np.max(np.abs(desc)))))


def _polish(desc: np.ndarray, z: np.ndarray) -> np.ndarray:
    """Two Newton steps per root, kept only where they reduce the residual."""
    ddesc = np.polyder(desc)
    for _ in range(2):
        p = np.polyval(desc, z)
        dp = np.polyval(ddesc, z)
        with np.errstate(divide="ignore", invalid="ignore"):
            cand = z - p / dp
        better = np.isfinite(cand) & (np.abs(np.polyval(desc, cand)) < np.abs(p))
        z = np.where(better, cand, z)
    return z


def _split_radius(desc: np.ndarray, c: complex, m: int) -> float:
    """How far rounding of the coefficients scatters an m-fold root at c.

    A root of multiplicity m moves by (eps * |p|(c) / |p^(m)(c) / m!|)^(1/m)
    under relative coefficient perturbations of size eps.
    """
    n = len(desc) - 1
    size = np.sum(np.abs(desc) * abs(c) ** np.arange(n, -1, -1))
    lead = abs(np.polyval(np.polyder(desc, m), c)) / math.factorial(m)
    if lead == 0.0:
        return 0.0
    return (64 * np.finfo(float).eps * size / lead) ** (1.0 / m)


def _cluster(values: np.ndarray, radius: float, desc: Optional[np.ndarray] = None) -> List[Root]:
    """Group nearly coincident roots into one root with multiplicity.

    Roots within ``radius * (1 + |r|)`` are joined first. With ``desc`` given,
    groups are then merged while the merged group fits inside the scatter an
    m-fold root of ``desc`` would show, so a triple root found to ~eps^(1/3)
    is still reported once.
    """
    n = len(values)
    parent = list(range(n))

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            if abs(values[i] - values[j]) <= radius * (1.0 + max(abs(values[i]), abs(values[j]))):
                parent[find(i)] = find(j)
    found: dict = {}
    for i in range(n):
        found.setdefault(find(i), []).append(values[i])
    groups = [np.array(g, dtype=complex) for g in found.values()]

    while desc is not None and len(groups) > 1:
        best = None
        for i in range(len(groups)):
            for j in range(i + 1, len(groups)):
                merged = np.concatenate([groups[i], groups[j]])
                c = np.mean(merged)
                spread = np.max(np.abs(merged - c))
                limit = max(radius * (1.0 + abs(c)), _split_radius(desc, c, len(merged)))
                if spread <= limit and (best is None or spread < best[0]):
                    best = (spread, i, j)
        if best is None:
            break
        _, i, j = best
        groups[i] = np.concatenate([groups[i], groups.pop(j)])

    roots = [Root(complex(np.mean(g)), len(g)) for g in groups]
    roots.sort(key=lambda r: (round(r.value.real, 12), round(r.value.imag, 12)))
    return roots


def poly_roots(p: CPoly, tol: Tolerances = DEFAULT_TOL) -> RootSet:
    """All roots of ``p``; a degree drop is reported as roots at infinity."""
    if p.is_zero():
        raise ValueError("polynomial is identically zero")
    if p.degree < 1:
        raise ValueError("polynomial degree must be at least 1")
    t = p.trimmed(tol)
    n_inf = p.degree - t.degree
    roots: List[Root] = []
    if t.degree >= 1:
        desc = t.coeffs[::-1] / t.coeffs[-1]
        n = t.degree
        if n == 1:
            values = np.array([-desc[1]])
        else:
            centre = -desc[1] / n
            radius = 1.0 + np.max(np.abs(desc[1:]))
            phase = np.random.default_rng(tol.seed).uniform(0.0, 2 * np.pi)
            start = centre + radius * np.exp(1j * (phase + 0.4 + 2 * np.pi * np.arange(n) / n))
            values, ok = _aberth(desc, start, tol)
            if not ok:
                log.debug("Aberth did not converge for degree %d, using companion matrix", n)
                values = np.roots(desc)
            values = _polish(desc, values)
        roots = _cluster(values, tol.cluster_radius, desc)
    roots.extend(Root(INF, 1, True) for _ in range(n_inf))
    return RootSet(roots, p.degree)


# --- Resultants and discriminants ----------------------------------------------


def _sylvester_many(pd: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """Sylvester determinants for stacked descending coefficient rows.

    ``pd`` is (N, m+1) and ``qd`` is (N, n+1); the formal degrees m and n are
    taken from the shapes, leading zeros included.
    """
    pd = np.atleast_2d(pd)
    qd = np.atleast_2d(qd)
    m = pd.shape[1] - 1
    n = qd.shape[1] - 1
    size = m + n
    if size == 0:
        return np.ones(pd.shape[0], dtype=complex)
    S = np.zeros((pd.shape[0], size, size), dtype=complex)
    for r in range(n):
        S[:, r, r:r + m + 1] = pd
    for r in range(m):
        S[:, n + r, r:r + n + 1] = qd
    return np.linalg.det(S)


def resultant(p: CPoly, q: CPoly, tol: Tolerances = DEFAULT_TOL) -> complex:
    """Sylvester resultant of two univariate polynomials."""
    if p.is_zero() or q.is_zero():
        raise ValueError("resultant needs two nonzero polynomials")
    pt, qt = p.trimmed(tol), q.trimmed(tol)
    if pt.degree == 0 and qt.degree == 0:
        raise ValueError("resultant of two constants is undefined")
    return complex(_sylvester_many(pt.coeffs[::-1], qt.coeffs[::-1])[0])


_SHIFTS = np.array([0.0, 1.0, -1.0, 1j, -1j, 0.5, 2.0, 0.5 + 0.5j])


def _shift_matrix(n: int, s: complex) -> np.ndarray:
    """Matrix taking a_k to the coefficients of sum a_k x^k (1 + s x)^(n-k)."""
    M = np.zeros((n + 1, n + 1), dtype=complex)
    for k in range(n + 1):
        col = P.polymul(np.eye(1, k + 1, k)[0], P.polypow([1.0, s], n - k))
        M[: len(col), k] = col
    return M


def discriminant_many(coeffs: np.ndarray) -> np.ndarray:
    """Projective discriminants of stacked ascending coefficient rows (N, n+1).

    Each row is first moved by x -> x/(1+sx), a unimodular change of the
    projective line that leaves the discriminant unchanged, choosing the
    shift s that makes the leading coefficient largest. The value therefore
    stays well defined when the nominal leading coefficient vanishes.
    """
    coeffs = np.atleast_2d(np.asarray(coeffs, dtype=complex))
    n = coeffs.shape[1] - 1
    if n < 2:
        raise ValueError("discriminant needs degree >= 2")
    mats = [_shift_matrix(n, s) for s in _SHIFTS]
    moved = np.stack([coeffs @ M.T for M in mats])           # (S, N, n+1)
    best = np.argmax(np.abs(moved[:, :, -1]), axis=0)
    q = moved[best, np.arange(coeffs.shape[0])]
    lead = q[:, -1]
    dq = q[:, 1:] * np.arange(1, n + 1)
    res = _sylvester_many(q[:, ::-1], dq[:, ::-1])
    sign = (-1) ** (n * (n - 1) // 2)
    with np.errstate(divide="ignore", invalid="ignore"):
        disc = np.where(lead != 0, sign * res / lead, 0.0)
    return disc


def discriminant(p: CPoly) -> complex:
    """Discriminant of ``p`` at its nominal degree; zero iff a root is multiple."""
    if p.degree < 2:
        raise ValueError("discriminant needs degree >= 2")
    return complex(discriminant_many(p.coeffs[None, :])[0])


def _trim_2d(C: np.ndarray) -> np.ndarray:
    C = np.asarray(C, dtype=complex)
    rows = np.nonzero(np.any(C != 0, axis=1))[0]
    cols = np.nonzero(np.any(C != 0, axis=0))[0]
    if len(rows) == 0:
        return np.zeros((1, 1), dtype=complex)
    return C[: rows[-1] + 1, : cols[-1] + 1]


def eliminate(Pxy: np.ndarray, Qxy: np.ndarray) -> CPoly:
    """Eliminate y from two bivariate polynomials; returns Res_y as a CPoly in x.

    ``Pxy[i, j]`` is the coefficient of x^i y^j. The resultant is sampled at
    roots of unity and interpolated by FFT; its nominal degree is the Bezout
    bound deg_y(P) deg_x(Q) + deg_y(Q) deg_x(P).
    """
    A, B = _trim_2d(Pxy), _trim_2d(Qxy)
    if not np.any(A) or not np.any(B):
        raise ValueError("elimination needs two nonzero polynomials")
    ay, by = A.shape[1] - 1, B.shape[1] - 1
    if ay == 0 and by == 0:
        raise ValueError("neither polynomial involves the eliminated variable")
    ax, bx = A.shape[0] - 1, B.shape[0] - 1
    bound = ay * bx + by * ax
    nodes = np.exp(2j * np.pi * np.arange(bound + 1) / (bound + 1))
    pa = np.vander(nodes, ax + 1, increasing=True) @ A       # (N, ay+1) ascending in y
    pb = np.vander(nodes, bx + 1, increasing=True) @ B
    values = _sylvester_many(pa[:, ::-1], pb[:, ::-1])
    coeffs = np.fft.fft(values) / (bound + 1)
    scale = np.max(np.abs(coeffs)) if len(coeffs) else 0.0
    coeffs[np.abs(coeffs) < 1e-13 * scale] = 0.0
    return CPoly(coeffs)


def eliminate_symbolic(p: sp.Poly, q: sp.Poly, var: sp.Symbol) -> sp.Expr:
    """Exact resultant of two sympy polynomials with respect to ``var``."""
    return sp.expand(sp.resultant(p.as_expr(), q.as_expr(), var))


# --- Grids --------------------------------------------------------------------


@dataclass
class Grid4:
    """Regular grid in (t, x, y, z); natural units c = 1."""

    origin: Tuple[float, float, float, float]
    spacing: Tuple[float, float, float, float]
    extents: Tuple[int, int, int, int]

    def __post_init__(self) -> None:
        if len(self.origin) != 4 or len(self.spacing) != 4 or len(self.extents) != 4:
            raise ValueError("Grid4 needs four origin, spacing and extent values")
        if any(h <= 0 for h in self.spacing):
            raise ValueError("grid spacings must be positive")
        if any(int(n) < 1 for n in self.extents):
            raise ValueError("grid extents must be >= 1")
        self.extents = tuple(int(n) for n in self.extents)

    @classmethod
    def cube(cls, lo: float, hi: float, n: int, t: float = 0.0) -> "Grid4":
        """n^3 spatial nodes on [lo, hi]^3 at a single time t."""
        h = (hi - lo) / (n - 1)
        return cls((t, lo, lo, lo), (1.0, h, h, h), (1, n, n, n))

    def axis(self, k: int) -> np.ndarray:
        return self.origin[k] + self.spacing[k] * np.arange(self.extents[k])

    @property
    def shape(self) -> Tuple[int, int, int, int]:
        return self.extents

    def points(self) -> np.ndarray:
        """All nodes as an (N, 4) array in C order over (t, x, y, z)."""
        mesh = np.meshgrid(*[self.axis(k) for k in range(4)], indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def at_time(self, t: float) -> "Grid4":
        return Grid4((t,) + tuple(self.origin[1:]), self.spacing, (1,) + tuple(self.extents[1:]))

    def contains(self, pts: np.ndarray, margin: float = 0.0) -> np.ndarray:
        pts = np.atleast_2d(pts)
        ok = np.ones(len(pts), dtype=bool)
        for k in range(1, 4):
            lo = self.origin[k] - margin
            hi = self.origin[k] + self.spacing[k] * (self.extents[k] - 1) + margin
            ok &= (pts[:, k] >= lo) & (pts[:, k] <= hi)
        return ok


# --- Finite differences ---------------------------------------------------------


class StencilError(ArithmeticError):
    """A sampler failed at one of the finite-difference stencil points."""

    def __init__(self, point: np.ndarray, cause: Exception) -> None:
        super().__init__(f"sampler failed at stencil point {np.round(point, 12).tolist()}: {cause}")
        self.point = point


def default_step(X: np.ndarray) -> float:
    return 1e-3 * (1.0 + float(np.linalg.norm(np.asarray(X, dtype=float))))


def _sample(f: Callable, X: np.ndarray):
    try:
        return np.asarray(f(X), dtype=complex)
    except StencilError:
        raise
    except (ArithmeticError, ValueError, ZeroDivisionError) as exc:
        raise StencilError(X, exc) from exc


def _central(f: Callable, X: np.ndarray, h: float) -> np.ndarray:
    rows = []
    for mu in range(len(X)):
        e = np.zeros(len(X))
        e[mu] = h
        rows.append((_sample(f, X + e) - _sample(f, X - e)) / (2 * h))
    return np.stack(rows)


def fd_jacobian(f: Callable, X, h: Optional[float] = None, richardson: bool = False) -> np.ndarray:
    """Central-difference partials of a (possibly array-valued) sampler.

    Result has shape (4,) + shape of f(X); entry [mu] is d f / d x^mu.
    """
    X = np.asarray(X, dtype=float)
    h = default_step(X) if h is None else h
    if h <= 0:
        raise ValueError("finite-difference step must be positive")
    d1 = _central(f, X, h)
    if not richardson:
        return d1
    d2 = _central(f, X, h / 2)
    return (4 * d2 - d1) / 3


def fd_gradient(f: Callable, X, h: Optional[float] = None, richardson: bool = False) -> np.ndarray:
    """Four complex partials (d/dt, d/dx, d/dy, d/dz) of a scalar sampler."""
    return fd_jacobian(f, X, h, richardson).reshape(len(X))


def fd_second(f: Callable, X, h: Optional[float] = None, richardson: bool = False) -> np.ndarray:
    """Unmixed second partials d^2 f / (dx^mu)^2."""
    X = np.asarray(X, dtype=float)
    h = default_step(X) if h is None else h

    def second(step: float) -> np.ndarray:
        f0 = _sample(f, X)
        out = []
        for mu in range(len(X)):
            e = np.zeros(len(X))
            e[mu] = step
            out.append((_sample(f, X + e) - 2 * f0 + _sample(f, X - e)) / step**2)
        return np.array(out).reshape(len(X))

    d1 = second(h)
    if not richardson:
        return d1
    return (4 * second(h / 2) - d1) / 3


@dataclass
class ScalarField:
    """A complex scalar sampler, optionally carrying its analytic gradient."""

    value: Callable[[np.ndarray], complex]
    grad: Optional[Callable[[np.ndarray], np.ndarray]] = None

    def __call__(self, X) -> complex:
        return complex(self.value(np.asarray(X, dtype=float)))

    def gradient(self, X, h: Optional[float] = None, richardson: bool = True) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.grad is not None:
            return np.asarray(self.grad(X), dtype=complex)
        return fd_gradient(self, X, h, richardson)


def as_field(f) -> ScalarField:
    return f if isinstance(f, ScalarField) else ScalarField(f)


# --- Root tracking ----------------------------------------------------------------


def chordal(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Chordal distance on the Riemann sphere; infinity is an ordinary point."""
    a = np.asarray(a, dtype=complex)
    b = np.asarray(b, dtype=complex)
    ainf, binf = ~np.isfinite(a), ~np.isfinite(b)
    with np.errstate(invalid="ignore", over="ignore"):
        fin = np.abs(a - b) / np.sqrt((1 + np.abs(a) ** 2) * (1 + np.abs(b) ** 2))
        one_inf = 1.0 / np.sqrt(1 + np.where(ainf, np.abs(b), np.abs(a)) ** 2)
    out = np.where(ainf & binf, 0.0, np.where(ainf | binf, one_inf, fin))
    return np.nan_to_num(out, nan=1.0)


def match_roots(prev: np.ndarray, cur: np.ndarray) -> np.ndarray:
    """Permutation ``perm`` with cur[perm[k]] continuing prev[k].

    Optimal assignment for up to eight roots, greedy nearest pairs beyond.
    """
    cost = chordal(prev[:, None], cur[None, :])
    n = len(prev)
    if n <= 8:
        rows, cols = linear_sum_assignment(cost)
        perm = np.empty(n, dtype=int)
        perm[rows] = cols
        return perm
    perm = -np.ones(n, dtype=int)
    taken = np.zeros(n, dtype=bool)
    for flat in np.argsort(cost, axis=None):
        i, j = divmod(int(flat), n)
        if perm[i] < 0 and not taken[j]:
            perm[i] = j
            taken[j] = True
    return perm


@dataclass
class TrackEvent:
    t: float
    kind: str                       # "collision" or "degree drop"
    participants: Tuple[int, ...]
    location: complex = 0j


@dataclass
class Tracking:
    t: np.ndarray
    trajectories: np.ndarray        # (T, n), column k is trajectory k; inf where at infinity
    events: List[TrackEvent] = field(default_factory=list)
    discriminants: Optional[np.ndarray] = None


def _bisect_sign(fn: Callable[[float], float], a: float, b: float, fa: float) -> float:
    for _ in range(200):
        m = 0.5 * (a + b)
        if abs(b - a) <= 1e-14 * (1.0 + abs(m)):
            break
        fm = fn(m)
        if fm == 0.0:
            return m
        if np.sign(fm) == np.sign(fa):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _closest_pair(values: np.ndarray) -> Tuple[int, int, float]:
    n = len(values)
    best = (0, 1, np.inf)
    for i in range(n):
        for j in range(i + 1, n):
            d = float(chordal(values[i], values[j]))
            if d < best[2]:
                best = (i, j, d)
    return best


def root_track(
    family: Callable[[float], CPoly],
    t_grid: Sequence[float],
    tol: Tolerances = DEFAULT_TOL,
) -> Tracking:
    """Follow every root of ``family(t)`` over ``t_grid``.

    Consecutive samples are matched on the Riemann sphere. A collision event
    is emitted where the discriminant of a real family changes sign (refined
    by bisection) or, for complex families, where two trajectories come
    within ``collision_eps`` at a sample. A change in the number of finite
    roots emits a "degree drop" event and reseeds the labels.
    """
    t_grid = np.asarray(t_grid, dtype=float)
    if len(t_grid) < 2:
        raise ValueError("root tracking needs at least two samples")
    steps = np.diff(t_grid)
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise ValueError("t_grid must be strictly monotone")

    polys = [family(float(t)) for t in t_grid]
    n = polys[0].degree
    if any(p.degree != n for p in polys):
        raise ValueError("family must keep its nominal degree")
    traj = np.empty((len(t_grid), n), dtype=complex)
    events: List[TrackEvent] = []
    finite_count = []
    for k, p in enumerate(polys):
        vals = poly_roots(p, tol).expanded()
        finite_count.append(int(np.sum(np.isfinite(vals))))
        if k == 0:
            traj[0] = vals
            continue
        if finite_count[k] != finite_count[k - 1]:
            events.append(TrackEvent(float(t_grid[k]), "degree drop", tuple(range(n))))
            log.debug("degree drop at t=%g, reseeding labels", t_grid[k])
            traj[k] = vals
            continue
        traj[k] = vals[match_roots(traj[k - 1], vals)]

    discs = None
    if n >= 2:
        discs = np.array([discriminant(p) for p in polys])
        real_family = np.all(np.abs(discs.imag) <= 1e-12 * (1.0 + np.abs(discs)))
        if real_family:
            events.extend(_real_collisions(family, t_grid, traj, discs.real, tol))
        else:
            for k in range(len(t_grid)):
                i, j, d = _closest_pair(traj[k])
                if d <= tol.collision_eps:
                    events.append(TrackEvent(float(t_grid[k]), "collision", (i, j), traj[k, i]))
    events.sort(key=lambda e: e.t if steps[0] > 0 else -e.t)
    log.debug("tracked %d roots over %d samples, %d events", n, len(t_grid), len(events))
    return Tracking(t_grid, traj, events, discs)


def _real_collisions(family, t_grid, traj, d, tol: Tolerances) -> List[TrackEvent]:
    scale = 1.0 + np.max(np.abs(d))
    s = np.where(np.abs(d) <= 1e-14 * scale, 0.0, np.sign(d))
    out: List[TrackEvent] = []

    def disc_at(t: float) -> float:
        return discriminant(family(t)).real

    def emit(t_star: float, k: int) -> None:
        vals = poly_roots(family(t_star), tol).expanded()
        _, _, gap = _closest_pair(vals)
        if gap > np.sqrt(tol.collision_eps):
            return
        i, j, _ = _closest_pair(traj[k])
        loc = 0.5 * (traj[k, i] + traj[k, j])
        out.append(TrackEvent(float(t_star), "collision", (i, j), complex(loc)))

    for k in range(len(t_grid)):
        if s[k] == 0.0:
            left = s[k - 1] if k > 0 else 0.0
            right = s[k + 1] if k + 1 < len(t_grid) else 0.0
            if left * right < 0:
                emit(float(t_grid[k]), k)
        elif k + 1 < len(t_grid) and s[k] * s[k + 1] < 0:
            t_star = _bisect_sign(disc_at, float(t_grid[k]), float(t_grid[k + 1]), float(d[k]))
            emit(t_star, k)
    return out
