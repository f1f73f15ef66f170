#!/usr/bin/env python3
"""
caustics.py - where congruence branches merge.

For a projective generating function the caustic value at a point is the
discriminant of the reduced polynomial in G. On a real spatial slice the
caustic is (generically) a curve, found by seeding Gauss-Newton from cells
where both Re and Im of the value change sign, or where |value| has a local
minimum. For a generating pair the singular points solve Pi^1 = Pi^2 = 0
together with det P = 0 (P the total derivative in xi); the generating string
Z^ = -T^-1 dPi/dxi lies on the complex null cone of each such point.

Usage:
    frame = extract_locus(GenFuncProjective.from_text("G*t1 - t2 + 2i*G"),
                          Grid4.cube(-2, 2, 32))
    radii = np.hypot(frame.points[:, 1], frame.points[:, 2])   # ~1
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import linalg
from scipy.ndimage import minimum_filter
from scipy.spatial import cKDTree

from biquat_core import as_matrix, complex_point, hermitian_of_point, norm_det
from congruence import GenFuncPair, GenFuncProjective, reduce_at_point, solve_bispinor
from numerics import DEFAULT_TOL, Grid4, Tolerances, discriminant, discriminant_many

log = logging.getLogger(__name__)


class StringUndefinedError(ArithmeticError):
    """dPi/dtau is singular, so the generating string has no value."""


@dataclass
class LocusFrame:
    t: float
    points: np.ndarray                   # (M, 4) rows (t, x, y, z)
    residuals: np.ndarray                # (M,) |caustic value| after refinement
    locus_tol: float = DEFAULT_TOL.locus_tol

    def __len__(self) -> int:
        return len(self.points)


@dataclass
class GeneratingStringPoint:
    zhat: np.ndarray                     # 2x2 complex
    source: Optional[np.ndarray] = None  # the point Z it was computed at
    xi: Optional[np.ndarray] = None


@dataclass
class PairSingularFrame(LocusFrame):
    spinors: np.ndarray = field(default_factory=lambda: np.zeros((0, 2), dtype=complex))
    strings: List[GeneratingStringPoint] = field(default_factory=list)
    null_cone: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=complex))


# --- Projective generating functions -------------------------------------------------


def caustic_value(pi: GenFuncProjective, X) -> complex:
    """Discriminant of the reduced polynomial in G; zero on the caustic."""
    return discriminant(reduce_at_point(pi, X))


def caustic_values(pi: GenFuncProjective, pts: np.ndarray) -> np.ndarray:
    """Vectorised caustic values at (N, 4) points (degenerate points give 0)."""
    return discriminant_many(pi.coeffs_at(np.asarray(pts, dtype=float)))


def _gauss_newton(fn, p0: np.ndarray, n_free: int, tol: Tolerances, max_iter: int = 100) -> np.ndarray:
    """Minimum-norm Gauss-Newton on real residual vectors, vectorised over rows.

    ``fn`` maps (N, n_free) real parameters to (N, m) real residuals.
    """
    p = p0.copy()
    active = np.ones(len(p), dtype=bool)
    for _ in range(max_iter):
        if not np.any(active):
            break
        q = p[active]
        r = fn(q)
        done = np.max(np.abs(r), axis=1) <= tol.locus_tol * 1e-4
        step = 1e-6 * (1.0 + np.max(np.abs(q), axis=1))
        J = np.empty((len(q), r.shape[1], n_free))
        for k in range(n_free):
            e = np.zeros(n_free)
            e[k] = 1.0
            J[:, :, k] = (fn(q + step[:, None] * e) - fn(q - step[:, None] * e)) / (2 * step[:, None])
        delta = np.einsum("nij,nj->ni", np.linalg.pinv(J, rcond=1e-12), r)
        delta[~np.isfinite(delta)] = 0.0
        q = q - np.where(done[:, None], 0.0, delta)
        p[active] = q
        idx = np.nonzero(active)[0]
        active[idx[done | (np.max(np.abs(delta), axis=1) <= 1e-15 * (1.0 + np.max(np.abs(q), axis=1)))]] = False
    return p


def _dedupe(points: np.ndarray, residuals: np.ndarray, radius: float) -> np.ndarray:
    """Indices of the points kept when near neighbours (spatial distance < radius) merge into the best one."""
    if len(points) == 0:
        return np.zeros(0, dtype=int)
    order = np.argsort(residuals, kind="stable")
    tree = cKDTree(points[:, 1:4])
    dropped = np.zeros(len(points), dtype=bool)
    keep = []
    for i in order:
        if dropped[i]:
            continue
        keep.append(i)
        for j in tree.query_ball_point(points[i, 1:4], radius):
            dropped[j] = True
    return np.sort(np.array(keep, dtype=int))


def _seed_cells(values: np.ndarray, shape) -> np.ndarray:
    """Flat indices of cell corners where both Re and Im change sign, or |value| is a local minimum."""
    V = values.reshape(shape)
    floor = 1e-13 * (1.0 + np.abs(V))
    re = np.where(np.abs(V.real) <= floor, 0.0, np.sign(V.real))
    im = np.where(np.abs(V.imag) <= floor, 0.0, np.sign(V.imag))
    seeds = set()
    nx, ny, nz = shape
    # a cell is named by its lowest corner
    if min(shape) >= 2:
        def spread(S):
            corners = [S[a:nx - 1 + a, b:ny - 1 + b, c:nz - 1 + c] for a in (0, 1) for b in (0, 1) for c in (0, 1)]
            stack = np.stack(corners)
            return (stack.max(axis=0) > 0) & (stack.min(axis=0) < 0) | np.any(stack == 0, axis=0)

        both = spread(re) & spread(im)
        for i, j, k in zip(*np.nonzero(both)):
            seeds.add(int(np.ravel_multi_index((i, j, k), shape)))
    mag = np.abs(V)
    minima = (mag == minimum_filter(mag, size=3, mode="nearest"))
    for flat in np.flatnonzero(minima):
        seeds.add(int(flat))
    return np.array(sorted(seeds), dtype=int)


def extract_locus(pi: GenFuncProjective, grid: Grid4, t: Optional[float] = None, tol: Tolerances = DEFAULT_TOL) -> LocusFrame:
    """Caustic points of ``pi`` in the spatial slice of ``grid`` at time t.

    Every returned point satisfies |caustic value| <= locus_tol and lies in
    the grid's bounding box; points closer than a quarter grid spacing are
    merged.
    """
    t = grid.origin[0] if t is None else t
    g = grid.at_time(t)
    pts = g.points()
    shape = g.shape[1:]
    values = caustic_values(pi, pts)
    seeds = _seed_cells(values, shape)
    if len(seeds) == 0:
        return LocusFrame(t, np.zeros((0, 4)), np.zeros(0), tol.locus_tol)
    h = np.asarray(g.spacing[1:])
    start = pts[seeds, 1:]

    def residual(q: np.ndarray) -> np.ndarray:
        full = np.column_stack([np.full(len(q), t), q])
        d = caustic_values(pi, full)
        return np.column_stack([d.real, d.imag])

    refined = _gauss_newton(residual, start, 3, tol)
    full = np.column_stack([np.full(len(refined), t), refined])
    res = np.abs(caustic_values(pi, full))
    ok = np.isfinite(res) & (res <= tol.locus_tol) & g.contains(full)
    keep = _dedupe(full[ok], res[ok], float(np.min(h)) / 4)
    points, residuals = full[ok][keep], res[ok][keep]
    log.info("locus at t=%g: %d seeds, %d points", t, len(seeds), len(points))
    return LocusFrame(float(t), points, residuals, tol.locus_tol)


def track_locus(pi: GenFuncProjective, grid: Grid4, times: Sequence[float], tol: Tolerances = DEFAULT_TOL) -> List[LocusFrame]:
    return [extract_locus(pi, grid, float(t), tol) for t in times]


# --- Generating pairs -------------------------------------------------------------


def generating_string(pair: GenFuncPair, Z, xi) -> GeneratingStringPoint:
    """Z^ = -T^-1 dPi/dxi with T = dPi/dtau, evaluated along tau = Z xi."""
    Z = as_matrix(Z)
    xi = np.asarray(xi, dtype=complex)
    tau = Z @ xi
    T = pair.d_tau(xi, tau)
    if abs(np.linalg.det(T)) <= 1e-12 * (1.0 + np.sum(np.abs(T) ** 2)):
        raise StringUndefinedError("string undefined for this pair: dPi/dtau is singular")
    zhat = -linalg.solve(T, pair.d_xi(xi, tau))
    return GeneratingStringPoint(zhat, Z, xi)


def null_cone_check(zhat, Z) -> complex:
    """det(Z^ - Z); zero when Z lies on the complex null cone of Z^."""
    if isinstance(zhat, GeneratingStringPoint):
        zhat = zhat.zhat
    return norm_det(as_matrix(zhat) - as_matrix(Z))


def pair_singularity(pair: GenFuncPair, X) -> tuple:
    """(min |det P| over the solutions at X, that solution); (inf, None) if none."""
    Z = hermitian_of_point(X).m
    try:
        sols = solve_bispinor(pair, Z)
    except ArithmeticError:
        return np.inf, None
    best = (np.inf, None)
    for xi in sols:
        d = abs(np.linalg.det(pair.total_derivative(Z, xi)))
        if d < best[0]:
            best = (d, xi)
    return best


def extract_pair_singular(pair: GenFuncPair, grid: Grid4, t: Optional[float] = None, tol: Tolerances = DEFAULT_TOL) -> PairSingularFrame:
    """Real points where two solutions of the pair merge, with their strings.

    Seeds are local minima of min |det P| over the grid; each is refined on
    the joint system Pi^1 = Pi^2 = det P = 0 in (x, y, z, xi0, xi1).
    """
    t = grid.origin[0] if t is None else t
    g = grid.at_time(t)
    pts = g.points()
    shape = g.shape[1:]
    found = [pair_singularity(pair, X) for X in pts]
    mag = np.array([f[0] for f in found]).reshape(shape)
    finite = np.isfinite(mag)
    filled = np.where(finite, mag, np.inf)
    minima = np.flatnonzero((filled == minimum_filter(filled, size=3, mode="nearest")) & finite)
    empty = PairSingularFrame(float(t), np.zeros((0, 4)), np.zeros(0), tol.locus_tol)
    if len(minima) == 0:
        return empty

    start = np.array(
        [np.concatenate([pts[k, 1:], [found[k][1][0].real, found[k][1][0].imag, found[k][1][1].real, found[k][1][1].imag]]) for k in minima]
    )

    def residual(q: np.ndarray) -> np.ndarray:
        out = np.empty((len(q), 6))
        for n, row in enumerate(q):
            Z = complex_point(t, row[0], row[1], row[2]).m
            xi = np.array([row[3] + 1j * row[4], row[5] + 1j * row[6]])
            F = pair.value(xi, Z @ xi)
            d = np.linalg.det(pair.total_derivative(Z, xi))
            out[n] = [F[0].real, F[0].imag, F[1].real, F[1].imag, d.real, d.imag]
        return out

    refined = _gauss_newton(residual, start, 7, tol)
    res = np.max(np.abs(residual(refined)), axis=1)
    full = np.column_stack([np.full(len(refined), t), refined[:, :3]])
    ok = np.isfinite(res) & (res <= tol.locus_tol) & g.contains(full)
    if not np.any(ok):
        return empty
    keep = _dedupe(full[ok], res[ok], float(min(g.spacing[1:])) / 4)
    rows = refined[ok][keep]
    points, keep_res = full[ok][keep], res[ok][keep]
    spinors = np.column_stack([rows[:, 3] + 1j * rows[:, 4], rows[:, 5] + 1j * rows[:, 6]])
    strings, cone = [], []
    for X, xi in zip(points, spinors):
        Z = hermitian_of_point(X).m
        sp_ = generating_string(pair, Z, xi)
        strings.append(sp_)
        cone.append(null_cone_check(sp_, Z))
    log.info("pair singular points at t=%g: %d", t, len(points))
    return PairSingularFrame(float(t), points, keep_res, tol.locus_tol, spinors, strings, np.array(cone))
