#!/usr/bin/env python3
"""
congruence.py - generating functions and the shear-free null congruences
they define.

A projective generating function Pi(G, t1, t2) is reduced at a spacetime
point by the incidence substitution t1 = wG + u, t2 = vG + wbar and the
roots of the resulting polynomial in G are the congruence branches there.
A generating pair Pi^C(xi0, xi1, tau0, tau1) fixes both spinor components
through tau = Z xi at a (complex) point Z.

Usage:
    pi = GenFuncProjective.from_text("G*t1 - t2")
    roots = solve_branches(pi, (0, 1, 0, 0))          # G = +1, -1
    field = branch_continue(pi, Grid4.cube(-2, 2, 16))
    pair = GenFuncPair.from_text("tau0 - 1", "tau1")
    xis = solve_bispinor(pair, np.diag([2, 1]))       # [(1/2, 0)]
"""

from __future__ import annotations

import logging
from collections import deque
from dataclasses import dataclass, field
from multiprocessing import Pool
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import sympy as sp
from scipy import linalg

import polygrammar
from biquat_core import as_matrix, spinor_coords
from numerics import (
    DEFAULT_TOL,
    CPoly,
    Grid4,
    RootSet,
    ScalarField,
    Tolerances,
    as_field,
    chordal,
    eliminate,
    fd_gradient,
    fd_second,
    match_roots,
    poly_roots,
)

log = logging.getLogger(__name__)

MAX_DEG_G = 8
MAX_DEG_TWISTOR = 6

# d/d(t,x,y,z) of the spinor coordinates
GRAD_U = np.array([1, 0, 0, 1], dtype=complex)
GRAD_V = np.array([1, 0, 0, -1], dtype=complex)
GRAD_W = np.array([0, 1, 1j, 0], dtype=complex)
GRAD_WBAR = np.array([0, 1, -1j, 0], dtype=complex)


class DegeneratePointError(ValueError):
    """The generating function reduces to the zero polynomial at a point."""


class CausticPointError(ArithmeticError):
    """Two branches merge at the point, so derivatives of G blow up."""


class NonIsolatedError(ArithmeticError):
    """The generating pair has a positive-dimensional solution set at Z."""


_G, _T1, _T2 = sp.symbols("G t1 t2")
_U, _V, _W, _WB = sp.symbols("u v w wb")
_XI0, _XI1, _TAU0, _TAU1 = sp.symbols("xi0 xi1 tau0 tau1")
_Z = sp.symbols("z00 z01 z10 z11")


def _lambdify_list(args, exprs):
    fn = sp.lambdify(args, exprs, "numpy")

    def call(*values):
        shape = np.broadcast(*values).shape
        return np.stack([np.broadcast_to(np.asarray(c, dtype=complex), shape) for c in fn(*values)], axis=-1)

    return call


def spinor_derivatives(grad: np.ndarray) -> Dict[str, complex]:
    """Partials along (u, v, w, wbar) from partials along (t, x, y, z)."""
    gt, gx, gy, gz = grad
    return {
        "u": (gt + gz) / 2,
        "v": (gt - gz) / 2,
        "w": (gx - 1j * gy) / 2,
        "wbar": (gx + 1j * gy) / 2,
    }


# --- Projective generating functions --------------------------------------------


class GenFuncProjective:
    """Pi(G, t1, t2) with complex coefficients.

    The nominal degree in G after reduction is the largest total degree of
    a monomial, since each twistor component contributes one power of G.
    """

    def __init__(self, poly: sp.Poly, text: str = "") -> None:
        if poly.is_zero:
            raise ValueError("generating function is identically zero")
        gens = tuple(str(g) for g in poly.gens)
        if gens != polygrammar.GENFUNC_PROJECTIVE:
            poly = sp.Poly(poly.as_expr(), _G, _T1, _T2)
        monoms = poly.monoms()
        if max(m[0] for m in monoms) > MAX_DEG_G:
            raise ValueError(f"degree in G exceeds {MAX_DEG_G}")
        if max(m[1] + m[2] for m in monoms) > MAX_DEG_TWISTOR:
            raise ValueError(f"twistor degree exceeds {MAX_DEG_TWISTOR}")
        self.poly = poly
        self.text = text or polygrammar.format_polynomial(poly)
        self.degree = max(sum(m) for m in monoms)

        expr = poly.as_expr()
        reduced = sp.Poly(sp.expand(expr.subs({_T1: _W * _G + _U, _T2: _V * _G + _WB})), _G)
        coeffs = [reduced.coeff_monomial(_G**k) for k in range(self.degree + 1)]
        self._coeffs = _lambdify_list((_U, _V, _W, _WB), coeffs)
        self._partials = _lambdify_list(
            (_G, _T1, _T2), [expr, sp.diff(expr, _G), sp.diff(expr, _T1), sp.diff(expr, _T2)]
        )

    @classmethod
    def from_text(cls, text: str) -> "GenFuncProjective":
        return cls(polygrammar.parse_polynomial(text, polygrammar.GENFUNC_PROJECTIVE), text)

    def __repr__(self) -> str:
        return f"GenFuncProjective({self.text!r})"

    def coeffs_at(self, X) -> np.ndarray:
        """Reduced coefficients (ascending in G) at one point or at (N, 4) points."""
        X = np.asarray(X, dtype=complex)
        t, x, y, z = np.moveaxis(X, -1, 0)
        return self._coeffs(t + z, t - z, x + 1j * y, x - 1j * y)

    def partials(self, G, t1, t2) -> np.ndarray:
        """(Pi, dPi/dG, dPi/dt1, dPi/dt2) at the given arguments."""
        return self._partials(G, t1, t2)


def reduce_at_point(pi: GenFuncProjective, X) -> CPoly:
    """The polynomial in G whose roots are the branches at X."""
    c = pi.coeffs_at(X)
    scale = 1.0 + float(np.max(np.abs(np.asarray(X, dtype=complex))))
    if np.all(np.abs(c) <= 1e-14 * scale):
        raise DegeneratePointError(f"degenerate point {np.asarray(X).tolist()}: {pi.text} vanishes identically")
    return CPoly(c)


def solve_branches(pi: GenFuncProjective, X, tol: Tolerances = DEFAULT_TOL) -> RootSet:
    return poly_roots(reduce_at_point(pi, X), tol)


def branch_gradient(pi: GenFuncProjective, X, G: complex) -> np.ndarray:
    """dG/d(t,x,y,z) of the branch through G at X by implicit differentiation."""
    c = spinor_coords(np.asarray(X))
    t1 = c.w * G + c.u
    t2 = c.v * G + c.wbar
    _, p_g, p_1, p_2 = pi.partials(G, t1, t2)
    P = p_g + c.w * p_1 + c.v * p_2
    scale = 1.0 + abs(p_g) + abs(c.w * p_1) + abs(c.v * p_2)
    if abs(P) <= 1e-10 * scale:
        raise CausticPointError(f"caustic point {np.asarray(X).tolist()}: branches merge at G={G:.6g}")
    return -np.array(
        [
            p_1 + p_2 * G,
            p_1 * G + p_2,
            1j * p_1 * G - 1j * p_2,
            p_1 - p_2 * G,
        ],
        dtype=complex,
    ) / P


def branch_sampler(pi: GenFuncProjective, X0, branch: int = 0, tol: Tolerances = DEFAULT_TOL, follow: bool = False) -> ScalarField:
    """One branch of G as a scalar field near X0, with its analytic gradient.

    Branches are numbered in the order ``solve_branches`` reports the finite
    roots at X0. Away from X0 the branch is the root closest to the linear
    prediction from X0, or with ``follow`` from the last point sampled, which
    keeps the branch along a chain of nearby points such as a quadrature
    sphere.
    """
    X0 = np.asarray(X0, dtype=float)
    finite = [r.value for r in solve_branches(pi, X0, tol).finite()]
    if not 0 <= branch < len(finite):
        raise IndexError(f"branch {branch} out of range, {len(finite)} finite branches at {X0.tolist()}")
    g0 = finite[branch]
    last = {"X": X0, "g": g0, "d": branch_gradient(pi, X0, g0)}

    def value(X) -> complex:
        X = np.asarray(X, dtype=float)
        guess = last["g"] + last["d"] @ (X - last["X"])
        vals = solve_branches(pi, X, tol).expanded()
        g = complex(vals[np.argmin(chordal(vals, guess))])
        if follow:
            try:
                last.update(X=X, g=g, d=branch_gradient(pi, X, g))
            except CausticPointError:
                last.update(X=X, g=g)
        return g

    def grad(X) -> np.ndarray:
        return branch_gradient(pi, X, value(X))

    return ScalarField(value, grad)


def _as_branch_field(source, X, branch: int, tol: Tolerances) -> ScalarField:
    if isinstance(source, GenFuncProjective):
        return branch_sampler(source, X, branch, tol)
    return as_field(source)


def _gradient_of(field: ScalarField, X) -> np.ndarray:
    g = field.gradient(X)
    if not np.all(np.isfinite(g)):
        raise CausticPointError(f"caustic point {np.asarray(X).tolist()}: gradient is not finite")
    return g


def sfc_residual(source, X, branch: int = 0, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Shear-free residuals (G dG/du - dG/dw, G dG/dwbar - dG/dv) in the gauge xi = (1, G).

    ``source`` is a GenFuncProjective (with ``branch`` picking the root) or a
    scalar sampler for G.
    """
    f = _as_branch_field(source, X, branch, tol)
    g = f(X)
    d = spinor_derivatives(_gradient_of(f, X))
    return np.array([g * d["u"] - d["w"], g * d["wbar"] - d["v"]], dtype=complex)


def scalar_pde_residual(field, X, kind: str = "eikonal", h: Optional[float] = None, richardson: bool = False) -> complex:
    """Eikonal f_t^2 - |grad f|^2 or wave f_tt - laplacian f, by finite differences."""
    f = as_field(field)
    X = np.asarray(X, dtype=float)
    if kind == "eikonal":
        g = fd_gradient(f, X, h, richardson)
        return complex(g[0] ** 2 - g[1] ** 2 - g[2] ** 2 - g[3] ** 2)
    if kind == "wave":
        d2 = fd_second(f, X, h, richardson)
        return complex(d2[0] - d2[1] - d2[2] - d2[3])
    raise ValueError(f"unknown residual kind {kind!r} (eikonal or wave)")


def twistor_gradients(field: ScalarField, X) -> np.ndarray:
    """3x4 gradients of (G, tau1, tau2) with tau1 = wG + u, tau2 = vG + wbar."""
    c = spinor_coords(np.asarray(X))
    G = field(X)
    dG = _gradient_of(field, X)
    return np.stack(
        [
            dG,
            c.w * dG + G * GRAD_W + GRAD_U,
            c.v * dG + G * GRAD_V + GRAD_WBAR,
        ]
    )


def twistor_rank_check(source, X, branch: int = 0, tol: Tolerances = DEFAULT_TOL) -> int:
    """Rank of the Jacobian of (G, tau1, tau2); two for every congruence."""
    J = twistor_gradients(_as_branch_field(source, X, branch, tol), X)
    s = linalg.svd(J, compute_uv=False)
    rank = int(np.sum(s > tol.rank_cutoff * s[0])) if s[0] > 0 else 0
    log.debug("twistor Jacobian singular values %s -> rank %d", np.round(s, 12).tolist(), rank)
    return rank


def ortho_residual(source, X, branch: int = 0, tol: Tolerances = DEFAULT_TOL) -> Dict[Tuple[str, str], complex]:
    """Minkowski products of the gradients of every pair among (G, tau1, tau2)."""
    J = twistor_gradients(_as_branch_field(source, X, branch, tol), X)
    names = ("G", "tau1", "tau2")
    eta = np.array([1.0, -1.0, -1.0, -1.0])
    out = {}
    for i in range(3):
        for j in range(i, 3):
            out[(names[i], names[j])] = complex(np.sum(eta * J[i] * J[j]))
    return out


# --- Branch continuation over a grid ------------------------------------------------


@dataclass
class BranchField:
    """Labelled branches on a grid; column k of ``values`` is branch k everywhere."""

    grid: Grid4
    values: np.ndarray                   # (N, n) complex, label order, inf at infinity
    multiple: np.ndarray                 # (N, n) bool
    degenerate: np.ndarray               # (N,) bool, reduction vanished identically
    unmatched: np.ndarray                # (N,) bool, finite-root count differs from a neighbour
    monodromy: List[Tuple[int, str]] = field(default_factory=list)  # (base node, plane)

    @property
    def n_branches(self) -> int:
        return self.values.shape[1]

    def rows(self):
        """Yield (node, point, G, label, multiple) for every non-degenerate node."""
        pts = self.grid.points()
        for k in range(len(pts)):
            if self.degenerate[k]:
                continue
            for b in range(self.n_branches):
                yield k, pts[k], self.values[k, b], b, bool(self.multiple[k, b])

    def monodromy_points(self) -> np.ndarray:
        """Centres of the flagged plaquettes."""
        if not self.monodromy:
            return np.zeros((0, 4))
        pts = self.grid.points()
        h = np.asarray(self.grid.spacing)
        out = []
        for node, plane in self.monodromy:
            c = pts[node].copy()
            for axis in _PLANES[plane]:
                c[axis] += h[axis] / 2
            out.append(c)
        return np.array(out)


_PLANES = {"xy": (1, 2), "xz": (1, 3), "yz": (2, 3)}


def _roots_of_row(args) -> Tuple[np.ndarray, np.ndarray, bool]:
    coeffs, tol = args
    n = len(coeffs) - 1
    if np.all(np.abs(coeffs) <= 1e-14):
        return np.full(n, np.nan + 0j), np.zeros(n, dtype=bool), True
    rs = poly_roots(CPoly(coeffs), tol)
    vals, mult = [], []
    for r in rs.roots:
        k = 1 if r.at_infinity else r.multiplicity
        vals.extend([r.value] * k)
        mult.extend([r.multiplicity > 1 and not r.at_infinity] * k)
    return np.array(vals, dtype=complex), np.array(mult, dtype=bool), False


def branch_continue(
    pi: GenFuncProjective,
    grid: Grid4,
    tol: Tolerances = DEFAULT_TOL,
    workers: int = 1,
    previous: Optional[BranchField] = None,
) -> BranchField:
    """Solve every grid node and give the branches globally consistent labels.

    Labels spread from the first regular node along a breadth-first traversal
    of the grid edges. A plaquette whose edge matchings compose to a
    non-trivial permutation encloses a branch point and is flagged. When
    ``previous`` (the field on the preceding time slice) is given the start
    node inherits its labels.
    """
    if grid.shape[0] != 1:
        raise ValueError("branch_continue needs a grid at a single time")
    pts = grid.points()
    coeffs = pi.coeffs_at(pts)
    jobs = [(row, tol) for row in coeffs]
    if workers > 1:
        with Pool(workers) as pool:
            solved = pool.map(_roots_of_row, jobs, chunksize=max(1, len(jobs) // (4 * workers)))
    else:
        solved = [_roots_of_row(j) for j in jobs]
    raw = np.array([s[0] for s in solved])
    raw_mult = np.array([s[1] for s in solved])
    degenerate = np.array([s[2] for s in solved])
    N, n = raw.shape
    finite_count = np.sum(np.isfinite(raw), axis=1)

    shape = grid.shape[1:]
    idx = np.arange(N).reshape(shape)

    def neighbours(k: int):
        i, j, l = np.unravel_index(k, shape)
        for d in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
            a, b, c = i + d[0], j + d[1], l + d[2]
            if 0 <= a < shape[0] and 0 <= b < shape[1] and 0 <= c < shape[2]:
                yield int(idx[a, b, c])

    values = np.full_like(raw, np.nan)
    multiple = np.zeros_like(raw_mult)
    unmatched = degenerate.copy()
    seen = degenerate.copy()
    for start in range(N):
        if seen[start]:
            continue
        order = np.arange(n)
        if previous is not None and start == 0 and np.all(np.isfinite(previous.values[0])):
            order = match_roots(previous.values[0], raw[0])
        values[start] = raw[start][order]
        multiple[start] = raw_mult[start][order]
        seen[start] = True
        queue = deque([start])
        while queue:
            p = queue.popleft()
            for q in neighbours(p):
                if seen[q]:
                    continue
                perm = match_roots(values[p], raw[q])
                values[q] = raw[q][perm]
                multiple[q] = raw_mult[q][perm]
                if finite_count[q] != finite_count[p]:
                    unmatched[q] = True
                seen[q] = True
                queue.append(q)

    monodromy = _monodromy_cells(values, degenerate, idx)
    log.info(
        "branch field: %d nodes, %d branches, %d degenerate, %d monodromy cells",
        N, n, int(degenerate.sum()), len(monodromy),
    )
    return BranchField(grid, values, multiple, degenerate, unmatched, monodromy)


def _monodromy_cells(values: np.ndarray, degenerate: np.ndarray, idx: np.ndarray) -> List[Tuple[int, str]]:
    n = values.shape[1]
    ident = np.arange(n)
    cache: Dict[Tuple[int, int], np.ndarray] = {}

    def step(a: int, b: int) -> np.ndarray:
        key = (min(a, b), max(a, b))
        if key not in cache:
            cache[key] = match_roots(values[key[0]], values[key[1]])
        perm = cache[key]
        return perm if a < b else np.argsort(perm)

    flagged = []
    shape = idx.shape
    for plane, (a1, a2) in _PLANES.items():
        d1 = np.eye(3, dtype=int)[a1 - 1]
        d2 = np.eye(3, dtype=int)[a2 - 1]
        for base in np.ndindex(shape):
            b = np.array(base)
            corners = [b, b + d1, b + d1 + d2, b + d2]
            if any(np.any(c >= np.array(shape)) for c in corners):
                continue
            nodes = [int(idx[tuple(c)]) for c in corners]
            if np.any(degenerate[nodes]):
                continue
            sigma = ident
            for a, c in zip(nodes, nodes[1:] + nodes[:1]):
                sigma = step(a, c)[sigma]
            if not np.array_equal(sigma, ident):
                flagged.append((nodes[0], plane))
    return flagged


# --- Generating pairs and the full spinor --------------------------------------------


@dataclass
class SpinorGradient:
    """d xi^E / d Z[B, D] as grad[B, D, E]; it factors as phi[E, B] * xi[D]."""

    grad: np.ndarray
    phi: np.ndarray
    xi: np.ndarray

    def factor_residual(self) -> float:
        rebuilt = np.einsum("eb,d->bde", self.phi, self.xi)
        return float(np.max(np.abs(self.grad - rebuilt)))


class GenFuncPair:
    """Two polynomials Pi^C(xi0, xi1, tau0, tau1) fixing a full spinor field."""

    def __init__(self, p1: sp.Poly, p2: sp.Poly, texts: Sequence[str] = ("", "")) -> None:
        gens = (_XI0, _XI1, _TAU0, _TAU1)
        self.exprs = [sp.Poly(p.as_expr(), *gens).as_expr() for p in (p1, p2)]
        if any(e == 0 for e in self.exprs):
            raise ValueError("generating pair member is identically zero")
        self.texts = tuple(t or polygrammar.format_polynomial(p) for t, p in zip(texts, (p1, p2)))

        subs = {_TAU0: _Z[0] * _XI0 + _Z[1] * _XI1, _TAU1: _Z[2] * _XI0 + _Z[3] * _XI1}
        reduced = [sp.Poly(sp.expand(e.subs(subs)), _XI0, _XI1) for e in self.exprs]
        jac = sp.Matrix([[sp.diff(r.as_expr(), v) for v in (_XI0, _XI1)] for r in reduced])
        if sp.expand(jac.det()) == 0:
            raise ValueError("generating pair is not functionally independent")
        self._reduced = []
        for r in reduced:
            shape = (r.degree(_XI0) + 1, r.degree(_XI1) + 1)
            terms = [(m, sp.lambdify(_Z, c, "numpy")) for m, c in zip(r.monoms(), r.coeffs())]
            self._reduced.append((shape, terms))

        args = (_XI0, _XI1, _TAU0, _TAU1)
        self._value = sp.lambdify(args, self.exprs, "numpy")
        self._dxi = sp.lambdify(args, [[sp.diff(e, v) for v in (_XI0, _XI1)] for e in self.exprs], "numpy")
        self._dtau = sp.lambdify(args, [[sp.diff(e, v) for v in (_TAU0, _TAU1)] for e in self.exprs], "numpy")

    @classmethod
    def from_text(cls, text1: str, text2: str) -> "GenFuncPair":
        vs = polygrammar.GENFUNC_PAIR
        return cls(polygrammar.parse_polynomial(text1, vs), polygrammar.parse_polynomial(text2, vs), (text1, text2))

    def __repr__(self) -> str:
        return f"GenFuncPair({self.texts[0]!r}, {self.texts[1]!r})"

    def reduced_arrays(self, Z) -> List[np.ndarray]:
        """Coefficient arrays C[i, j] of xi0^i xi1^j for both members at Z."""
        zs = as_matrix(Z).ravel()
        out = []
        for shape, terms in self._reduced:
            C = np.zeros(shape, dtype=complex)
            for (i, j), fn in terms:
                C[i, j] = complex(fn(*zs))
            out.append(C)
        return out

    def value(self, xi, tau) -> np.ndarray:
        return np.array(self._value(xi[0], xi[1], tau[0], tau[1]), dtype=complex)

    def d_xi(self, xi, tau) -> np.ndarray:
        return np.array(self._dxi(xi[0], xi[1], tau[0], tau[1]), dtype=complex)

    def d_tau(self, xi, tau) -> np.ndarray:
        return np.array(self._dtau(xi[0], xi[1], tau[0], tau[1]), dtype=complex)

    def total_derivative(self, Z, xi) -> np.ndarray:
        """P[C, A] = dPi^C/dxi^A + (dPi^C/dtau^E) Z[E, A] along tau = Z xi."""
        Z = as_matrix(Z)
        xi = np.asarray(xi, dtype=complex)
        tau = Z @ xi
        return self.d_xi(xi, tau) + self.d_tau(xi, tau) @ Z


def _univariate_in_xi1(C: np.ndarray, xi0: complex) -> CPoly:
    return CPoly(np.vander([xi0], C.shape[0], increasing=True)[0] @ C)


def solve_bispinor(pair: GenFuncPair, Z, tol: Tolerances = DEFAULT_TOL) -> List[np.ndarray]:
    """Every isolated spinor xi with Pi^C(xi, Z xi) = 0.

    xi1 is eliminated by a resultant, the eliminant is solved for xi0 and
    xi1 is recovered from whichever member still depends on it. Each
    solution gets two Newton steps on the full system and is checked to
    satisfy both members to 1e-9.
    """
    Z = as_matrix(Z)
    A, B = pair.reduced_arrays(Z)
    try:
        elim = eliminate(A, B)
    except ValueError as exc:
        raise NonIsolatedError(f"non-isolated solution set at Z: {exc}") from exc
    if np.all(np.abs(elim.coeffs) <= 1e-12 * (1.0 + np.max(np.abs(np.concatenate([A.ravel(), B.ravel()]))))):
        raise NonIsolatedError("non-isolated solution set at Z: eliminant vanishes identically")

    solutions: List[np.ndarray] = []
    if elim.trimmed(tol).degree == 0:
        return solutions
    for root in poly_roots(elim, tol).finite():
        x0 = root.value
        cands = [p.trimmed(tol) for p in (_univariate_in_xi1(A, x0), _univariate_in_xi1(B, x0))]
        cands = [p for p in cands if not np.all(np.abs(p.coeffs) <= 1e-10 * (1.0 + abs(x0)))]
        if not cands:
            raise NonIsolatedError(f"non-isolated solution set at Z: xi0={x0:.6g} leaves xi1 free")
        usable = [p for p in cands if p.degree >= 1]
        if not usable:
            continue
        for r in poly_roots(min(usable, key=lambda p: p.degree), tol).finite():
            xi = _newton(pair, Z, np.array([x0, r.value], dtype=complex))
            if np.max(np.abs(pair.value(xi, Z @ xi))) <= 1e-9 and not any(
                np.linalg.norm(xi - s) <= 1e-8 * (1 + np.linalg.norm(s)) for s in solutions
            ):
                solutions.append(xi)
    log.debug("solve_bispinor: %d solutions at Z=%s", len(solutions), np.round(Z, 6).tolist())
    return solutions


def _newton(pair: GenFuncPair, Z: np.ndarray, xi: np.ndarray, steps: int = 3) -> np.ndarray:
    for _ in range(steps):
        F = pair.value(xi, Z @ xi)
        if np.max(np.abs(F)) == 0.0:
            break
        P = pair.total_derivative(Z, xi)
        if abs(np.linalg.det(P)) <= 1e-14 * (1.0 + np.sum(np.abs(P) ** 2)):
            break
        xi = xi - linalg.solve(P, F)
    return xi


def spinor_gradient(pair: GenFuncPair, Z, xi) -> SpinorGradient:
    """Analytic d xi^E / d Z[B, D] = -(Q T)[E, B] xi^D with Q = P^-1, T = dPi/dtau."""
    Z = as_matrix(Z)
    xi = np.asarray(xi, dtype=complex)
    P = pair.total_derivative(Z, xi)
    if abs(np.linalg.det(P)) <= 1e-10 * np.sum(np.abs(P) ** 2):
        raise CausticPointError("caustic point: total derivative dPi/dxi is singular")
    T = pair.d_tau(xi, Z @ xi)
    phi = -linalg.solve(P, T)                         # phi[E, B]
    grad = np.einsum("eb,d->bde", phi, xi)
    return SpinorGradient(grad, phi, xi)


def fd_spinor_gradient(pair: GenFuncPair, Z, xi, h: float = 1e-4, tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Central differences of ``solve_bispinor`` along each entry of Z, following xi."""
    Z = as_matrix(Z)
    xi = np.asarray(xi, dtype=complex)
    grad = np.zeros((2, 2, 2), dtype=complex)

    def nearest(Zs) -> np.ndarray:
        sols = solve_bispinor(pair, Zs, tol)
        if not sols:
            raise NonIsolatedError("solution lost along the finite-difference stencil")
        return min(sols, key=lambda s: np.linalg.norm(s - xi))

    for b in range(2):
        for d in range(2):
            E = np.zeros((2, 2), dtype=complex)
            E[b, d] = h
            grad[b, d] = (nearest(Z + E) - nearest(Z - E)) / (2 * h)
    return grad

