#!/usr/bin/env python3
"""
fields.py - fields carried by a shear-free congruence.

In the gauge xi = (1, G) the matrix Phi of d xi = Phi dX xi is
[[0, 0], [dG/du, dG/dwbar]]. Its components tr(Phi s_mu)/2 are used as the
covector A_mu of a complex potential, whose curl F is the first field type.
The second field type is the two-form C = d alpha ^ d beta of two twistor
components. Both are checked for (anti)self-duality, nullity, closure and
quantised flux.

Conventions:
    eta = diag(1, -1, -1, -1), epsilon_0123 = +1
    E_a = F_0a, H_a = -1/2 epsilon_abc F_bc
    (*F)_mn = 1/2 epsilon_mnrl F^rl
"""

from __future__ import annotations

import itertools
import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple, Union

import numpy as np
from scipy.special import roots_legendre

from biquat_core import ETA, SIGMA, Biquaternion, decode_vector, null_vector
from congruence import CausticPointError, spinor_derivatives
from numerics import ScalarField, as_field, fd_jacobian

log = logging.getLogger(__name__)

EPS4 = np.zeros((4, 4, 4, 4))
for _perm in itertools.permutations(range(4)):
    EPS4[_perm] = np.linalg.det(np.eye(4)[list(_perm)])
EPS3 = EPS4[0, 1:, 1:, 1:]


class NotACongruenceError(ValueError):
    """The spinor field is not shear-free, so Phi does not exist."""


class NotNullError(ValueError):
    pass


class SingularSurfaceError(ArithmeticError):
    """A flux surface passes through (or next to) a field singularity."""


# --- Value types -----------------------------------------------------------------


@dataclass
class PotentialMatrix:
    phi: np.ndarray                      # 2x2 complex
    residual: float = 0.0                # shear-free consistency of the solve

    @property
    def potential(self) -> np.ndarray:
        """A_mu = tr(Phi s_mu) / 2."""
        return decode_vector(self.phi)

    @classmethod
    def from_potential(cls, A) -> "PotentialMatrix":
        return cls(Biquaternion.from_components(A).m)


@dataclass
class FieldStrength:
    F: np.ndarray                        # 4x4 complex antisymmetric, lower indices

    def __post_init__(self) -> None:
        self.F = np.asarray(self.F, dtype=complex)
        self.F = (self.F - self.F.T) / 2

    @property
    def E(self) -> np.ndarray:
        return self.F[0, 1:]

    @property
    def H(self) -> np.ndarray:
        return -0.5 * np.einsum("abc,bc->a", EPS3, self.F[1:, 1:])

    @classmethod
    def from_EH(cls, E, H) -> "FieldStrength":
        F = np.zeros((4, 4), dtype=complex)
        F[0, 1:] = E
        F[1:, 0] = -np.asarray(E)
        F[1:, 1:] = -np.einsum("abc,c->ab", EPS3, np.asarray(H))
        return cls(F)

    def dual(self) -> np.ndarray:
        upper = ETA @ self.F @ ETA
        return 0.5 * np.einsum("mnrl,rl->mn", EPS4, upper)


class TwoForm(FieldStrength):
    """C_mn of the second field type; same layout and decomposition as F."""


@dataclass
class DualityReport:
    selfdual_residual: float
    sign: int                            # F = sign * i * (*F) fits best
    I1: complex                          # E.E - H.H
    I2: complex                          # E.H
    null_scalar: complex                 # C_mn C^mn
    dual_scalar: complex                 # C_mn (*C)^mn


@dataclass
class KerrSchildMetric:
    g: np.ndarray
    H: float
    k: np.ndarray

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.g))


# --- Spherical frame helpers -------------------------------------------------------


def spherical_frame(X) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Unit vectors (r^, theta^, phi^) at the spatial part of X."""
    _, x, y, z = np.asarray(X, dtype=float)
    r = np.sqrt(x * x + y * y + z * z)
    theta = np.arccos(z / r)
    phi = np.arctan2(y, x)
    rhat = np.array([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)])
    that = np.array([np.cos(theta) * np.cos(phi), np.cos(theta) * np.sin(phi), -np.sin(theta)])
    phat = np.array([-np.sin(phi), np.cos(phi), 0.0])
    return rhat, that, phat


def spherical_components(v, X) -> np.ndarray:
    """(v_r, v_theta, v_phi) of a spatial 3-vector at X."""
    return np.array([np.dot(e, v) for e in spherical_frame(X)])


def point_from_spherical(r: float, theta: float, phi: float, t: float = 0.0) -> np.ndarray:
    return np.array([t, r * np.sin(theta) * np.cos(phi), r * np.sin(theta) * np.sin(phi), r * np.cos(theta)])


# --- First field type ------------------------------------------------------------------


def phi_from_branch(G, X) -> PotentialMatrix:
    """Phi at X for the congruence xi = (1, G).

    The overdetermined system dG/dw = G dG/du, dG/dv = G dG/dwbar must hold;
    its relative violation is stored as ``residual``.
    """
    f = as_field(G)
    X = np.asarray(X, dtype=float)
    g = f(X)
    grad = f.gradient(X)
    if not np.all(np.isfinite(grad)):
        raise CausticPointError(f"caustic point {X.tolist()}: gradient of G is not finite")
    d = spinor_derivatives(grad)
    mismatch = np.hypot(abs(d["w"] - g * d["u"]), abs(d["v"] - g * d["wbar"]))
    residual = float(mismatch / (1.0 + np.linalg.norm(grad) * (1.0 + abs(g))))
    if residual > 0.01:
        raise NotACongruenceError(f"not a congruence at {X.tolist()}: shear-free residual {residual:.3g}")
    phi = np.array([[0, 0], [d["u"], d["wbar"]]], dtype=complex)
    return PotentialMatrix(phi, residual)


def phi_sampler(G) -> Callable[[np.ndarray], np.ndarray]:
    f = as_field(G)
    return lambda X: phi_from_branch(f, X).phi


def potential_sampler(phi: Callable) -> Callable[[np.ndarray], np.ndarray]:
    return lambda X: decode_vector(phi(X))


def em_field_I(phi: Callable, X, h: Optional[float] = None, richardson: bool = True) -> FieldStrength:
    """F_mn = d_m A_n - d_n A_m by central differences of the potential."""
    J = fd_jacobian(potential_sampler(phi), X, h, richardson)     # J[m, n] = d_m A_n
    return FieldStrength(J - J.T)


def matrix_curvature(phi: Callable, X, h: Optional[float] = None, richardson: bool = True) -> np.ndarray:
    """R_mn = d_m Om_n - d_n Om_m - [Om_m, Om_n] with Om_m = Phi s_m; shape (4, 4, 2, 2)."""

    def omega(Y) -> np.ndarray:
        return np.einsum("ab,mbc->mac", phi(Y), SIGMA)

    J = fd_jacobian(omega, X, h, richardson)                     # J[m, n] = d_m Om_n
    Om = omega(np.asarray(X, dtype=float))
    comm = np.einsum("mab,nbc->mnac", Om, Om) - np.einsum("nab,mbc->mnac", Om, Om)
    return J - J.transpose(1, 0, 2, 3) - comm


def curvature_checks(R: np.ndarray, xi) -> dict:
    """|R xi|, the trace part (2F) and the trace-free part's duality residual."""
    xi = np.asarray(xi, dtype=complex)
    Rxi = np.einsum("mnab,b->mna", R, xi)
    trace = np.einsum("mnaa->mn", R)
    free = R - 0.5 * trace[:, :, None, None] * np.eye(2)
    free_res = [duality_invariants(FieldStrength(free[:, :, a, b])).selfdual_residual for a in range(2) for b in range(2)]
    return {
        "R_xi": float(np.max(np.abs(Rxi))),
        "trace": FieldStrength(trace / 2),
        "trace_free_selfdual": float(max(free_res)),
    }


def charge_flux(field: Callable, center=(0.0, 0.0, 0.0, 0.0), radius: float = 1.0, order: int = 32) -> complex:
    """(1/4 pi) times the flux of E through a sphere.

    ``field`` maps a point to a FieldStrength (or a 4x4 array). Gauss-Legendre
    nodes in cos(theta) times a trapezoid rule in phi.
    """
    center = np.asarray(center, dtype=float)
    mu, wmu = roots_legendre(order)
    n_phi = 2 * order
    phis = 2 * np.pi * np.arange(n_phi) / n_phi
    total = 0j
    for c, wc in zip(mu, wmu):
        s = np.sqrt(1.0 - c * c)
        for p in phis:
            n = np.array([s * np.cos(p), s * np.sin(p), c])
            X = center + np.concatenate([[0.0], radius * n])
            try:
                F = field(X)
            except (ArithmeticError, ValueError) as exc:
                raise SingularSurfaceError(f"flux surface meets a singularity near {X.tolist()}: {exc}") from exc
            E = F.E if isinstance(F, FieldStrength) else np.asarray(F)[0, 1:]
            if not np.all(np.isfinite(E)):
                raise SingularSurfaceError(f"flux surface meets a singularity near {X.tolist()}")
            total += wc * (2 * np.pi / n_phi) * radius**2 * (E @ n)
    q = total / (4 * np.pi)
    log.debug("charge flux r=%g about %s: %s", radius, center.tolist(), q)
    return complex(q)


# --- Second field type ---------------------------------------------------------------


def em_field_II(alpha, beta, X) -> TwoForm:
    """C_mn = d_m alpha d_n beta - d_n alpha d_m beta."""
    X = np.asarray(X, dtype=float)
    da = as_field(alpha).gradient(X)
    db = as_field(beta).gradient(X)
    return TwoForm(np.outer(da, db) - np.outer(db, da))


def two_form_sampler(alpha, beta) -> Callable[[np.ndarray], np.ndarray]:
    a, b = as_field(alpha), as_field(beta)
    return lambda X: em_field_II(a, b, X).F


def duality_invariants(F: Union[FieldStrength, np.ndarray]) -> DualityReport:
    fs = F if isinstance(F, FieldStrength) else FieldStrength(F)
    star = fs.dual()
    norm = np.linalg.norm(fs.F)
    best = (np.inf, 1)
    for s in (1, -1):
        r = np.linalg.norm(fs.F - s * 1j * star)
        best = min(best, (r / norm if norm > 0 else 0.0, s))
    E, H = fs.E, fs.H
    upper = ETA @ fs.F @ ETA
    return DualityReport(
        selfdual_residual=float(best[0]),
        sign=int(best[1]),
        I1=complex(E @ E - H @ H),
        I2=complex(E @ H),
        null_scalar=complex(np.sum(fs.F * upper)),
        dual_scalar=complex(np.sum(star * upper)),
    )


_TRIPLES = ((0, 1, 2), (0, 1, 3), (0, 2, 3), (1, 2, 3))


def _exterior(J: np.ndarray) -> np.ndarray:
    """(dC)_lmn for the four index triples, from J[l, m, n] = d_l C_mn."""
    return np.array([J[l, m, n] + J[m, n, l] + J[n, l, m] for l, m, n in _TRIPLES])


def form_residuals(C: Callable, X, h: Optional[float] = None, richardson: bool = True) -> Tuple[np.ndarray, np.ndarray]:
    """(dC, d*C) over the triples (012, 013, 023, 123) by central differences."""

    def star(Y) -> np.ndarray:
        return FieldStrength(C(Y)).dual()

    dC = _exterior(fd_jacobian(lambda Y: np.asarray(C(Y), dtype=complex), X, h, richardson))
    dstar = _exterior(fd_jacobian(star, X, h, richardson))
    return dC, dstar


def gaussian_profile(width: float = 1.0) -> Callable[[float], float]:
    return lambda s: float(np.exp(-(s / width) ** 2))


def wave_promote(C: Callable, profile: Callable[[float], float], mode="retarded", center=(0.0, 0.0, 0.0)) -> Callable:
    """A static two-form turned into a spherical wave.

    "advanced" multiplies by f(r + t); "retarded" multiplies by f(r - t) and
    flips the electric part. A pair (a, b) gives a*retarded + b*advanced.
    """
    if isinstance(mode, str):
        weights = {"retarded": (1.0, 0.0), "advanced": (0.0, 1.0)}.get(mode)
        if weights is None:
            raise ValueError(f"unknown wave mode {mode!r}")
    else:
        weights = tuple(float(w) for w in mode)
    center = np.asarray(center, dtype=float)
    flip = np.ones((4, 4))
    flip[0, :] = flip[:, 0] = -1.0
    flip[0, 0] = 1.0

    def sampler(X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        r = np.linalg.norm(X[1:] - center)
        F = np.asarray(C(X), dtype=complex)
        ret = profile(r - X[0]) * flip * F if weights[0] else 0.0
        adv = profile(r + X[0]) * F if weights[1] else 0.0
        return weights[0] * ret + weights[1] * adv

    return sampler


# --- Weyl fields and Kerr-Schild metrics ---------------------------------------------------


def weyl_residual(psi1, psi2, X) -> np.ndarray:
    """(d psi1/dwbar - d psi2/du, d psi1/dv - d psi2/dw)."""
    X = np.asarray(X, dtype=float)
    d1 = spinor_derivatives(as_field(psi1).gradient(X))
    d2 = spinor_derivatives(as_field(psi2).gradient(X))
    return np.array([d1["wbar"] - d2["u"], d1["v"] - d2["w"]], dtype=complex)


def kerr_schild(H: float, k, X=None) -> KerrSchildMetric:
    """g_mn = eta_mn + H k_m k_n for a null covector k."""
    k = np.asarray(k, dtype=float)
    if abs(k @ ETA @ k) > 1e-10 * (1.0 + k @ k):
        raise NotNullError(f"k = {k.tolist()} is not null")
    g = ETA + H * np.outer(k, k)
    metric = KerrSchildMetric(g, float(H), k)
    if abs(metric.det + 1.0) > 1e-10 * (1.0 + abs(H) * (k @ k)) ** 2:
        log.warning("Kerr-Schild determinant %g differs from -1", metric.det)
    return metric


def kerr_schild_from_branch(G, X, H: float) -> KerrSchildMetric:
    """Kerr-Schild metric with k the null covector of xi = (1, G), scaled to k_0 = 1."""
    f = as_field(G)
    kvec = decode_vector(null_vector([1.0, f(np.asarray(X, dtype=float))])).real
    k = ETA @ kvec
    return kerr_schild(H, k / k[0], X)


__all__ = [
    "PotentialMatrix", "FieldStrength", "TwoForm", "DualityReport", "KerrSchildMetric",
    "phi_from_branch", "phi_sampler", "em_field_I", "matrix_curvature", "curvature_checks",
    "em_field_II", "two_form_sampler", "duality_invariants", "form_residuals", "charge_flux",
    "wave_promote", "gaussian_profile", "weyl_residual", "kerr_schild", "kerr_schild_from_branch",
    "spherical_components", "point_from_spherical", "ScalarField",
]
