#!/usr/bin/env python3
"""
biquat_core.py - biquaternions as 2x2 complex matrices and the Minkowski
conventions every other module inherits.

Conventions:
    u = t + z, v = t - z, w = x + iy, wbar = x - iy
    X = [[u, w], [wbar, v]]        det X = t^2 - x^2 - y^2 - z^2
    X = x^mu s_mu with s0 = 1, s1 = [[0,1],[1,0]], s2 = [[0,i],[-i,0]], s3 = diag(1,-1)
    a^mu = tr(X s_mu) / 2           (decode; tr(s_mu s_nu) = 2 delta)
    incidence tau = X xi            (no factor i)
    Lorentz action: X -> S^+ X S, xi -> S^-1 xi, Phi -> S^-1 Phi (S^+)^-1

Usage:
    X = hermitian_of_point(SpacetimePoint(2, 1, 1, 1))
    norm_det(X)                                   # 1
    tau = incidence(X, Spinor(1, 0))
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import linalg

log = logging.getLogger(__name__)

SIGMA = np.array(
    [
        [[1, 0], [0, 1]],
        [[0, 1], [1, 0]],
        [[0, 1j], [-1j, 0]],
        [[1, 0], [0, -1]],
    ],
    dtype=complex,
)
ETA = np.diag([1.0, -1.0, -1.0, -1.0])
EYE = np.eye(2, dtype=complex)


class NullDivisorError(ArithmeticError):
    """A biquaternion with vanishing norm has no inverse."""


class NotHermitianError(ValueError):
    pass


# --- Value types ---------------------------------------------------------------


@dataclass(frozen=True)
class SpacetimePoint:
    t: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        if not np.all(np.isfinite([self.t, self.x, self.y, self.z])):
            raise ValueError("spacetime point must be finite")

    def as_array(self) -> np.ndarray:
        return np.array([self.t, self.x, self.y, self.z], dtype=float)

    @classmethod
    def of(cls, X) -> "SpacetimePoint":
        t, x, y, z = (float(c) for c in X)
        return cls(t, x, y, z)


@dataclass(frozen=True)
class SpinorCoords:
    u: complex
    v: complex
    w: complex
    wbar: complex

    def matrix(self) -> np.ndarray:
        return np.array([[self.u, self.w], [self.wbar, self.v]], dtype=complex)


@dataclass(frozen=True)
class Spinor:
    xi0: complex
    xi1: complex

    def as_array(self) -> np.ndarray:
        return np.array([self.xi0, self.xi1], dtype=complex)

    @classmethod
    def of(cls, a) -> "Spinor":
        return cls(complex(a[0]), complex(a[1]))

    def ratio(self) -> complex:
        """Projective ratio G = xi1 / xi0 (infinity when xi0 = 0)."""
        if self.xi0 == 0:
            return complex(np.inf, 0.0)
        return self.xi1 / self.xi0


@dataclass(frozen=True)
class Twistor:
    xi: Spinor
    tau: Spinor

    def residual(self, X) -> float:
        """|tau - X xi|; zero when the twistor is incident with X."""
        return float(np.linalg.norm(self.tau.as_array() - as_matrix(X) @ self.xi.as_array()))


class Biquaternion:
    """A 2x2 complex matrix with the biquaternion operations on it."""

    __slots__ = ("m",)

    def __init__(self, m) -> None:
        m = np.asarray(m, dtype=complex)
        if m.shape != (2, 2):
            raise ValueError(f"biquaternion needs a 2x2 matrix, got shape {m.shape}")
        self.m = m

    @classmethod
    def from_components(cls, a) -> "Biquaternion":
        """Build a^mu s_mu from four (complex) components."""
        return cls(np.tensordot(np.asarray(a, dtype=complex), SIGMA, axes=1))

    def components(self) -> np.ndarray:
        return decode_vector(self.m)

    def conj(self) -> "Biquaternion":
        return Biquaternion(self.m.conj().T)

    def is_hermitian(self, tol: float = 1e-14) -> bool:
        return bool(np.max(np.abs(self.m - self.m.conj().T)) <= tol * (1.0 + np.max(np.abs(self.m))))

    def __matmul__(self, other: "Biquaternion") -> "Biquaternion":
        return mul(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __add__(self, other: "Biquaternion") -> "Biquaternion":
        return Biquaternion(self.m + as_matrix(other))

    def __sub__(self, other: "Biquaternion") -> "Biquaternion":
        return Biquaternion(self.m - as_matrix(other))

    def __eq__(self, other) -> bool:
        return isinstance(other, Biquaternion) and np.array_equal(self.m, other.m)

    def __repr__(self) -> str:
        return f"Biquaternion({self.m.tolist()})"


ComplexPoint = Biquaternion
Matrixish = Union[Biquaternion, np.ndarray]


def as_matrix(a) -> np.ndarray:
    if isinstance(a, Biquaternion):
        return a.m
    if isinstance(a, SpacetimePoint):
        return hermitian_of_point(a).m
    return np.asarray(a, dtype=complex)


# --- Coordinates ----------------------------------------------------------------


def spinor_coords(X) -> SpinorCoords:
    """(u, v, w, wbar) of a point given as SpacetimePoint or (t, x, y, z)."""
    t, x, y, z = X.as_array() if isinstance(X, SpacetimePoint) else np.asarray(X)
    return SpinorCoords(t + z, t - z, x + 1j * y, x - 1j * y)


def hermitian_of_point(p) -> Biquaternion:
    c = spinor_coords(p)
    return Biquaternion(c.matrix())


def decode_vector(m) -> np.ndarray:
    """Components a^mu = tr(m s_mu)/2; complex for non-Hermitian input."""
    m = as_matrix(m)
    t = (m[0, 0] + m[1, 1]) / 2
    z = (m[0, 0] - m[1, 1]) / 2
    x = (m[0, 1] + m[1, 0]) / 2
    y = (m[0, 1] - m[1, 0]) / 2j
    return np.array([t, x, y, z], dtype=complex)


def point_of_hermitian(X) -> SpacetimePoint:
    b = X if isinstance(X, Biquaternion) else Biquaternion(X)
    if not b.is_hermitian():
        raise NotHermitianError("matrix is not Hermitian, it is not a real spacetime point")
    return SpacetimePoint.of(decode_vector(b.m).real)


def complex_point(t: complex, x: complex, y: complex, z: complex) -> Biquaternion:
    """Point of complexified Minkowski space from complex coordinates."""
    return Biquaternion(np.array([[t + z, x + 1j * y], [x - 1j * y, t - z]], dtype=complex))


# --- Algebra --------------------------------------------------------------------


def mul(a, b) -> Biquaternion:
    return Biquaternion(as_matrix(a) @ as_matrix(b))


def norm_det(a) -> complex:
    m = as_matrix(a)
    return complex(m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0])


def inverse(a) -> Biquaternion:
    m = as_matrix(a)
    d = norm_det(m)
    if abs(d) <= 1e-13 * np.sum(np.abs(m) ** 2):
        raise NullDivisorError("null divisor not invertible")
    adj = np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]], dtype=complex)
    return Biquaternion(adj / d)


def inversion_scale(Z, dZ, h: float = 1e-6) -> tuple:
    """N(dF)/N(dZ) for F = Z^-1 by central differences, and N(Z^-1)^2.

    The two numbers agree because inversion is a conformal map.
    """
    Z, dZ = as_matrix(Z), as_matrix(dZ)
    dF = (inverse(Z + h * dZ).m - inverse(Z - h * dZ).m) / (2 * h)
    return norm_det(dF) / norm_det(dZ), norm_det(inverse(Z)) ** 2


# --- Lorentz action -------------------------------------------------------------


def _check_unimodular(S: np.ndarray) -> None:
    if abs(np.linalg.det(S) - 1.0) >= 1e-10:
        raise ValueError("Lorentz transformation must be unimodular (det S = 1)")


def lorentz_act(S, obj, kind: str = "auto"):
    """Apply the SL(2,C) element S to a point, a spinor or a potential matrix.

    ``kind`` is "point", "spinor" or "potential"; "auto" picks from the type
    (SpacetimePoint and Hermitian matrices are points, Spinor and length-2
    vectors are spinors).
    """
    S = as_matrix(S)
    _check_unimodular(S)
    if kind == "auto":
        if isinstance(obj, (Spinor,)) or np.asarray(getattr(obj, "m", obj)).shape == (2,):
            kind = "spinor"
        else:
            kind = "point"
    if kind == "spinor":
        xi = obj.as_array() if isinstance(obj, Spinor) else np.asarray(obj, dtype=complex)
        out = linalg.solve(S, xi)
        return Spinor.of(out) if isinstance(obj, Spinor) else out
    if kind == "point":
        m = S.conj().T @ as_matrix(obj) @ S
        if isinstance(obj, SpacetimePoint):
            return point_of_hermitian(m)
        return Biquaternion(m)
    if kind == "potential":
        Sinv = linalg.inv(S)
        return Biquaternion(Sinv @ as_matrix(obj) @ Sinv.conj().T)
    raise ValueError(f"unknown object kind {kind!r}")


def boost_z(rapidity: float) -> np.ndarray:
    return np.diag([np.exp(rapidity / 2), np.exp(-rapidity / 2)]).astype(complex)


def rotation_z(angle: float) -> np.ndarray:
    return np.diag([np.exp(1j * angle / 2), np.exp(-1j * angle / 2)])


# --- Twistors and null vectors ---------------------------------------------------


def incidence(X, xi) -> Spinor:
    """tau = X xi."""
    v = xi.as_array() if isinstance(xi, Spinor) else np.asarray(xi, dtype=complex)
    return Spinor.of(as_matrix(X) @ v)


def null_vector(xi) -> Biquaternion:
    """k = xi xi^+, Hermitian with rank one; decodes to a future null vector."""
    v = xi.as_array() if isinstance(xi, Spinor) else np.asarray(xi, dtype=complex)
    if not np.any(v):
        raise ValueError("zero spinor has no null direction")
    return Biquaternion(np.outer(v, v.conj()))


def minkowski_dot(a, b) -> complex:
    return complex(np.asarray(a) @ ETA @ np.asarray(b))
