#!/usr/bin/env python3
"""
solutions.py - named generating functions and closed-form fields.

    static        G*t1 - t2                 branches G = wbar / (z +- r)
    kerr(a)       G*t1 - t2 + 2ai*G         the static one shifted by z -> z + ia
    shifted(c)    G*(t1 - c) - t2           the static one translated along u

Closed forms come with analytic gradients so that residual checks do not
depend on finite differences.
"""

from __future__ import annotations

import logging
from typing import Dict, Tuple

import numpy as np

from congruence import GenFuncPair, GenFuncProjective
from numerics import ScalarField

log = logging.getLogger(__name__)

STATIC_TEXT = "G*t1 - t2"


def _num(a: float) -> str:
    return f"{a:.17g}"


def kerr_text(a: float) -> str:
    return f"{STATIC_TEXT} + {_num(2 * a)}i*G"


def shifted_text(c: float) -> str:
    return f"G*(t1 - {_num(c)}) - t2"


def static_pi() -> GenFuncProjective:
    return GenFuncProjective.from_text(STATIC_TEXT)


def kerr_pi(a: float) -> GenFuncProjective:
    return GenFuncProjective.from_text(kerr_text(a))


def shifted_pi(c: float) -> GenFuncProjective:
    return GenFuncProjective.from_text(shifted_text(c))


GENFUNCS = {"static": static_pi, "kerr": kerr_pi, "shifted": shifted_pi}


def _split(X) -> Tuple[float, float, float, float]:
    t, x, y, z = (float(c) for c in np.asarray(X, dtype=float))
    return t, x, y, z


def stereo_branch(sign: int = 1) -> ScalarField:
    """G = wbar / (z + sign*r): tan(theta/2) e^{-i phi} for sign = +1."""

    def value(X) -> complex:
        _, x, y, z = _split(X)
        r = np.sqrt(x * x + y * y + z * z)
        return (x - 1j * y) / (z + sign * r)

    def grad(X) -> np.ndarray:
        _, x, y, z = _split(X)
        r = np.sqrt(x * x + y * y + z * z)
        D = z + sign * r
        wbar = x - 1j * y
        dwbar = np.array([0, 1, -1j, 0])
        dD = np.array([0, sign * x / r, sign * y / r, 1 + sign * z / r])
        return (dwbar * D - wbar * dD) / D**2

    return ScalarField(value, grad)


def kerr_branch(a: float, sign: int = 1) -> ScalarField:
    """G = wbar / ((z + ia) + sign*sqrt((z + ia)^2 + w wbar)), principal root."""

    def parts(X):
        _, x, y, z = _split(X)
        zeta = z + 1j * a
        R = np.sqrt(complex(zeta * zeta + x * x + y * y))
        return x, y, zeta, R

    def value(X) -> complex:
        x, y, zeta, R = parts(X)
        return (x - 1j * y) / (zeta + sign * R)

    def grad(X) -> np.ndarray:
        x, y, zeta, R = parts(X)
        D = zeta + sign * R
        wbar = x - 1j * y
        dwbar = np.array([0, 1, -1j, 0])
        dD = np.array([0, sign * x / R, sign * y / R, 1 + sign * zeta / R])
        return (dwbar * D - wbar * dD) / D**2

    return ScalarField(value, grad)


def null_time() -> ScalarField:
    """beta = t + r."""

    def value(X) -> complex:
        t, x, y, z = _split(X)
        return t + np.sqrt(x * x + y * y + z * z)

    def grad(X) -> np.ndarray:
        _, x, y, z = _split(X)
        r = np.sqrt(x * x + y * y + z * z)
        return np.array([1, x / r, y / r, z / r], dtype=complex)

    return ScalarField(value, grad)


def retarded_time() -> ScalarField:
    """S = t - r, a real eikonal."""

    def value(X) -> complex:
        t, x, y, z = _split(X)
        return t - np.sqrt(x * x + y * y + z * z)

    return ScalarField(value)


def screw_potentials() -> Tuple[ScalarField, ScalarField]:
    """(alpha, beta) = (G, t + r) for the static congruence."""
    return stereo_branch(+1), null_time()


def screw_closed_form(X) -> Tuple[complex, complex, complex]:
    """(C_r, C_theta, C_phi) of E + iH for the screw field.

    C_theta = -e^{-i phi} / (r cos^2(theta/2)), C_phi = -i C_theta, C_r = 0.
    The sign comes from E_a = C_0a = -d_a G for alpha = G, beta = t + r, with
    H_a = -1/2 epsilon_abc C_bc under eta = diag(1, -1, -1, -1).
    """
    _, x, y, z = _split(X)
    r = np.sqrt(x * x + y * y + z * z)
    theta = np.arccos(z / r)
    phi = np.arctan2(y, x)
    c_theta = -np.exp(-1j * phi) / (r * np.cos(theta / 2) ** 2)
    return 0j, complex(c_theta), complex(-1j * c_theta)


def weyl_pair() -> Tuple[ScalarField, ScalarField]:
    """psi1 = -wbar / (r (z + r)), psi2 = 1/r."""

    def psi1(X) -> complex:
        _, x, y, z = _split(X)
        r = np.sqrt(x * x + y * y + z * z)
        return -(x - 1j * y) / (r * (z + r))

    def psi2(X) -> complex:
        _, x, y, z = _split(X)
        return 1.0 / np.sqrt(x * x + y * y + z * z)

    def grad2(X) -> np.ndarray:
        _, x, y, z = _split(X)
        r = np.sqrt(x * x + y * y + z * z)
        return np.array([0, -x, -y, -z], dtype=complex) / r**3

    return ScalarField(psi1), ScalarField(psi2, grad2)


# --- Generating pairs ------------------------------------------------------------------


PAIRS: Dict[str, Tuple[str, str]] = {
    "squares": ("tau0 - xi0^2 - 1/4", "tau1 - xi1^2 - (1+i)"),
    "mixed": ("tau0 - xi0*xi1 - 1/4", "tau1 - xi0^2 - 1/4"),
}


def pair(name: str) -> GenFuncPair:
    try:
        texts = PAIRS[name]
    except KeyError:
        raise ValueError(f"unknown generating pair {name!r} (known: {', '.join(PAIRS)})") from None
    return GenFuncPair.from_text(*texts)


def constant_twistor_pair(c0: complex = 1.0, c1: complex = 0.0) -> GenFuncPair:
    return GenFuncPair.from_text(f"tau0 - ({_complex_text(c0)})", f"tau1 - ({_complex_text(c1)})")


def shifted_point_pair(Z0) -> GenFuncPair:
    """Pi^C = tau^C - (Z0 xi)^C; its generating string is the constant point Z0."""
    Z0 = np.asarray(Z0, dtype=complex)
    rows = [
        f"tau{c} - ({_complex_text(Z0[c, 0])})*xi0 - ({_complex_text(Z0[c, 1])})*xi1" for c in range(2)
    ]
    return GenFuncPair.from_text(*rows)


def _complex_text(c: complex) -> str:
    c = complex(c)
    return f"{_num(c.real)} + ({_num(c.imag)})*i" if c.imag else _num(c.real)
