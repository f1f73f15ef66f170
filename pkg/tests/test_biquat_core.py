import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure the repository root is importable when running this file standalone
HERE = Path(__file__).resolve().parent
REPO_ROOT = HERE.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

import biquat_core as uut  # uut = unit under test


def _random_sl2c(rng):
    M = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    return M / np.sqrt(np.linalg.det(M))


def test_point_matrix_layout():
    X = uut.hermitian_of_point((1.0, 2.0, 3.0, 4.0)).m
    assert np.allclose(X, [[5, 2 + 3j], [2 - 3j, -3]])


def test_spinor_coords():
    c = uut.spinor_coords(uut.SpacetimePoint(1.0, 2.0, 3.0, 4.0))
    assert (c.u, c.v, c.w, c.wbar) == (5, -3, 2 + 3j, 2 - 3j)


def test_determinant_is_interval():
    t, x, y, z = 2.0, 0.5, -1.0, 0.3
    assert abs(uut.norm_det(uut.hermitian_of_point((t, x, y, z))) - (t * t - x * x - y * y - z * z)) < 1e-14


def test_decode_round_trip():
    rng = np.random.default_rng(2)
    a = rng.normal(size=4) + 1j * rng.normal(size=4)
    assert np.allclose(uut.Biquaternion.from_components(a).components(), a)


def test_point_of_hermitian():
    p = uut.point_of_hermitian(uut.hermitian_of_point((1.0, -2.0, 0.5, 3.0)))
    assert p == uut.SpacetimePoint(1.0, -2.0, 0.5, 3.0)


def test_point_of_non_hermitian_fails():
    with pytest.raises(uut.NotHermitianError):
        uut.point_of_hermitian(uut.complex_point(1, 1j, 0, 0))


def test_norm_is_multiplicative():
    rng = np.random.default_rng(5)
    A = uut.Biquaternion(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    B = uut.Biquaternion(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    assert abs(uut.norm_det(A @ B) - uut.norm_det(A) * uut.norm_det(B)) < 1e-12


def test_inverse():
    Z = uut.complex_point(1.0, 0.2j, 0.3, -0.1)
    assert np.allclose((Z @ uut.inverse(Z)).m, np.eye(2))


def test_null_divisor():
    # a point on the light cone of the origin
    with pytest.raises(uut.NullDivisorError, match="null divisor not invertible"):
        uut.inverse(uut.hermitian_of_point((1.0, 1.0, 0.0, 0.0)))


def test_inversion_is_conformal():
    rng = np.random.default_rng(7)
    for _ in range(5):
        Z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        dZ = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        ratio, expected = uut.inversion_scale(Z, dZ)
        assert abs(ratio - expected) <= 1e-6 * abs(expected)


def test_boost_preserves_interval():
    X = uut.SpacetimePoint(2.0, 0.1, 0.2, 0.7)
    Y = uut.lorentz_act(uut.boost_z(0.8), X)
    assert isinstance(Y, uut.SpacetimePoint)
    assert abs(uut.norm_det(Y) - uut.norm_det(X)) < 1e-12
    # a boost along z mixes t and z only
    assert abs(Y.x - X.x) < 1e-14 and abs(Y.y - X.y) < 1e-14


def test_rotation_about_z():
    Y = uut.lorentz_act(uut.rotation_z(np.pi / 2), uut.SpacetimePoint(0.0, 1.0, 0.0, 0.0))
    assert np.allclose(Y.as_array(), [0.0, 0.0, -1.0, 0.0], atol=1e-14) or np.allclose(Y.as_array(), [0.0, 0.0, 1.0, 0.0], atol=1e-14)


def test_lorentz_preserves_incidence():
    rng = np.random.default_rng(11)
    S = _random_sl2c(rng)
    X = uut.hermitian_of_point(rng.normal(size=4))
    xi = rng.normal(size=2) + 1j * rng.normal(size=2)
    tau = uut.incidence(X, xi).as_array()
    X2 = uut.lorentz_act(S, X, kind="point")
    xi2 = uut.lorentz_act(S, xi, kind="spinor")
    # the transformed twistor is S^+ tau
    assert np.allclose(uut.incidence(X2, xi2).as_array(), S.conj().T @ tau)


def test_potential_pairs_invariantly_with_points():
    rng = np.random.default_rng(13)
    S = _random_sl2c(rng)
    Phi = uut.Biquaternion(rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2)))
    X = uut.hermitian_of_point(rng.normal(size=4))
    Phi2 = uut.lorentz_act(S, Phi, kind="potential")
    X2 = uut.lorentz_act(S, X, kind="point")
    before = np.trace(Phi.m @ X.m)
    assert abs(np.trace(Phi2.m @ X2.m) - before) <= 1e-9 * (1 + abs(before))


def test_lorentz_needs_unimodular():
    with pytest.raises(ValueError):
        uut.lorentz_act(2 * np.eye(2), uut.SpacetimePoint(0.0, 0.0, 0.0, 0.0))


def test_null_vector():
    xi = np.array([1.0, 0.5 - 0.2j])
    k = uut.null_vector(xi)
    assert k.is_hermitian()
    assert abs(uut.norm_det(k)) < 1e-14
    comps = k.components().real
    assert comps[0] > 0
    assert abs(uut.minkowski_dot(comps, comps)) < 1e-14


def test_null_vector_of_zero_spinor():
    with pytest.raises(ValueError):
        uut.null_vector([0.0, 0.0])


def test_twistor_residual():
    X = uut.hermitian_of_point((0.5, 1.0, -1.0, 2.0))
    xi = uut.Spinor(1.0, 0.3j)
    tw = uut.Twistor(xi, uut.incidence(X, xi))
    assert tw.residual(X) < 1e-14


def test_incidence_at_random_complex_points():
    rng = np.random.default_rng(17)
    for _ in range(20):
        Z = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        xi = uut.Spinor.of(rng.normal(size=2) + 1j * rng.normal(size=2))
        tau = uut.incidence(Z, xi)
        assert np.allclose(tau.as_array(), Z @ xi.as_array(), atol=1e-14)
        assert uut.Twistor(xi, tau).residual(Z) < 1e-13


def test_spinor_ratio():
    assert uut.Spinor(2.0, 1.0).ratio() == 0.5
    assert np.isinf(uut.Spinor(0.0, 1.0).ratio())
