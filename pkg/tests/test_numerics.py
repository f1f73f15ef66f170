import sys
from pathlib import Path

import numpy as np
import pytest
import sympy as sp
from numpy.polynomial import polynomial as P

# Ensure the repository root is importable when running this file standalone
HERE = Path(__file__).resolve().parent
REPO_ROOT = HERE.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

import numerics as uut  # uut = unit under test


def _sorted(values):
    return np.array(sorted(values, key=lambda z: (round(z.real, 9), round(z.imag, 9))))


# --- roots -------------------------------------------------------------------------


def test_roots_of_cubic():
    # (x - 1)(x - 2)(x - 3)
    rs = uut.poly_roots(uut.CPoly([-6, 11, -6, 1]))
    assert rs.count() == 3
    assert np.allclose(_sorted(rs.expanded()), [1, 2, 3], atol=1e-12)


def test_complex_roots():
    rs = uut.poly_roots(uut.CPoly([1, 0, 1]))          # x^2 + 1
    assert np.allclose(_sorted(rs.expanded()), [-1j, 1j], atol=1e-12)


def test_double_root_has_multiplicity():
    rs = uut.poly_roots(uut.CPoly([1, -2, 1]))         # (x - 1)^2
    finite = rs.finite()
    assert len(finite) == 1
    assert finite[0].multiplicity == 2
    assert abs(finite[0].value - 1) < 1e-6
    assert rs.has_multiple()


@pytest.mark.parametrize(
    "coeffs, root, rest",
    [
        ([-1, 3, -3, 1], 1.0, []),                               # (x - 1)^3
        (P.polyfromroots([1j, 1j, 1j, -2.0]), 1j, [-2.0]),      # (x - i)^3 (x + 2)
    ],
)
def test_triple_root_is_reported_once(coeffs, root, rest):
    p = uut.CPoly(coeffs)
    rs = uut.poly_roots(p)
    triple = [r for r in rs.finite() if r.multiplicity == 3]
    assert len(triple) == 1
    assert abs(triple[0].value - root) < 1e-7
    simple = [r.value for r in rs.finite() if r.multiplicity == 1]
    assert np.allclose(simple, rest, atol=1e-9)
    assert rs.count() == p.degree
    assert rs.has_multiple()
    assert abs(uut.discriminant(p)) < 1e-6


def test_close_simple_roots_stay_apart():
    # (x - 1)(x - 1 - 1e-4)(x + 1)
    p = uut.CPoly(P.polyfromroots([1.0, 1.0 + 1e-4, -1.0]))
    rs = uut.poly_roots(p)
    assert [r.multiplicity for r in rs.finite()] == [1, 1, 1]
    assert not rs.has_multiple()


def test_root_count_matches_degree():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 9))
        c = rng.normal(size=n + 1) + 1j * rng.normal(size=n + 1)
        rs = uut.poly_roots(uut.CPoly(c))
        assert rs.count() == n
        assert not rs.has_multiple()


def test_degree_drop_reports_infinity():
    rs = uut.poly_roots(uut.CPoly([-1, 1, 1e-20]))
    assert rs.degree == 2
    assert rs.count() == 2
    assert sum(r.at_infinity for r in rs.roots) == 1
    assert abs(rs.finite()[0].value - 1) < 1e-12


def test_identically_zero_polynomial():
    with pytest.raises(ValueError, match="identically zero"):
        uut.poly_roots(uut.CPoly([0, 0, 0]))


def test_constant_polynomial():
    with pytest.raises(ValueError):
        uut.poly_roots(uut.CPoly([3.0]))


def test_roots_are_seeded():
    p = uut.CPoly(np.random.default_rng(3).normal(size=7) + 1j * np.random.default_rng(4).normal(size=7))
    a = uut.poly_roots(p).expanded()
    b = uut.poly_roots(p).expanded()
    assert np.array_equal(a, b)


def test_random_polynomial_residuals():
    rng = np.random.default_rng(0)
    for _ in range(20):
        c = rng.normal(size=7) + 1j * rng.normal(size=7)
        p = uut.CPoly(c)
        for r in uut.poly_roots(p).expanded():
            assert abs(p(r)) <= 1e-9 * np.sum(np.abs(c)) * (1 + abs(r)) ** 6


# --- resultants ----------------------------------------------------------------------


def test_resultant_of_shared_root_vanishes():
    p = uut.CPoly([-1, 0, 1])                          # x^2 - 1
    q = uut.CPoly([-1, 1])                             # x - 1
    assert abs(uut.resultant(p, q)) < 1e-12


def test_resultant_value():
    # Res(x - a, x - b) = b - a up to sign convention: here a = 2, b = 5
    r = uut.resultant(uut.CPoly([-2, 1]), uut.CPoly([-5, 1]))
    assert abs(abs(r) - 3) < 1e-12


@pytest.mark.parametrize("t", [-2.0, -0.5, 0.5, 3.0])
def test_quadratic_discriminant(t):
    # disc(x^2 - t) = 4t
    assert abs(uut.discriminant(uut.CPoly([-t, 0, 1])) - 4 * t) < 1e-12


def test_discriminant_survives_leading_zero():
    # x - 1 read as a quadratic has a root at infinity, not a double root
    assert abs(uut.discriminant(uut.CPoly([-1, 1, 0]))) > 0.5


def test_discriminant_needs_degree_two():
    with pytest.raises(ValueError):
        uut.discriminant(uut.CPoly([1, 1]))


def test_discriminant_many_matches_scalar():
    rng = np.random.default_rng(1)
    C = rng.normal(size=(5, 4)) + 1j * rng.normal(size=(5, 4))
    many = uut.discriminant_many(C)
    for row, d in zip(C, many):
        assert abs(uut.discriminant(uut.CPoly(row)) - d) <= 1e-9 * (1 + abs(d))


def test_eliminate_matches_symbolic():
    x, y = sp.symbols("x y")
    p = sp.Poly(x**2 + y**2 - 1, x, y)
    q = sp.Poly(x - y, x, y)
    A = np.zeros((3, 3), dtype=complex)
    A[2, 0] = A[0, 2] = 1
    A[0, 0] = -1
    B = np.zeros((2, 2), dtype=complex)
    B[1, 0] = 1
    B[0, 1] = -1
    numeric = uut.eliminate(A, B)
    exact = sp.Poly(uut.eliminate_symbolic(p, q, y), x)
    expected = np.array([complex(c) for c in reversed(exact.all_coeffs())])
    got = numeric.trimmed().coeffs
    assert np.allclose(got, expected, atol=1e-12) or np.allclose(got, -expected, atol=1e-12)


# --- grids ------------------------------------------------------------------------------


def test_grid_points_and_contains():
    g = uut.Grid4.cube(-1, 1, 5, t=0.5)
    pts = g.points()
    assert pts.shape == (125, 4)
    assert np.all(pts[:, 0] == 0.5)
    assert np.allclose(g.axis(1), np.linspace(-1, 1, 5))
    assert g.contains(np.array([[0, 0.9, 0, 0], [0, 1.1, 0, 0]])).tolist() == [True, False]


def test_grid_at_time():
    g = uut.Grid4.cube(-1, 1, 3).at_time(2.0)
    assert g.shape == (1, 3, 3, 3)
    assert g.origin[0] == 2.0


def test_grid_rejects_bad_spacing():
    with pytest.raises(ValueError):
        uut.Grid4((0, 0, 0, 0), (1, 0, 1, 1), (1, 2, 2, 2))


# --- finite differences ------------------------------------------------------------


def _f(X):
    t, x, y, z = X
    return np.exp(1j * t) * x**2 + y * z


def _grad_f(X):
    t, x, y, z = X
    return np.array([1j * np.exp(1j * t) * x**2, 2 * np.exp(1j * t) * x, z, y])


def test_fd_gradient_accuracy():
    X = np.array([0.3, 0.7, -0.2, 1.1])
    assert np.allclose(uut.fd_gradient(_f, X, richardson=True), _grad_f(X), atol=1e-9)


def test_fd_convergence_is_second_order():
    X = np.array([0.3, 0.7, -0.2, 1.1])
    errs = [np.max(np.abs(uut.fd_gradient(_f, X, h) - _grad_f(X))) for h in (1e-2, 5e-3, 2.5e-3)]
    ratios = [errs[0] / errs[1], errs[1] / errs[2]]
    assert all(3.5 < r < 4.5 for r in ratios)


def test_fd_second():
    X = np.array([0.0, 0.5, 0.0, 0.0])
    d2 = uut.fd_second(_f, X, richardson=True)
    assert np.allclose(d2, [-(0.5**2), 2, 0, 0], atol=1e-7)


def test_stencil_error_wraps_sampler_failure():
    def bad(X):
        if X[1] > 0:
            raise ZeroDivisionError("pole")
        return 0.0

    with pytest.raises(uut.StencilError):
        uut.fd_gradient(bad, np.zeros(4), h=1e-3)


def test_scalar_field_prefers_analytic_gradient():
    calls = []

    def grad(X):
        calls.append(X)
        return _grad_f(X)

    field = uut.ScalarField(_f, grad)
    X = np.array([0.1, 0.2, 0.3, 0.4])
    assert np.allclose(field.gradient(X), _grad_f(X))
    assert len(calls) == 1


# --- tracking -------------------------------------------------------------------------------


def test_match_roots_permutation():
    prev = np.array([1.0, 2.0, 3.0], dtype=complex)
    cur = np.array([3.01, 0.99, 2.02], dtype=complex)
    perm = uut.match_roots(prev, cur)
    assert perm.tolist() == [1, 2, 0]


def test_root_track_collision_at_zero():
    # x^2 - t: real roots for t > 0, a conjugate pair for t < 0
    track = uut.root_track(lambda t: uut.CPoly([-t, 0, 1]), np.linspace(-1, 1, 20))
    collisions = [e for e in track.events if e.kind == "collision"]
    assert len(collisions) == 1
    assert abs(collisions[0].t) < 1e-9
    assert track.trajectories.shape == (20, 2)


def test_root_track_keeps_labels():
    # (x - t)(x - (1 - t)): the two roots approach each other monotonically
    track = uut.root_track(lambda t: uut.CPoly([t * (1 - t), -1, 1]), np.linspace(0, 0.4, 9))
    steps = np.diff(track.trajectories.real, axis=0)
    for k in range(2):
        assert np.all(steps[:, k] > 0) or np.all(steps[:, k] < 0)
    assert not track.events


def test_root_track_degree_drop():
    track = uut.root_track(lambda t: uut.CPoly([-1, 1, t]), [-1.0, 0.0, 1.0])
    kinds = [e.kind for e in track.events]
    assert "degree drop" in kinds


def test_root_track_needs_monotone_grid():
    with pytest.raises(ValueError):
        uut.root_track(lambda t: uut.CPoly([-t, 0, 1]), [0.0, 1.0, 0.5])
