import sys
from pathlib import Path

import numpy as np
import pytest

# Ensure the repository root is importable when running this file standalone
HERE = Path(__file__).resolve().parent
REPO_ROOT = HERE.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

import uwl as uut  # uut = unit under test


@pytest.fixture
def static_wl():
    return uut.PolyWorldline.from_text(["s", "0", "0", "0"])


@pytest.fixture
def parabola():
    # x(s) = (s, s^2, 0, 0)
    return uut.PolyWorldline.from_text(["s", "s^2", "0", "0"])


def _sorted(values):
    return sorted(values, key=lambda z: (round(z.real, 9), round(z.imag, 9)))


# --- worldlines and duplicons ------------------------------------------------------------


def test_worldline_from_text(parabola):
    assert parabola.degree == 2
    assert parabola.is_real()
    assert np.allclose(parabola.at(2.0), [2, 4, 0, 0])
    assert np.allclose(parabola.velocity(2.0), [1, 4, 0, 0])


def test_worldline_validation():
    with pytest.raises(ValueError):
        uut.PolyWorldline.from_text(["s", "0", "0"])
    with pytest.raises(ValueError):
        uut.PolyWorldline.from_text(["1", "0", "0", "0"])
    with pytest.raises(ValueError):
        uut.PolyWorldline.from_text(["s^7", "0", "0", "0"])


def test_inertial_observer():
    obs = uut.PolyWorldline.inertial((0, 0.3, 0, 0), (0.5, 0, 0))
    assert obs.degree == 1
    assert np.allclose(obs.at(2.0), [2.0, 1.3, 0, 0])


def test_light_cone_polynomial(static_wl):
    # (0 - s)^2 - 1 at X = (0, 0, 0, 1)
    L = uut.lce_polynomial(static_wl, (0, 0, 0, 1))
    assert np.allclose(L.coeffs, [-1, 0, 1])


def test_duplicons_of_static_worldline(static_wl):
    dups = uut.duplicons(static_wl, (2, 0, 0, 1))
    assert np.allclose(_sorted([d.sigma for d in dups]), [1, 3])
    assert all(d.cls == "R" for d in dups)


def test_complex_duplicons():
    wl = uut.PolyWorldline.from_text(["s", "0", "0", "i"])
    assert not wl.is_real()
    # s^2 - 1/4 - (0 - i)^2 = s^2 + 3/4
    dups = uut.duplicons(wl, (0, 0.5, 0, 0))
    assert np.allclose(_sorted([d.sigma for d in dups]), [-1j * np.sqrt(0.75), 1j * np.sqrt(0.75)])
    assert all(d.cls == "C" for d in dups)


def test_null_worldline_through_observer():
    wl = uut.PolyWorldline.from_text(["s", "s", "0", "0"])
    with pytest.raises(uut.ObserverOnWorldlineError, match="observer on worldline"):
        uut.lce_polynomial(wl, (0, 0, 0, 0))


def test_classify():
    assert uut.classify(1.0 + 1e-12j, 1e-9) == "R"
    assert uut.classify(1.0 + 1e-3j, 1e-9) == "C"


def test_twistor_of_duplicon(static_wl):
    X = np.array([1.0, 0.0, 0.0, 1.0])
    xi = uut.twistor_of_duplicon(static_wl, X, 0.0)
    assert np.allclose(xi, [0, 1], atol=1e-12)


def test_twistor_of_generic_duplicon(parabola):
    X = np.array([0.5, 0.1, 0.2, -0.3])
    for d in uut.duplicons(parabola, X):
        xi = uut.twistor_of_duplicon(parabola, X, d.sigma)
        diff = X - parabola.at(d.sigma)
        M = np.array([[diff[0] + diff[3], diff[1] + 1j * diff[2]], [diff[1] - 1j * diff[2], diff[0] - diff[3]]])
        assert abs(np.linalg.norm(xi) - 1) < 1e-12
        assert np.max(np.abs(M @ xi)) < 1e-8


def test_twistor_needs_light_cone(static_wl):
    with pytest.raises(uut.NotOnLightConeError, match="not on light cone"):
        uut.twistor_of_duplicon(static_wl, (1.0, 0.0, 0.0, 1.0), 0.5)


def test_twistor_at_coincident_point(static_wl):
    with pytest.raises(uut.CoincidentPointError, match="coincident point"):
        uut.twistor_of_duplicon(static_wl, (0.0, 0.0, 0.0, 0.0), 0.0)


# --- evolution ------------------------------------------------------------------------------


def test_static_worldline_has_no_events(static_wl):
    obs = uut.PolyWorldline.inertial((0, 0, 0, 1), (0, 0, 0))
    run = uut.evolve(static_wl, obs, np.linspace(0, 3, 16))
    assert run.events == []
    assert run.flags == []
    # duplicons at tau - 1 and tau + 1
    assert np.allclose(np.sort(run.trajectories.real, axis=1), run.taus[:, None] + [-1, 1])
    assert np.all(run.classes == "R")
    assert run.positions().shape == (16, 2, 4)


def test_observer_on_worldline_is_flagged(static_wl):
    obs = uut.PolyWorldline.inertial((0, 0, 0, 0), (0, 0, 0))
    run = uut.evolve(static_wl, obs, np.linspace(0, 1, 5))
    assert "observer on worldline" in run.flags


def test_creation_and_annihilation(parabola):
    # (tau - s)^2 - s^4 factors into s^2 + s - tau (real for tau > -1/4)
    # and s^2 - s + tau (real for tau < 1/4)
    obs = uut.PolyWorldline.inertial((0, 0, 0, 0), (0, 0, 0))
    run = uut.evolve(parabola, obs, np.linspace(-1, 1, 21))
    kinds = {(e.kind, round(e.time, 6)) for e in run.events if e.kind in ("creation", "annihilation")}
    assert kinds == {("creation", -0.25), ("annihilation", 0.25)}


def test_photons_are_null(parabola):
    obs = uut.PolyWorldline.inertial((0, 0, 0, 0), (0, 0, 0))
    run = uut.evolve(parabola, obs, np.linspace(-1, 1, 21))
    assert run.photons
    for ph in run.photons:
        assert abs(ph.interval) < 1e-4
        assert np.allclose(ph.observer, obs.at(ph.time))


@pytest.fixture(scope="module")
def inertial_run():
    # x(s) = (s, s^2, 0, 0) seen from (tau, 0.3 + 0.5 tau, 0, 0)
    wl = uut.PolyWorldline.from_text(["s", "s^2", "0", "0"])
    obs = uut.PolyWorldline.inertial((0, 0.3, 0, 0), (0.5, 0, 0))
    return uut.evolve(wl, obs, np.linspace(0, 10, 200))


def test_inertial_observer_conserves(inertial_run):
    report = uut.conservation_report(inertial_run)
    assert report.complete and report.conservative
    assert report.deviations["momentum"] < 1e-6
    assert report.deviations["angular_momentum"] < 1e-6
    # the sums are 4c for the x momentum and 2/a for M^01
    assert np.allclose(report.momentum[:, 1], 2.0, atol=1e-6)
    assert np.allclose(report.momentum[:, 0], 0.0, atol=1e-6)
    assert np.allclose(np.abs(report.angular_momentum[:, 0, 1]), 2.0, atol=1e-6)


def test_inertial_run_annihilates_at_the_double_root(inertial_run):
    # s^2 - s + 0.5 tau - 0.3 has a double root at tau = 1.1
    ann = [e for e in inertial_run.events if e.kind == "annihilation"]
    assert len(ann) == 1
    assert abs(ann[0].time - 1.1) < 1e-4
    assert not [e for e in inertial_run.events if e.kind == "creation"]


def test_accelerated_observer_is_diagnostic(parabola):
    obs = uut.PolyWorldline.from_text(["s", "0.3 + 0.5*s^2", "0", "0"])
    run = uut.evolve(parabola, obs, np.linspace(0, 10, 200))
    report = uut.conservation_report(run)
    assert "accelerated observer: conservation is diagnostic only" in report.flags
    assert not report.conservative
    assert report.deviations["momentum"] > 1e-3


def test_energy_is_the_unconjugated_square(static_wl):
    # both duplicons move with xdot = (1, 0, 0, 0) and contribute 1/2 each
    obs = uut.PolyWorldline.inertial((0, 0.3, 0, 0), (0, 0, 0))
    report = uut.conservation_report(uut.evolve(static_wl, obs, np.linspace(0, 2, 11)))
    assert np.allclose(report.energy, 1.0, atol=1e-12)
    assert np.allclose(report.momentum, [2, 0, 0, 0], atol=1e-12)
    assert "without conjugation" in report.notes[0]


def _random_worldline(rng):
    degree = int(rng.integers(1, 5))
    coords = [0.5 * rng.normal(size=degree + 1) for _ in range(4)]
    coords[0][1] = 1.0
    return uut.PolyWorldline(coords)


def test_random_worldlines_conserve_for_inertial_observers():
    rng = np.random.default_rng(29)
    for _ in range(5):
        wl = _random_worldline(rng)
        obs = uut.PolyWorldline.inertial(rng.normal(size=4), 0.4 * rng.uniform(-1, 1, size=3))
        report = uut.conservation_report(uut.evolve(wl, obs, np.linspace(0, 10, 200)))
        assert report.complete and report.conservative
        assert report.deviations["momentum"] <= 1e-6
        assert report.deviations["angular_momentum"] <= 1e-6


def test_complex_point_interval():
    assert uut.complex_point_interval([1, 1, 0, 0]) == 0
    assert uut.complex_point_interval([1j, 0, 0, 0]) == -1


# --- implicit systems -----------------------------------------------------------------------


@pytest.fixture
def parabola_system():
    return uut.ImplicitUWL.from_text(["x^2 - t", "y", "z"])


def test_implicit_real_roots(parabola_system):
    roots = uut.implicit_roots(parabola_system, 1.0)
    assert len(roots) == 2
    assert all(r.cls == "R" for r in roots)
    xs = sorted(r.point[0].real for r in roots)
    assert np.allclose(xs, [-1, 1])
    assert all(np.allclose(r.point[1:], 0) for r in roots)


def test_implicit_complex_roots(parabola_system):
    roots = uut.implicit_roots(parabola_system, -1.0)
    assert len(roots) == 2
    assert all(r.cls == "C" for r in roots)
    assert np.allclose(sorted(r.point[0].imag for r in roots), [-1, 1])


def test_implicit_track_creation(parabola_system):
    track = uut.implicit_track(parabola_system, np.linspace(-1, 1, 20))
    assert [e.kind for e in track.events] == ["creation"]
    assert abs(track.events[0].time) < 1e-9


def test_non_generic_system():
    system = uut.ImplicitUWL.from_text(["x - y", "x - y", "z"])
    with pytest.raises(uut.NonGenericSystemError, match="non-generic system"):
        uut.implicit_roots(system, 0.0)


def test_implicit_system_needs_three():
    with pytest.raises(ValueError):
        uut.ImplicitUWL.from_text(["x", "y"])


# --- clustering -----------------------------------------------------------------------------


def test_single_duplicon_has_no_pairs():
    m = uut.cluster_metrics(np.zeros((3, 1, 3)))
    assert m.pair_count.tolist() == [0, 0, 0]
    assert m.cluster_count.tolist() == [1, 1, 1]
    assert np.all(np.isinf(m.min_distance))


def test_three_clusters():
    pts = np.array([[0, 0, 0], [0.1, 0, 0], [5, 0, 0], [5.1, 0, 0], [10, 0, 0]], dtype=float)
    m = uut.cluster_metrics(pts, radius=0.5)
    assert m.cluster_count[0] == 3
    assert m.pair_count[0] == 2
    assert abs(m.min_distance[0] - 0.1) < 1e-12


def test_converging_pair():
    gaps = np.linspace(2.0, 0.2, 10)
    pos = np.zeros((10, 2, 3))
    pos[:, 0, 0] = -gaps / 2
    pos[:, 1, 0] = gaps / 2
    m = uut.cluster_metrics(pos, radius=0.5)
    assert np.allclose(m.min_distance, gaps)
    assert m.cluster_count[0] == 2 and m.cluster_count[-1] == 1
    assert m.pair_count[-1] == 1


def test_complex_positions_use_imaginary_parts():
    pos = np.array([[[0, 0, 0], [1j, 0, 0]]])
    m = uut.cluster_metrics(pos, radius=0.5)
    assert abs(m.min_distance[0] - 1) < 1e-12
    assert m.cluster_count[0] == 2


def test_non_finite_rows_are_ignored():
    pos = np.array([[[0, 0, 0], [np.nan, 0, 0], [0.2, 0, 0]]])
    m = uut.cluster_metrics(pos, radius=0.5)
    assert m.cluster_count[0] == 1
    assert np.isinf(m.nearest[0, 1])
