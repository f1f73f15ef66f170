import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Ensure the repository root is importable when running this file standalone
HERE = Path(__file__).resolve().parent
REPO_ROOT = HERE.parent
if str(REPO_ROOT) not in sys.path:
    sys.path.insert(0, str(REPO_ROOT))

import exporters as uut  # uut = unit under test
import solutions
from congruence import branch_continue
from numerics import Grid4
from uwl import Event, PolyWorldline, evolve


@pytest.fixture
def frame():
    return pd.DataFrame({"a": [0.1, 1 / 3, -2.5e-17], "b": ["R", "C", "inf"]})


def test_csv_is_exact(tmp_path, frame):
    path = uut.write_csv(frame, tmp_path / "sub" / "t.csv")
    back = uut.read_csv(path)
    assert back["a"].tolist() == frame["a"].tolist()
    assert back["b"].tolist() == ["R", "C", "inf"]


def test_csv_is_deterministic(tmp_path, frame):
    a = uut.write_csv(frame, tmp_path / "a.csv").read_bytes()
    b = uut.write_csv(frame.copy(), tmp_path / "b.csv").read_bytes()
    assert a == b
    assert b"\r\n" not in a


def test_json_encoding(tmp_path):
    payload = {"z": 1 + 2j, "nan": float("nan"), "arr": np.array([1.5, np.inf]), "n": np.int64(3), "flag": np.bool_(True)}
    data = uut.read_json(uut.write_json(payload, tmp_path / "p.json"))
    assert data == {"z": [1.0, 2.0], "nan": None, "arr": [1.5, None], "n": 3, "flag": True}


def test_json_keys_are_sorted(tmp_path):
    text = uut.write_json({"b": 1, "a": 2}, tmp_path / "p.json").read_text(encoding="utf-8")
    assert text.index('"a"') < text.index('"b"')


def test_events_round_trip(tmp_path):
    events = [Event(0.25, "annihilation", (0, 1), 0.5 + 0j), Event(-0.25, "creation", (2, 3), -0.5 + 1e-9j)]
    back = uut.read_events(uut.write_events(events, tmp_path / "events.json"))
    assert back == events


def test_branches_frame_skips_degenerate_nodes():
    # the 3^3 grid on [-1, 1] has the degenerate origin at its centre
    bf = branch_continue(solutions.static_pi(), Grid4.cube(-1, 1, 3))
    df = uut.branches_frame(bf)
    assert list(df.columns) == ["node", "t", "x", "y", "z", "label", "re_G", "im_G", "multiple"]
    assert len(df) == 2 * 26
    assert not ((df["x"] == 0) & (df["y"] == 0) & (df["z"] == 0)).any()


def test_trajectories_frame():
    wl = PolyWorldline.from_text(["s", "0", "0", "0"])
    obs = PolyWorldline.inertial((0, 0, 0, 1), (0, 0, 0))
    df = uut.trajectories_frame(evolve(wl, obs, np.linspace(0, 1, 4)))
    assert list(df.columns) == uut.TRAJECTORY_COLUMNS
    assert len(df) == 8
    assert set(df["class"]) == {"R"}
    assert np.allclose(df["im_sigma"], 0)


def test_fields_frame_columns():
    pts = np.zeros((2, 4))
    E = np.array([[1 + 1j, 2, 3], [4, 5, 6j]])
    df = uut.fields_frame(pts, E, 1j * E)
    assert df.loc[0, "re_E1"] == 1 and df.loc[0, "im_E1"] == 1
    assert df.loc[1, "im_E3"] == 6
    assert df.loc[0, "re_H1"] == -1
    assert len(df.columns) == 4 + 12


def test_manifest_payload():
    m = uut.manifest_payload("uwl", "ab" * 32, {"real_eps": 1e-9}, [Path("o/b.csv"), Path("o/a.json")], "ok", "0.1.0")
    assert m["schema_version"] == uut.CSV_SCHEMA_VERSION
    assert m["outputs"] == ["a.json", "b.csv"]
    assert m["error"] is None and m["summary"] == {}
