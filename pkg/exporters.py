#!/usr/bin/env python3
"""
exporters.py - CSV and JSON output of runs, and the readers for it.

CSV files are written through pandas with 17 significant digits, so equal
inputs give byte-identical files; JSON is written with sorted keys. Complex
numbers go to CSV as re_/im_ column pairs and to JSON as [re, im].

Schemas (CSV_SCHEMA_VERSION 1):
    branches      node, t, x, y, z, label, re_G, im_G, multiple
    locus         t, x, y, z, residual
    pair_locus    t, x, y, z, residual, re_xi0, im_xi0, re_xi1, im_xi1, null_cone
    trajectories  tau, index, re_sigma, im_sigma, class, x, y, z, im_x, im_y, im_z
    fields        t, x, y, z, re_E1..3, im_E1..3, re_H1..3, im_H1..3
"""

from __future__ import annotations

import json
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

import numpy as np
import pandas as pd

from caustics import LocusFrame, PairSingularFrame
from congruence import BranchField
from uwl import ConservationReport, Evolution, Event, ImplicitTrack, Photon

log = logging.getLogger(__name__)

CSV_SCHEMA_VERSION = 1
FLOAT_FORMAT = "%.17g"


def write_csv(df: pd.DataFrame, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    df.to_csv(path, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    log.info("wrote %d rows to %s", len(df), path)
    return path


def read_csv(path) -> pd.DataFrame:
    return pd.read_csv(path)


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (complex, np.complexfloating)):
        return [_jsonable(float(obj.real)), _jsonable(float(obj.imag))]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(payload: Any, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8") as handle:
        json.dump(_jsonable(payload), handle, indent=2, sort_keys=True)
        handle.write("\n")
    log.info("wrote %s", path)
    return path


def read_json(path) -> Any:
    with Path(path).open(encoding="utf-8") as handle:
        return json.load(handle)


def _complex(pair) -> complex:
    if pair is None:
        return complex(np.nan, np.nan)
    re, im = (np.nan if v is None else v for v in pair)
    return complex(re, im)


# --- Tables -------------------------------------------------------------------------


def branches_frame(bf: BranchField) -> pd.DataFrame:
    rows = []
    for node, p, G, label, multiple in bf.rows():
        rows.append({"node": node, "t": p[0], "x": p[1], "y": p[2], "z": p[3], "label": label,
                     "re_G": G.real, "im_G": G.imag, "multiple": multiple})
    return pd.DataFrame(rows, columns=["node", "t", "x", "y", "z", "label", "re_G", "im_G", "multiple"])


def locus_frame(frames: Iterable[LocusFrame]) -> pd.DataFrame:
    cols = ["t", "x", "y", "z", "residual"]
    rows = []
    for f in frames:
        for p, res in zip(f.points, f.residuals):
            rows.append(dict(zip(cols, [p[0], p[1], p[2], p[3], res])))
    return pd.DataFrame(rows, columns=cols)


def pair_locus_frame(frame: PairSingularFrame) -> pd.DataFrame:
    cols = ["t", "x", "y", "z", "residual", "re_xi0", "im_xi0", "re_xi1", "im_xi1", "null_cone"]
    rows = []
    for p, res, xi, cone in zip(frame.points, frame.residuals, frame.spinors, frame.null_cone):
        rows.append(dict(zip(cols, [p[0], p[1], p[2], p[3], res, xi[0].real, xi[0].imag, xi[1].real, xi[1].imag, abs(cone)])))
    return pd.DataFrame(rows, columns=cols)


TRAJECTORY_COLUMNS = ["tau", "index", "re_sigma", "im_sigma", "class", "x", "y", "z", "im_x", "im_y", "im_z"]


def trajectories_frame(run: Evolution) -> pd.DataFrame:
    pos = run.positions()
    rows = []
    for k, tau in enumerate(run.taus):
        for i, s in enumerate(run.trajectories[k]):
            p = pos[k, i]
            rows.append(dict(zip(TRAJECTORY_COLUMNS, [tau, i, s.real, s.imag, run.classes[k, i],
                                                      p[1].real, p[2].real, p[3].real, p[1].imag, p[2].imag, p[3].imag])))
    return pd.DataFrame(rows, columns=TRAJECTORY_COLUMNS)


def implicit_frame(track: ImplicitTrack, real_eps: float) -> pd.DataFrame:
    """Eliminant roots over time (the x coordinate of each particle)."""
    rows = []
    for k, t in enumerate(track.tracking.t):
        for i, x in enumerate(track.tracking.trajectories[k]):
            cls = "inf" if not np.isfinite(x) else ("R" if abs(x.imag) <= real_eps * (1.0 + abs(x)) else "C")
            rows.append({"t": t, "index": i, "re_x": x.real, "im_x": x.imag, "class": cls})
    return pd.DataFrame(rows, columns=["t", "index", "re_x", "im_x", "class"])


def fields_frame(points: np.ndarray, E: np.ndarray, H: np.ndarray) -> pd.DataFrame:
    data: Dict[str, np.ndarray] = {"t": points[:, 0], "x": points[:, 1], "y": points[:, 2], "z": points[:, 3]}
    for name, V in (("E", E), ("H", H)):
        for part, fn in (("re", np.real), ("im", np.imag)):
            for a in range(3):
                data[f"{part}_{name}{a + 1}"] = fn(V[:, a])
    return pd.DataFrame(data)


# --- Events and reports ------------------------------------------------------------


def events_payload(events: Sequence[Event], photons: Sequence[Photon] = ()) -> Dict[str, Any]:
    return {
        "events": [{"time": e.time, "kind": e.kind, "participants": list(e.participants), "location": e.location} for e in events],
        "photons": [{"time": p.time, "sigma": p.sigma, "source": p.source, "observer": p.observer, "interval": p.interval} for p in photons],
    }


def write_events(events: Sequence[Event], path, photons: Sequence[Photon] = ()) -> Path:
    return write_json(events_payload(events, photons), path)


def read_events(path) -> List[Event]:
    data = read_json(path)
    return [Event(e["time"], e["kind"], tuple(e["participants"]), _complex(e["location"])) for e in data["events"]]


def conservation_payload(report: ConservationReport) -> Dict[str, Any]:
    return {
        "deviations": report.deviations,
        "complete": report.complete,
        "conservative": report.conservative,
        "flags": report.flags,
        "eps_real": report.eps_real,
        "notes": list(report.notes),
        "momentum_start": report.momentum[0],
        "momentum_end": report.momentum[-1],
        "angular_momentum_start": report.angular_momentum[0],
        "angular_momentum_end": report.angular_momentum[-1],
    }


def manifest_payload(
    mode: str,
    config_sha256: str,
    tolerances: Dict[str, Any],
    outputs: Sequence[Path],
    status: str,
    tool_version: str,
    error: Optional[str] = None,
    summary: Optional[Dict[str, Any]] = None,
) -> Dict[str, Any]:
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "tool_version": tool_version,
        "mode": mode,
        "config_sha256": config_sha256,
        "tolerances": tolerances,
        "outputs": sorted(Path(p).name for p in outputs),
        "status": status,
        "error": error,
        "summary": summary or {},
    }
