#!/usr/bin/env python3
"""
adw.py - batch runner for the algebrodynamics workbench.

Usage:
    adw <mode> --config run.ini [--set section.key=value]... [--log-level DEBUG]

    congruence   branch field of source.genfunc on the grid      -> branches.csv
    caustics     caustic locus (genfunc) or singular points (pair) -> locus.csv / pair_locus.csv
    fields       first-type field strength on the grid, charges   -> fields.csv
    uwl          duplicons of source.worldline, or source.implicit -> trajectories.csv, events.json, ...
    render       polarization pattern on a sphere                  -> polarization.svg

Every run writes manifest.json next to its outputs. Exit codes: 0 ok,
2 configuration or parse error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from scipy.special import roots_legendre

import exporters
import solutions
from caustics import extract_pair_singular, track_locus
from congruence import GenFuncPair, GenFuncProjective, branch_continue, branch_sampler, solve_branches
from fields import charge_flux, em_field_I, em_field_II, phi_sampler
from numerics import chordal
from render import render_polarization
from runconfig import ConfigError, RunConfig, read_config
from uwl import ImplicitUWL, PolyWorldline, cluster_metrics, conservation_report, evolve, implicit_track

__version__ = "0.1.0"

log = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


class Run:
    """Outputs and summary of one mode run; the manifest is written from it."""

    def __init__(self, config: RunConfig) -> None:
        self.config = config
        self.outputs: List[Path] = []
        self.summary: Dict[str, Any] = {}
        self.partial = False

    def csv(self, df: pd.DataFrame, name: str) -> None:
        self.outputs.append(exporters.write_csv(df, self.config.output.path(name)))

    def json(self, payload: Any, name: str) -> None:
        self.outputs.append(exporters.write_json(payload, self.config.output.path(name)))


# --- Modes ------------------------------------------------------------------------------


def _projective(config: RunConfig) -> GenFuncProjective:
    return GenFuncProjective.from_text(config.source.genfunc_text())


def run_congruence(run: Run) -> None:
    cfg = run.config
    pi = _projective(cfg)
    frames, previous = [], None
    monodromy = unmatched = 0
    for t in cfg.grid.slice_times():
        bf = branch_continue(pi, cfg.grid.grid().at_time(t), cfg.tol, cfg.run.workers, previous)
        frames.append(exporters.branches_frame(bf))
        monodromy += len(bf.monodromy)
        unmatched += int(np.sum(bf.unmatched))
        previous = bf
    df = pd.concat(frames, ignore_index=True)
    run.csv(df, "branches.csv")
    run.summary.update(rows=len(df), branches=previous.n_branches, monodromy_plaquettes=monodromy, unmatched_nodes=unmatched)


def run_caustics(run: Run) -> None:
    cfg = run.config
    grid = cfg.grid.grid()
    texts = cfg.source.pair_texts()
    if texts is not None:
        pair = GenFuncPair.from_text(*texts)
        frames = [extract_pair_singular(pair, grid, t, cfg.tol) for t in cfg.grid.slice_times()]
        df = pd.concat([exporters.pair_locus_frame(f) for f in frames], ignore_index=True)
        run.csv(df, "pair_locus.csv")
        cone = df["null_cone"].to_numpy()
        run.summary.update(points=len(df), max_null_cone=float(cone.max()) if len(cone) else 0.0)
        return
    pi = _projective(cfg)
    frames = track_locus(pi, grid, cfg.grid.slice_times(), cfg.tol)
    df = exporters.locus_frame(frames)
    run.csv(df, "locus.csv")
    run.summary.update(points=len(df), per_slice=[len(f) for f in frames])


def _branch_near(pi: GenFuncProjective, X: np.ndarray, g: complex, cfg: RunConfig):
    """Sampler of the branch whose value at X is closest to g."""
    finite = np.array([r.value for r in solve_branches(pi, X, cfg.tol).finite()])
    return branch_sampler(pi, X, int(np.argmin(chordal(finite, g))), cfg.tol)


def run_fields(run: Run) -> None:
    cfg = run.config
    pi = _projective(cfg)
    grid = cfg.grid.grid()
    bf = branch_continue(pi, grid, cfg.tol, cfg.run.workers)
    if cfg.fields.branch >= bf.n_branches:
        raise ConfigError(f"only {bf.n_branches} branches", "fields.branch")
    pts = grid.points()
    E = np.full((len(pts), 3), np.nan + 0j)
    H = np.full((len(pts), 3), np.nan + 0j)
    failed = 0
    for k, X in enumerate(pts):
        g = bf.values[k, cfg.fields.branch]
        if bf.degenerate[k] or not np.isfinite(g):
            failed += 1
            continue
        try:
            F = em_field_I(phi_sampler(_branch_near(pi, X, g, cfg)), X)
        except (ArithmeticError, ValueError) as exc:
            log.debug("no field at %s: %s", X.tolist(), exc)
            failed += 1
            continue
        E[k], H[k] = F.E, F.H
    run.csv(exporters.fields_frame(pts, E, H), "fields.csv")
    charges = []
    center = np.asarray(cfg.fields.center, dtype=float)
    c0 = roots_legendre(cfg.fields.order)[0][0]
    for radius in cfg.fields.radii:
        start = center + np.array([0.0, radius * np.sqrt(1 - c0 * c0), 0.0, radius * c0])
        phi = phi_sampler(branch_sampler(pi, start, cfg.fields.branch, cfg.tol, follow=True))
        charges.append({"radius": radius, "q": charge_flux(lambda X: em_field_I(phi, X), center, radius, cfg.fields.order)})
    run.summary.update(points=len(pts), failed_points=failed, charges=charges)
    run.partial = failed > 0


def run_uwl(run: Run) -> None:
    cfg = run.config
    taus = cfg.uwl.taus()
    if cfg.source.implicit:
        system = ImplicitUWL.from_text(cfg.source.implicit_texts())
        track = implicit_track(system, taus, cfg.tol)
        run.csv(exporters.implicit_frame(track, cfg.tol.real_eps), "implicit.csv")
        run.json(exporters.events_payload(track.events), "events.json")
        run.summary.update(events=len(track.events))
        return
    wl = PolyWorldline.from_text(cfg.source.worldline_texts())
    observer = PolyWorldline.from_text(cfg.source.observer_texts())
    evo = evolve(wl, observer, taus, cfg.tol)
    report = conservation_report(evo, cfg.tol)
    run.csv(exporters.trajectories_frame(evo), "trajectories.csv")
    run.json(exporters.events_payload(evo.events, evo.photons), "events.json")
    run.json(exporters.conservation_payload(report), "conservation.json")
    spatial = evo.positions()[..., 1:]
    clusters = cluster_metrics(spatial, cfg.uwl.cluster_radius)
    run.csv(pd.DataFrame({"tau": taus, "min_distance": clusters.min_distance, "pair_count": clusters.pair_count,
                          "cluster_count": clusters.cluster_count}), "clusters.csv")
    run.summary.update(events=len(evo.events), flags=report.flags, deviations=report.deviations)


def run_render(run: Run) -> None:
    cfg = run.config.render
    if cfg.field == "screw":
        alpha, beta = solutions.screw_potentials()

        def E(X):
            return em_field_II(alpha, beta, X).E
    else:
        phi = phi_sampler(solutions.stereo_branch(+1))

        def E(X):
            return em_field_I(phi, X).E

    plot = render_polarization(E, cfg.radius, run.config.output.path("polarization.svg"), cfg.n_theta, cfg.n_phi)
    run.outputs.append(plot.path)
    run.summary.update(arrows=len(plot))


MODES = {
    "congruence": run_congruence,
    "caustics": run_caustics,
    "fields": run_fields,
    "uwl": run_uwl,
    "render": run_render,
}


# --- Entry point ------------------------------------------------------------------------


def execute(config: RunConfig) -> int:
    """Run the configured mode and write the manifest; returns the exit code."""
    run = Run(config)
    status, error, code = "ok", None, EXIT_OK
    try:
        MODES[config.run.mode](run)
        if run.partial:
            status = "partial"
    except ValueError as exc:
        status, error, code = "failed", str(exc), EXIT_CONFIG
        log.error("%s", exc)
    except ArithmeticError as exc:
        status, error, code = ("partial" if run.outputs else "failed"), str(exc), EXIT_NUMERIC
        log.error("numerical failure: %s", exc)
    payload = exporters.manifest_payload(
        config.run.mode, config.sha256(), dataclasses.asdict(config.tol), run.outputs, status, __version__, error, run.summary
    )
    exporters.write_json(payload, config.output.path("manifest.json"))
    log.info("%s run %s: %d output(s)", config.run.mode, status, len(run.outputs))
    return code


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="adw", description="Algebrodynamics workbench batch runner.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("mode", choices=sorted(MODES))
    parser.add_argument("--config", required=True, metavar="INI")
    parser.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
    parser.add_argument("--log-level", default="INFO", choices=["DEBUG", "INFO", "WARNING", "ERROR"])
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    try:
        config = read_config(args.config, [*args.overrides, f"run.mode={args.mode}"])
    except ConfigError as exc:
        log.error("invalid configuration: %s", exc)
        return EXIT_CONFIG
    return execute(config)


if __name__ == "__main__":
    sys.exit(main())
