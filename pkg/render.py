#!/usr/bin/env python3
"""
render.py - polarization pattern of an electric field on a sphere.

The tangent part of Re E is sampled on a (theta, phi) grid over a sphere and
drawn as unit arrows on an orthographic view from +x. Arrow directions are
also returned as angles in the (theta^, phi^) basis, so the pattern can be
checked without reading the SVG. Points with theta > pi - 0.1 are left out:
the singular half-axis of the stereographic branch runs along -z.

The SVG carries no date and a fixed hash salt, so equal input gives equal
bytes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from fields import point_from_spherical, spherical_frame  # noqa: E402

log = logging.getLogger(__name__)

POLE_EXCLUSION = 0.1
SVG_SALT = "adw-polarization"


@dataclass
class PolarizationPlot:
    path: Path
    theta: np.ndarray                    # (M,) arrow base points
    phi: np.ndarray
    angle: np.ndarray                    # atan2(E_phi, E_theta) of tangent Re E
    magnitude: np.ndarray

    def __len__(self) -> int:
        return len(self.theta)


def sphere_grid(n_theta: int, n_phi: int) -> tuple:
    """Interior theta samples (poles excluded) and n_phi azimuths in [-pi, pi)."""
    if n_theta < 1 or n_phi < 1:
        raise ValueError("empty grid: need at least one theta and one phi sample")
    theta = np.linspace(0.0, np.pi, n_theta + 2)[1:-1]
    theta = theta[theta <= np.pi - POLE_EXCLUSION]
    phi = -np.pi + 2 * np.pi * np.arange(n_phi) / n_phi
    return theta, phi


def tangent_samples(E: Callable, radius: float, theta: Sequence[float], phi: Sequence[float], center=(0.0, 0.0, 0.0, 0.0)):
    """(theta, phi, E_theta, E_phi, |Re E|) rows."""
    center = np.asarray(center, dtype=float)
    rows = []
    for th in theta:
        for ph in phi:
            X = center + point_from_spherical(radius, th, ph)
            _, e_t, e_p = spherical_frame(X - np.array([0.0, *center[1:]]))
            v = np.real(np.asarray(E(X), dtype=complex))
            rows.append((th, ph, float(np.dot(e_t, v)), float(np.dot(e_p, v)), float(np.linalg.norm(v))))
    return np.array(rows, dtype=float).reshape(-1, 5)


def render_polarization(
    E: Callable,
    radius: float,
    path,
    n_theta: int = 12,
    n_phi: int = 24,
    center=(0.0, 0.0, 0.0, 0.0),
) -> PolarizationPlot:
    """Quiver of tangent Re E on a sphere, saved as SVG at ``path``."""
    theta, phi = sphere_grid(n_theta, n_phi)
    samples = tangent_samples(E, radius, theta, phi, center)
    if len(samples) == 0:
        raise ValueError("empty grid: every sample falls inside the pole exclusion")
    mag = np.hypot(samples[:, 2], samples[:, 3])
    finite = np.isfinite(mag)
    full = samples[finite, 4]
    scale = float(np.max(full)) if len(full) else 0.0
    # tangent parts at the level of differencing noise count as zero
    keep = finite & (mag > 1e-7 * scale) & (scale > 0.0)
    th, ph, et, ep, _ = samples[keep].T
    angle = np.arctan2(ep, et)

    # orthographic view from +x: screen (y, z), only the near hemisphere
    front = np.cos(ph) >= 0.0
    sy = np.sin(th) * np.sin(ph)
    sz = np.cos(th)
    e_t = np.column_stack([np.cos(th) * np.cos(ph), np.cos(th) * np.sin(ph), -np.sin(th)])
    e_p = np.column_stack([-np.sin(ph), np.cos(ph), np.zeros_like(ph)])
    u = np.cos(angle)[:, None] * e_t + np.sin(angle)[:, None] * e_p

    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with plt.rc_context({"svg.hashsalt": SVG_SALT, "svg.fonttype": "none"}):
        fig, ax = plt.subplots(figsize=(6, 6))
        ax.add_patch(plt.Circle((0.0, 0.0), 1.0, fill=False, lw=0.8, color="0.4"))
        if np.any(front):
            ax.quiver(sy[front], sz[front], u[front, 1], u[front, 2], angles="xy", scale_units="xy",
                      scale=8.0, pivot="middle", width=0.004, color="tab:blue")
        ax.set_xlim(-1.15, 1.15)
        ax.set_ylim(-1.15, 1.15)
        ax.set_aspect("equal")
        ax.set_axis_off()
        ax.set_title(f"tangent Re E on r = {radius:g}")
        fig.savefig(path, format="svg", metadata={"Date": None})
        plt.close(fig)
    log.info("polarization: %d arrows (%d visible) -> %s", len(th), int(np.sum(front)), path)
    return PolarizationPlot(path, th, ph, angle, mag[keep])
