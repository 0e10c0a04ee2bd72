"""SVG figures for regions, paths and speed profiles (matplotlib, Agg backend)."""

from __future__ import annotations

import math
from typing import Optional, Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .region import CuspBand, FeasibleRegion  # noqa: E402
from .trajectory import speed_profile  # noqa: E402

AGENT_COLORS = ("blue", "red", "green")
PLOT_KINDS = ("regions", "paths", "speeds")


def _colour(agent_id: int) -> str:
    return AGENT_COLORS[(agent_id - 1) % len(AGENT_COLORS)]


def _save(fig, path) -> None:
    # fixed salt and no date keep the SVG byte-identical across runs
    with matplotlib.rc_context({"svg.hashsalt": "trochoswarm", "svg.fonttype": "path"}):
        fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def plot_regions(
    path,
    region: Optional[FeasibleRegion],
    bands: Sequence[CuspBand] = (),
    box: Optional[tuple[float, float]] = None,
    point: Optional[tuple[float, float]] = None,
    title: str = "",
) -> None:
    """Filled feasible polygons, cusp rays, and an optional chosen point."""
    fig, ax = plt.subplots(figsize=(6, 5))
    if region is None:
        ax.text(0.5, 0.5, "no feasible region", transform=ax.transAxes, ha="center", va="center")
        if box is not None:
            ax.set_xlim(0, box[0])
            ax.set_ylim(0, box[1])
    else:
        box = box or region.box
        for n, poly in enumerate(region.polygons):
            v = poly.vertices
            ax.fill(v[:, 0], v[:, 1], alpha=0.35, color="0.4", label="feasible" if n == 0 else None)
            ax.plot(np.append(v[:, 0], v[0, 0]), np.append(v[:, 1], v[0, 1]), color="0.2", lw=0.8)
    if box is not None:
        for band in bands:
            R_end = min(box[0], box[1] / band.slope) if band.slope > 0 else box[0]
            ax.plot([0, R_end], [0, band.slope * R_end], ls="--", color=_colour(band.agent),
                    label=f"cusp ray {band.agent}")
    if point is not None:
        ax.plot([point[0]], [point[1]], "o", mfc="none", mec="red", ms=8, label="chosen point")
    ax.set_xlabel("R_c")
    ax.set_ylabel("d_c")
    ax.margins(0.05)
    if title:
        ax.set_title(title)
    if ax.get_legend_handles_labels()[0]:
        ax.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def plot_paths(
    path,
    trochoids,
    starts: Optional[Sequence[tuple]] = None,
    n: int = 2000,
    title: str = "",
) -> None:
    """One closed path per agent, start markers, and the centre of rotation.

    ``starts`` is a list of (path id, offset, x, y); by default the base
    agents' positions at t = 0 are marked.
    """
    fig, ax = plt.subplots(figsize=(6, 6))
    t = np.linspace(0.0, trochoids[0].period, n + 1)
    for tr in trochoids:
        p = tr.position(t)
        ax.plot(p[:, 0], p[:, 1], color=_colour(tr.agent_id), lw=1.0, label=f"agent {tr.agent_id}")
    if starts is None:
        starts = [(tr.agent_id, 0.0, *tr.position(0.0)) for tr in trochoids]
    for agent, offset, x, y in starts:
        marker = "o" if offset == 0 else "s"
        ax.plot([x], [y], marker, color=_colour(agent), ms=5)
    cor = trochoids[0].cor
    ax.plot([cor.real], [cor.imag], "k+", ms=10, label="CoR")
    ax.set_aspect("equal", adjustable="datalim")
    ax.margins(0.05)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    ax.legend(loc="upper right", fontsize=8)
    _save(fig, path)


def plot_speeds(path, trochoids, n: int = 2000, title: str = "") -> None:
    """Speed and turn rate over one period (path-parameter units)."""
    fig, (ax_v, ax_w) = plt.subplots(2, 1, figsize=(6, 6), sharex=True)
    theta = np.linspace(0.0, 2 * math.pi, n + 1)
    for tr in trochoids:
        V, W = speed_profile(tr, theta, on_cusp="nan")
        ax_v.plot(theta, V, color=_colour(tr.agent_id), label=f"agent {tr.agent_id}")
        ax_w.plot(theta, W, color=_colour(tr.agent_id))
    ax_v.set_ylabel("V")
    ax_w.set_ylabel("omega")
    ax_w.set_xlabel("theta")
    ax_v.legend(loc="upper right", fontsize=8)
    for ax in (ax_v, ax_w):
        ax.margins(0.05)
    if title:
        ax_v.set_title(title)
    _save(fig, path)
