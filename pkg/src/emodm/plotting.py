"""Figure rendering for the report outputs.

Figures are written next to their delimited counterparts. Rendering is kept
deterministic (Agg backend, pinned PNG metadata) so reruns of a command
produce byte-identical images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

_PNG_METADATA = {"Software": "emodm"}


def _save(fig: plt.Figure, path: str | Path) -> None:
    fig.savefig(path, dpi=120, metadata=_PNG_METADATA)
    plt.close(fig)


def plot_front_comparison(
    path: str | Path,
    reference: np.ndarray,
    point_sets: list[tuple[str, np.ndarray]],
    title: str,
) -> None:
    """Reference front plus approximation sets, 2-D or 3-D by objective count."""
    m = reference.shape[1]
    if m == 3:
        fig = plt.figure(figsize=(6.0, 5.0))
        ax = fig.add_subplot(projection="3d")
        ax.scatter(*reference.T, s=4, c="lightgray", label="reference front", depthshade=False)
        for label, pts in point_sets:
            ax.scatter(*pts.T, s=12, label=label, depthshade=False)
        ax.set_xlabel("f1")
        ax.set_ylabel("f2")
        ax.set_zlabel("f3")
    else:
        fig, ax = plt.subplots(figsize=(6.0, 4.5))
        ax.scatter(reference[:, 0], reference[:, 1], s=4, c="lightgray", label="reference front")
        for label, pts in point_sets:
            ax.scatter(pts[:, 0], pts[:, 1], s=12, label=label)
        ax.set_xlabel("f1")
        ax.set_ylabel("f2")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_igd_profile(path: str | Path, profile: list[tuple[int, float]], title: str) -> None:
    """IGD against reverse-diffusion step (step decreases left to right)."""
    steps = [p[0] for p in profile]
    values = [p[1] for p in profile]
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(steps, values, lw=1.2)
    ax.set_xlabel("reverse diffusion step t")
    ax.set_ylabel("IGD")
    ax.set_yscale("log")
    ax.invert_xaxis()
    ax.set_title(title)
    fig.tight_layout()
    _save(fig, path)
