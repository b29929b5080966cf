"""Matplotlib renderings of pipeline output.

Imports matplotlib lazily so the plain text path never pays for it.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .geometry import Field
from .pipeline import STAGE_NAMES, PipelineResult, TimingSummary

_FIELD_COLORS = {
    Field.LEFT.value: "tab:orange",
    Field.FRONT.value: "tab:green",
    Field.RIGHT.value: "tab:blue",
}


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def render_scene_figure(result: PipelineResult, path: str | Path) -> None:
    """Depth image with region boxes colored by direction field."""
    plt = _pyplot()
    depth = result.depth.values.astype(float)
    shown = np.where(
        np.isin(depth, list(result.depth.sentinels)), np.nan, depth
    )
    fig, ax = plt.subplots(figsize=(8, 6))
    im = ax.imshow(shown, cmap="viridis", interpolation="nearest")
    fig.colorbar(im, ax=ax, label="depth (mm)", shrink=0.8)
    seg_fields = {s["id"]: s["field"] for s in result.report["segments"]}
    for box in result.boxes:
        color = _FIELD_COLORS[seg_fields[box.id]]
        rect = plt.Rectangle(
            (box.x1, box.y1),
            box.x2 - box.x1,
            box.y2 - box.y1,
            fill=False,
            edgecolor=color,
            linewidth=1.5,
        )
        ax.add_patch(rect)
        ax.annotate(
            str(box.id),
            (box.x1 + 2, box.y1 + 2),
            color=color,
            fontsize=8,
            va="top",
        )
    handles = [
        plt.Line2D([0], [0], color=c, lw=2, label=f)
        for f, c in _FIELD_COLORS.items()
    ]
    ax.legend(handles=handles, loc="lower right", fontsize=8)
    ax.set_title(f"{len(result.boxes)} regions")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def render_bench_figure(summary: TimingSummary, path: str | Path) -> None:
    """Horizontal bars of per-stage medians with p95 whisker marks."""
    plt = _pyplot()
    names = list(STAGE_NAMES)
    medians = [summary.stages[n][0] for n in names]
    p95s = [summary.stages[n][1] for n in names]
    fig, ax = plt.subplots(figsize=(7, 3.5))
    ypos = np.arange(len(names))
    ax.barh(ypos, medians, color="tab:blue", label="median")
    ax.scatter(p95s, ypos, color="tab:red", marker="|", s=200, label="p95")
    ax.set_yticks(ypos)
    ax.set_yticklabels(names)
    ax.invert_yaxis()
    ax.set_xlabel("microseconds")
    ax.set_title(f"stage timings over {summary.runs} runs")
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
