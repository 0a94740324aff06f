"""Figure rendering for summary and evaluation runs.

Rendering goes through the Agg canvas directly rather than pyplot, so
importing this module never touches global backend state and the CLI can
run fully headless. One PNG per summarised pair (cover frame + loss
breakdown) and one roll-up PNG per evaluation report.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

_META = {"Software": "coverline"}

_LOSS_LABELS = ("document", "video", "fluency", "cross_modal")


def render_summary_figure(frame: np.ndarray, record: dict, path: str | Path) -> Path:
    """Cover frame beside its loss breakdown; titled with the sentence."""
    fig = Figure(figsize=(8.0, 3.6), dpi=100)
    FigureCanvasAgg(fig)
    ax_img, ax_loss = fig.subplots(1, 2, width_ratios=[1.4, 1.0])

    ax_img.imshow(np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0))
    ax_img.set_title(f"cover frame #{record['frame_index']}", fontsize=9)
    ax_img.set_axis_off()

    values = [record["losses"][key] for key in _LOSS_LABELS]
    positions = np.arange(len(_LOSS_LABELS))
    ax_loss.barh(positions, values, color="#4878a8")
    ax_loss.set_yticks(positions, _LOSS_LABELS, fontsize=8)
    ax_loss.invert_yaxis()
    ax_loss.set_xlabel(f"loss (total {record['losses']['total']:.4f})", fontsize=8)
    ax_loss.tick_params(labelsize=8)

    sentence = record.get("sentence", "")
    fig.suptitle(f"{record['id']}: {sentence}", fontsize=9)
    fig.tight_layout(rect=(0, 0, 1, 0.92))

    path = Path(path)
    fig.savefig(path, format="png", metadata=_META)
    return path


def render_report_figure(rows: list[dict], path: str | Path) -> Path:
    """Grouped per-pair bars for the ROUGE scores and concept IoU."""
    if not rows:
        raise ValueError("no evaluation rows to plot")
    fig = Figure(figsize=(max(6.0, 1.2 * len(rows)), 3.8), dpi=100)
    FigureCanvasAgg(fig)
    ax = fig.subplots()

    ids = [row["id"] for row in rows]
    base = np.arange(len(rows), dtype=np.float64)
    width = 0.2
    for offset, key in enumerate(("rouge1", "rouge2", "rougeL", "iou")):
        ax.bar(base + (offset - 1.5) * width, [row[key] for row in rows], width, label=key)
    ax.set_xticks(base, ids, rotation=30, ha="right", fontsize=8)
    ax.set_ylim(0.0, 1.05)
    ax.set_ylabel("score", fontsize=9)
    ax.legend(fontsize=8, ncols=4, loc="upper right")
    ax.set_title("per-pair evaluation", fontsize=10)
    fig.tight_layout()

    path = Path(path)
    fig.savefig(path, format="png", metadata=_META)
    return path
