"""Artifact writers: delimited tables, aligned text, and figures.

Everything written here is byte-stable for a fixed configuration and
seed: no timestamps, fixed float formatting, and PNG output stripped of
environment-dependent metadata.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_PNG_KWARGS = {"dpi": 100, "metadata": {"Software": None}}


def write_text(path: str, content: str) -> None:
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(content)


def tsv(rows: list[list], header: list[str] | None = None) -> str:
    def fmt(v) -> str:
        if isinstance(v, float):
            return f"{v:.6f}"
        return str(v)

    lines = []
    if header:
        lines.append("\t".join(header))
    for row in rows:
        lines.append("\t".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def aligned_table(rows: list[list], header: list[str]) -> str:
    """Plain-text table with right-padded columns."""
    def fmt(v) -> str:
        if isinstance(v, float):
            return f"{v:.2f}"
        return str(v)

    cells = [header] + [[fmt(v) for v in row] for row in rows]
    widths = [max(len(r[c]) for r in cells) for c in range(len(header))]
    out = []
    for i, row in enumerate(cells):
        out.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip())
        if i == 0:
            out.append("  ".join("-" * w for w in widths))
    return "\n".join(out) + "\n"


def render_score_profile(path: str, scores: np.ndarray, title: str) -> None:
    """Suspiciousness per statement id, candidates standing out."""
    fig, ax = plt.subplots(figsize=(8, 3))
    ax.bar(np.arange(len(scores)), scores, width=1.0, color="#31688e")
    ax.set_xlabel("statement id")
    ax.set_ylabel("final score")
    ax.set_title(title)
    ax.set_ylim(0, 1.05 if scores.size == 0 else max(1.0, scores.max()) * 1.05)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KWARGS)
    plt.close(fig)


def render_exam_curve(path: str, exam_by_technique: dict[str, list[float]]) -> None:
    """Cumulative share of versions located within x% examined code."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in sorted(exam_by_technique):
        values = sorted(exam_by_technique[name])
        if not values:
            continue
        xs = [0.0]
        ys = [0.0]
        for i, v in enumerate(values, start=1):
            xs.append(v)
            ys.append(100.0 * i / len(values))
        xs.append(100.0)
        ys.append(100.0)
        ax.step(xs, ys, where="post", label=name)
    ax.set_xlabel("% of statements examined")
    ax.set_ylabel("% of faulty versions located")
    ax.set_xlim(0, 100)
    ax.set_ylim(0, 102)
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, **_PNG_KWARGS)
    plt.close(fig)


def render_ablation_bars(
    path: str, mean_weighted: float, mean_uniform: float
) -> None:
    fig, ax = plt.subplots(figsize=(4, 3.5))
    ax.bar(
        ["differential", "uniform"],
        [mean_weighted, mean_uniform],
        color=["#31688e", "#b5b5b5"],
    )
    ax.set_ylabel("mean worst-case examined %")
    ax.set_title("shrinkage ablation")
    fig.tight_layout()
    fig.savefig(path, **_PNG_KWARGS)
    plt.close(fig)
