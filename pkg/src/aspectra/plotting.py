"""Heatmap figures of the interaction matrices."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .report import InteractionMatrix  # noqa: E402


def _grid(matrix: InteractionMatrix, which: str):
    names = matrix.aspects
    values, notes = [], []
    for r in names:
        row, note = [], []
        for c in names:
            if r == c:
                row.append(0)
                note.append("")
                continue
            if which == "conflict":
                n = len(matrix.cell(r, c).conflicts)
            else:
                n = len(matrix.cell(c, r).dependencies)  # row depends on column
            row.append(n)
            note.append(str(n) if n else ("?" if matrix.undecided(r, c) else ""))
        values.append(row)
        notes.append(note)
    return values, notes


def heatmap(matrix: InteractionMatrix, which: str, path, title=None):
    """Write one heatmap; ``which`` is ``"conflict"`` or ``"dependency"``."""
    if which not in ("conflict", "dependency"):
        raise ValueError(f"unknown matrix {which!r}")
    names = matrix.aspects
    values, notes = _grid(matrix, which)
    size = max(3.0, 0.35 * len(names) + 2)
    fig, ax = plt.subplots(figsize=(size, size))
    cmap = "Reds" if which == "conflict" else "Blues"
    if names:
        top = max(1, max(max(r) for r in values))
        im = ax.imshow(values, cmap=cmap, vmin=0, vmax=top)
        fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04, label="critical pairs")
        if len(names) <= 20:
            for i, row in enumerate(notes):
                for j, text in enumerate(row):
                    if text:
                        dark = values[i][j] > top / 2
                        ax.text(j, i, text, ha="center", va="center", fontsize=8,
                                color="white" if dark else "black")
    ax.set_xticks(range(len(names)), names, rotation=90, fontsize=7)
    ax.set_yticks(range(len(names)), names, fontsize=7)
    if which == "conflict":
        ax.set_xlabel("applied second")
        ax.set_ylabel("applied first")
    else:
        ax.set_xlabel("provider")
        ax.set_ylabel("dependent")
    ax.set_title(title or f"{which} matrix")
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120, metadata={"Software": None})
    plt.close(fig)
    return path


def save_figures(matrix: InteractionMatrix, outdir) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    return [
        heatmap(matrix, "conflict", outdir / "conflict_matrix.png"),
        heatmap(matrix, "dependency", outdir / "dependency_matrix.png"),
    ]
