"""Optional PNG figures for report tables (off by default)."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _numeric(col):
    try:
        return np.array([float(v) for v in col])
    except (TypeError, ValueError):
        return None


def render_tables(tables: dict, out_dir: Path, title: str) -> list[Path]:
    """One figure per table: numeric columns against the first numeric column.

    Tables whose first column is categorical are split into one line per
    category. Positive series spanning more than two decades use a log axis.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, (header, rows) in tables.items():
        if not rows:
            continue
        cols = list(zip(*rows))
        groups = {None: list(range(len(rows)))}
        offset = 0
        if _numeric(cols[0]) is None:
            groups = {}
            for i, key in enumerate(cols[0]):
                groups.setdefault(key, []).append(i)
            offset = 1
        xcol = next((j for j in range(offset, len(cols)) if _numeric(cols[j]) is not None), None)
        if xcol is None:
            continue
        x_all = _numeric(cols[xcol])
        fig, ax = plt.subplots(figsize=(6, 4))
        logy = False
        for j in range(xcol + 1, len(cols)):
            y_all = _numeric(cols[j])
            if y_all is None:
                continue
            for key, idx in groups.items():
                y = y_all[idx]
                label = header[j] if key is None else f"{key}: {header[j]}"
                ax.plot(x_all[idx], y, marker=".", label=label)
                finite = y[np.isfinite(y)]
                if finite.size and finite.min() > 0 and finite.max() / finite.min() > 100:
                    logy = True
        if logy:
            ax.set_yscale("log")
        ax.set_xlabel(header[xcol])
        ax.set_title(f"{title}: {name}")
        ax.legend(fontsize=7)
        fig.tight_layout()
        path = out_dir / f"{name}.png"
        fig.savefig(path, dpi=100)
        plt.close(fig)
        written.append(path)
    return written
