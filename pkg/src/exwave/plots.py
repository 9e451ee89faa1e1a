"""Figure rendering for suite reports.

One PNG per experiment with plottable rows, written next to the delimited
output.  Figures are a convenience view of the same bundle the CSV/JSON
carry; the delimited files remain the product of record.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .report import ReportBundle

_LOGLOG = {"free_dispersive", "local_energy_decay", "resolvent_scans",
           "rv_difference_bound"}


def render_figures(bundle: ReportBundle, out_dir) -> list[str]:
    """Render per-experiment figures; returns the written paths."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    by_exp: dict[str, list] = {}
    for row in bundle.rows:
        by_exp.setdefault(row["experiment_id"], []).append(row)
    written = []
    for name, rows in by_exp.items():
        xs = np.array([r["t_or_lambda"] for r in rows], dtype=float)
        vals = np.array([r["value"] for r in rows], dtype=float)
        if xs.size < 2 or np.any(~np.isfinite(vals)):
            continue
        fig, ax = plt.subplots(figsize=(5.0, 3.4))
        positive = np.all(vals > 0) and np.all(xs > 0)
        if name in _LOGLOG and positive:
            ax.loglog(xs, vals, "o-", lw=1.2, ms=4)
            slope = rows[0].get("slope")
            if slope is not None:
                ref = vals[0] * (xs / xs[0]) ** slope
                ax.loglog(xs, ref, "--", color="gray", lw=1.0,
                          label=f"slope {slope:+.2f}")
                ax.legend(frameon=False, fontsize=8)
        else:
            ax.plot(xs, vals, "o-", lw=1.2, ms=4)
        bounds = [r["bound"] for r in rows]
        if all(b is not None for b in bounds) and positive:
            ax.plot(xs, bounds, ":", color="firebrick", lw=1.0)
        ax.set_xlabel("t or lambda")
        ax.set_ylabel("value")
        verdict = "pass" if rows[0]["pass"] else "FAIL"
        ax.set_title(f"{name} [{rows[0]['theorem_ref']}] - {verdict}",
                     fontsize=9)
        ax.grid(alpha=0.3, which="both")
        fig.tight_layout()
        target = out_dir / f"{name}.png"
        fig.savefig(target, dpi=110)
        plt.close(fig)
        written.append(str(target))
    return written
