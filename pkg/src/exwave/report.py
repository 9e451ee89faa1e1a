"""Suite orchestration and machine-readable reports.

Rows carry exactly the columns
(experiment_id, theorem_ref, t_or_lambda, value, bound, ratio, slope,
slope_ci, pass); the JSON mirror adds the full plan and version metadata.
Identical plans produce byte-identical reports: floats are serialized with
``repr`` and the experiment order is the plan order.
"""

from __future__ import annotations

import json
import traceback
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .config import ExperimentPlan
from .experiments import REGISTRY_WITH_PROBES, ExperimentResult

CSV_COLUMNS = ("experiment_id", "theorem_ref", "t_or_lambda", "value",
               "bound", "ratio", "slope", "slope_ci", "pass")


@dataclass
class ReportBundle:
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)

    @property
    def all_passed(self) -> bool:
        if self.errors:
            return False
        flags = {row["experiment_id"]: row["pass"] for row in self.rows}
        return all(flags.values())

    def passes(self) -> dict:
        out = {row["experiment_id"]: row["pass"] for row in self.rows}
        for name in self.errors:
            out[name] = False
        return out


def _result_rows(result: ExperimentResult) -> list[dict]:
    rows = []
    for x, value, bound, ratio in result.samples:
        rows.append({
            "experiment_id": result.experiment_id,
            "theorem_ref": result.theorem_ref,
            "t_or_lambda": x,
            "value": value,
            "bound": bound,
            "ratio": ratio,
            "slope": result.slope,
            "slope_ci": result.slope_ci,
            "pass": bool(result.passed),
        })
    return rows


def _sanitize(obj):
    if isinstance(obj, dict):
        return {k: _sanitize(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_sanitize(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_sanitize(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    return obj


def run_suite(plan: ExperimentPlan, threads: int = 1) -> ReportBundle:
    """Execute the plan's experiments; failures are recorded, not fatal.

    Experiments fan out to a small worker pool; rows are assembled in plan
    order so reports are reproducible regardless of completion order.
    """
    bundle = ReportBundle()
    bundle.metadata = {
        "version": __version__,
        "plan": _sanitize(plan.describe()),
    }
    names = list(plan.experiments)

    def run_one(name: str):
        return REGISTRY_WITH_PROBES[name](fast=plan.fast)

    results: dict[str, ExperimentResult] = {}
    if threads > 1 and len(names) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            futures = {name: pool.submit(run_one, name) for name in names}
            for name in names:
                try:
                    results[name] = futures[name].result()
                except Exception as exc:  # noqa: BLE001 - recorded, not fatal
                    bundle.errors[name] = f"{type(exc).__name__}: {exc}"
                    traceback.print_exc()
    else:
        for name in names:
            try:
                results[name] = run_one(name)
            except Exception as exc:  # noqa: BLE001
                bundle.errors[name] = f"{type(exc).__name__}: {exc}"
                traceback.print_exc()

    details = {}
    for name in names:
        if name in results:
            bundle.rows.extend(_result_rows(results[name]))
            details[name] = _sanitize(results[name].details)
    bundle.metadata["details"] = details
    if bundle.errors:
        bundle.metadata["errors"] = dict(bundle.errors)
    return bundle


def _cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(bundle: ReportBundle, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [",".join(CSV_COLUMNS)]
    for row in bundle.rows:
        lines.append(",".join(_cell(row[c]) for c in CSV_COLUMNS))
    path.write_text("\n".join(lines) + "\n")


def emit_json(bundle: ReportBundle, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    payload = {
        "metadata": bundle.metadata,
        "rows": bundle.rows,
        "errors": bundle.errors,
    }
    path.write_text(json.dumps(_sanitize(payload), sort_keys=True,
                               indent=1, separators=(",", ": ")) + "\n")


def load_json(path) -> ReportBundle:
    payload = json.loads(Path(path).read_text())
    return ReportBundle(rows=payload["rows"], metadata=payload["metadata"],
                        errors=payload.get("errors", {}))
