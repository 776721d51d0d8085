"""Deterministic metric export: per-cycle CSV, summary JSON, manifest JSON.

Byte-identical output for identical metrics is part of the contract: rows
are sorted by (scheme order, trial, cycle), floats are printed with nine
significant digits, and JSON keys are sorted.
"""

from __future__ import annotations

import io
import json
import os

import numpy as np

from . import __version__
from .harness import SimMetrics

__all__ = ["write_outputs", "cycles_csv_text", "summary_dict", "manifest_dict"]

CSV_HEADER = "trial,t,scheme,se_nats,n_ho,cum_ho,se_adj"
QUANTILE_GRID = [round(i / 100.0, 2) for i in range(101)]


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _round9(x: float) -> float:
    return float(_fmt(float(x)))


def cycles_csv_text(metrics: SimMetrics) -> str:
    order = {s: i for i, s in enumerate(metrics.config.engine.schemes)}
    rows = sorted(metrics.records, key=lambda r: (order[r.scheme], r.trial, r.t))
    buf = io.StringIO()
    buf.write(CSV_HEADER + "\n")
    for r in rows:
        buf.write(f"{r.trial},{r.t},{r.scheme},{_fmt(r.se_nats)},"
                  f"{r.n_ho},{r.cum_ho},{_fmt(r.se_adj)}\n")
    return buf.getvalue()


def summary_dict(metrics: SimMetrics) -> dict:
    schemes = {}
    for scheme in metrics.config.engine.schemes:
        samples = metrics.se_samples(scheme)
        totals = metrics.total_hos(scheme)
        if samples.size:
            quants = [_round9(v) for v in np.quantile(samples, QUANTILE_GRID)]
            p10 = _round9(np.quantile(samples, 0.10))
        else:
            quants = []
            p10 = None
        schemes[scheme] = {
            "n_se_samples": int(samples.size),
            "se_quantiles_nats": quants,
            "p10_se_nats": p10,
            "mean_cum_ho_curve": [_round9(v)
                                  for v in metrics.mean_cum_ho_curve(scheme)],
            "mean_total_ho": _round9(totals.mean()) if totals.size else None,
        }
    return {"quantile_grid": QUANTILE_GRID, "schemes": schemes}


def manifest_dict(metrics: SimMetrics) -> dict:
    return {
        "package_version": __version__,
        "master_seed": metrics.config.seeds.master_seed,
        "trials": metrics.config.seeds.trials,
        "schemes": list(metrics.config.engine.schemes),
        "config": metrics.config.to_dict(),
    }


def _write(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


def write_outputs(metrics: SimMetrics, out_dir: str,
                  formats=("csv", "json")) -> dict[str, str]:
    """Write the export files and return a name -> path map."""
    try:
        os.makedirs(out_dir, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out_dir}: {exc}") from exc
    paths: dict[str, str] = {}
    if "csv" in formats:
        paths["cycles"] = os.path.join(out_dir, "cycles.csv")
        _write(paths["cycles"], cycles_csv_text(metrics))
    if "json" in formats:
        paths["summary"] = os.path.join(out_dir, "summary.json")
        _write(paths["summary"],
               json.dumps(summary_dict(metrics), indent=2, sort_keys=True) + "\n")
        paths["manifest"] = os.path.join(out_dir, "manifest.json")
        _write(paths["manifest"],
               json.dumps(manifest_dict(metrics), indent=2, sort_keys=True) + "\n")
    return paths
