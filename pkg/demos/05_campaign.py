"""A small seeded campaign with CSV/JSON export.

Runs a few paired-seed trials of the planner scheme against both
baselines, prints the cumulative-handoff comparison, and writes the same
deterministic exports the `cfho run` command produces.

Run: python demos/05_campaign.py  (a few minutes on a laptop; the full
50-trial experiment behind the shipped results uses `cfho run` or the
acceptance suite)
"""

import json

import numpy as np

from cfho.config import default_config
from cfho.export import write_outputs
from cfho.harness import run_experiment

cfg = default_config("desk")
cfg.seeds.trials = 6  # the shipped campaign uses 50
cfg.validate()

metrics = run_experiment(cfg, workers=2)

print("cumulative handoffs at trip end, per trial:")
for scheme in cfg.engine.schemes:
    totals = metrics.total_hos(scheme)
    print(f"  {scheme:14s} {totals}  (mean {totals.mean():.1f})")

pomdp = metrics.total_hos("pomdp_ho_min").sum()
for baseline in ("lsf_time", "lsf_threshold"):
    ratio = pomdp / metrics.total_hos(baseline).sum()
    print(f"  planner vs {baseline}: ratio {ratio:.3f} "
          f"(reduction {1 - ratio:.0%})")

print("\n10th-percentile SE per scheme (nats/s/Hz):")
for scheme in cfg.engine.schemes:
    print(f"  {scheme:14s} {metrics.p10_se(scheme):.2f}")

paths = write_outputs(metrics, "campaign_out")
print("\nexports:")
for name, path in sorted(paths.items()):
    print(f"  {name}: {path}")
summary = json.load(open(paths["summary"]))
curve = summary["schemes"]["pomdp_ho_min"]["mean_cum_ho_curve"]
print(f"\nmean cumulative-handoff curve (first 10 cycles): "
      f"{[round(v, 2) for v in curve[:10]]}")
print("equivalent CLI: cfho run --profile desk --trials 6 --out campaign_out")
