"""One trip, four handoff schemes, one shared channel trace.

Simulates a single user trip and runs every scheme over the identical
ground-truth fading, then prints when each scheme switched APs and what it
cost. The planner-based threshold scheme should hold its serving set
through most cycles and pay a handful of targeted switches.

Run: python demos/04_handoff_trip.py  (about a minute on a laptop)
"""

import numpy as np

from cfho.config import default_config
from cfho.harness import build_trial_trace
from cfho.engine import run_scheme
from cfho.rates import snr_spectral_efficiency

cfg = default_config("desk")
cfg.mobility.trip_cycles = 60
cfg.validate()

trace = build_trial_trace(cfg, trial=3)
res = cfg.planner_resources()
print(f"network: {trace.n_aps} APs over "
      f"{cfg.network.area_side_m:.0f} m square, trip of "
      f"{cfg.mobility.trip_cycles} cycles at {trace.speed:.0f} m/s\n")

for scheme in ("lsf_time", "lsf_threshold", "pomdp_plain", "pomdp_ho_min"):
    decisions = run_scheme(trace, res, cfg.engine_config(scheme))
    total = sum(d.n_ho for d in decisions)
    switch_cycles = [d.cycle for d in decisions if d.n_ho > 0]
    se = [snr_spectral_efficiency(trace.betas[d.cycle][list(d.serving_set)],
                                  res.aging, res.radio) for d in decisions]
    print(f"{scheme:14s} handoffs={total:3d}  "
          f"switch cycles: {switch_cycles}")
    print(f"{'':14s} SE nats/s/Hz: min {min(se):.2f}  "
          f"median {float(np.median(se)):.2f}  max {max(se):.2f}\n")
