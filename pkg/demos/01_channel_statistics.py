"""Channel-statistics walkthrough.

Builds the large-scale-fading machinery step by step: the power-law path
loss with its height offset, the Jakes aging profile of the small-scale
fading, a correlated shadowing trace along a straight trip, and the
closed-form good-state probabilities checked against brute-force sampling.

Run: python demos/01_channel_statistics.py
"""

import numpy as np

from cfho.channel import (AgingProfile, PathLossParams, ShadowingParams,
                          StateQuantizer, init_lsf, path_loss, prob_good,
                          step_lsf, trans_probs)
from cfho.geometry import TrajectoryState, advance, place_aps

rng = np.random.default_rng(42)

print("=== path loss ===")
pl = PathLossParams()  # 1.8 GHz street-level power law, 13.5 m height gap
for d in (50, 100, 150, 200, 300):
    print(f"  d = {d:3d} m  ->  gain {float(path_loss(d, pl)):.3e}"
          f"  ({10 * np.log10(path_loss(d, pl)):.1f} dB)")

print("\n=== channel aging (Jakes) ===")
aging = AgingProfile.build(f_doppler=60.0, sample_period=66.7e-6, tau_c=200)
for lag in (0, 1, 50, 100, 184):
    print(f"  lag {lag:3d} samples: rho = {aging.rho[lag]:+.5f}")

print("\n=== correlated shadowing along a trip ===")
sh = ShadowingParams()  # 6 dB lognormal, 100 m half-correlation distance
layout = place_aps(60, 700.0, rng)
traj = TrajectoryState(position=np.array([350.0, 350.0]),
                       heading=np.array([1.0, 0.0]), speed=10.0,
                       step_duration=1.0)
proc = init_lsf(layout, sh, pl, traj, rng)
print(f"  step correlation of the user-side process: {proc.step_corr:.5f}")
nearest = int(np.argmax(proc.lsf))
for t in range(5):
    traj = advance(traj, layout)
    proc = step_lsf(proc, traj, layout, sh, pl, rng)
    print(f"  t={t + 1}: strongest AP gain {proc.lsf.max():.3e}, "
          f"AP {nearest} gain {proc.lsf[nearest]:.3e}")

print("\n=== two-state channel statistics ===")
quant = StateQuantizer.from_distances(pl)  # threshold at the 150 m gain
print(f"  threshold gain: {quant.beta_threshold:.3e}")
for d in (80.0, 150.0, 250.0):
    print(f"  P(good) at {d:.0f} m: {float(prob_good(d, quant, sh, pl)):.4f}")
p11, p01 = trans_probs(140.0, 150.0, quant, sh, pl, (10.0, 1.0))
print(f"  transition at 140 -> 150 m: p11 = {p11:.4f}, p01 = {p01:.4f}")

# sanity: empirical frequencies from simulated shadowing pairs
n = 200_000
c = proc.step_corr
k1 = rng.standard_normal(n)
k2a = rng.standard_normal(n)
k2b = c * k2a + np.sqrt(1 - c * c) * rng.standard_normal(n)
w1, w2 = np.sqrt(sh.iota), np.sqrt(1 - sh.iota)
beta_a = path_loss(140.0, pl) * 10 ** (0.6 * (w1 * k1 + w2 * k2a))
beta_b = path_loss(150.0, pl) * 10 ** (0.6 * (w1 * k1 + w2 * k2b))
good_a = beta_a > quant.beta_threshold
good_b = beta_b > quant.beta_threshold
print(f"  empirical p11 from {n} pairs: "
      f"{(good_a & good_b).sum() / good_a.sum():.4f}")
