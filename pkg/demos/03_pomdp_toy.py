"""A two-AP planning problem, solved exactly and by the point-based solver.

One AP is currently connected and known-good but receding; the other is
unobserved and approaching. The planner must weigh certain reward now
against a probably-better candidate later. Small enough to enumerate the
whole decision tree, which is exactly how the solver is validated.

Run: python demos/03_pomdp_toy.py
"""

import numpy as np

from cfho.channel import PathLossParams, ShadowingParams, StateQuantizer
from cfho.channel import AgingProfile
from cfho.pomdp import (Belief, act, build_model, dump_model,
                        exact_expectimax, expand_belief, propagate,
                        solve_pbvi)
from cfho.rates import RadioParams, reward_table

pl = PathLossParams()
sh = ShadowingParams()
quant = StateQuantizer.from_distances(pl)
radio = RadioParams(p_dl=1.0, p_ul=0.1, noise_power=5.0238e-13, M=8,
                    tau_c=200, tau_p=16, pilot_index=16)
aging = AgingProfile.build(60.0, 66.7e-6, 200)

horizon = 3
tab, actions = reward_table(2, 1, quant.beta_good, quant.beta_bad, 1,
                            aging, radio)
# AP 0: connected, observed good, receding; AP 1: unobserved, approaching
distances = np.array([[100.0, 260.0],
                      [110.0, 240.0],
                      [120.0, 220.0],
                      [130.0, 200.0]])
model = build_model((0, 1), {0: True}, distances, quant, sh, pl, (10.0, 1.0),
                    tab, actions, b_con=1, horizon=horizon, gamma=0.95)

print("per-stage transition probabilities (p11, p01) per AP:")
for t in range(horizon):
    print(f"  stage {t + 1}: AP0 ({model.trans_p11[t, 0]:.3f}, "
          f"{model.trans_p01[t, 0]:.3f})   AP1 ({model.trans_p11[t, 1]:.3f}, "
          f"{model.trans_p01[t, 1]:.3f})")

policy = solve_pbvi(model, belief_budget=64, expansion_depth=2,
                    rng=np.random.default_rng(0))
exact = exact_expectimax(model)
print(f"\npoint-based value : {policy.value:.9f}")
print(f"expectimax value  : {exact:.9f}")
print(f"difference        : {policy.value - exact:+.2e}")

belief = propagate(model.initial_belief, model, 1)
print(f"\nstage-1 belief (P(good) per AP): {belief.upsilon.round(4)}")
print(f"expanded over the 4 joint states: {expand_belief(belief).round(4)}")
choice = act(policy, belief, 1)
print(f"stage-1 action: connect AP {int(np.flatnonzero(model.actions[choice]))}")

dump_path = "toy_model_dump.txt"
dump_model(model, dump_path)
print(f"\nplain-text model dump written to {dump_path} "
      "(format: docs/pomdp_dump_format.md)")
