"""POMDP-based handoff management for user-centric cell-free massive MIMO.

Library layers, bottom-up:

* :mod:`cfho.geometry` — AP layout, straight-line mobility, torus distances.
* :mod:`cfho.channel` — correlated LSF, channel aging, state probabilities.
* :mod:`cfho.rates` — LMMSE estimation, SE lower bounds, MC signal oracle.
* :mod:`cfho.pomdp` — candidate-pool POMDP, point-based solver, expectimax.
* :mod:`cfho.engine` — the handoff algorithms and LSF baselines.
* :mod:`cfho.harness` / :mod:`cfho.export` — seeded campaigns, CSV/JSON.
* :mod:`cfho.cli` — the ``cfho`` batch command.
"""

__version__ = "0.1.0"

from .channel import (AgingProfile, LsfProcess, PathLossParams,  # noqa: F401
                      ShadowingParams, StateQuantizer, bvn_upper_rect,
                      init_lsf, jakes_rho, path_loss, prob_good,
                      quantize_state, step_lsf, trans_probs)
from .config import (ExperimentConfig, default_config,  # noqa: F401
                     load_config, noise_power)
from .engine import (EngineConfig, HandoffDecision, TrialTrace,  # noqa: F401
                     derive_policy, run_scheme, simulate_trace)
from .errors import ConfigError, NumericalError, ValidationFailure  # noqa: F401
from .geometry import (NetworkLayout, TrajectoryState, advance,  # noqa: F401
                       distance_2d, place_aps)
from .harness import (SimMetrics, overhead_adjusted_se,  # noqa: F401
                      run_experiment)
from .pomdp import (Belief, PomdpModel, StagePolicy, act,  # noqa: F401
                    belief_update, build_model, dump_model, exact_expectimax,
                    expand_belief, solve_pbvi)
from .rates import (Interferer, RadioParams, ServingConfig, eta,  # noqa: F401
                    mc_signal_oracle, psi, rate_lb, reward, reward_table,
                    snr_spectral_efficiency)
