"""Handoff schemes: POMDP-planned association and LSF-based baselines.

Four schemes operate on a common per-trial ground-truth trace so that the
channel evolution is identical across schemes:

* ``pomdp_plain`` — derive a policy, apply it for ``t_h`` cycles, re-derive.
* ``pomdp_ho_min`` — re-derive every cycle, but execute the planned serving
  set only when the previous cycle's rate fell below the threshold.
* ``lsf_time`` — connect to the best-LSF APs every cycle (idealized full
  observability).
* ``lsf_threshold`` — re-select the best-LSF APs only after a rate
  violation.

Policy derivation is divide-and-conquer: one small POMDP per candidate AP
added to the base set, solved independently; the sub-problem with the best
total expected reward supplies the policy and candidate pool.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import (AgingProfile, PathLossParams, ShadowingParams,
                      StateQuantizer, init_lsf, prob_good, quantize_good,
                      quantize_state, step_lsf, trans_probs)
from .errors import ConfigError
from .geometry import (NetworkLayout, TrajectoryState, advance,
                       min_image_distance)
from .pomdp import (Belief, PomdpModel, StagePolicy, act, belief_update,
                    propagate, solve_pbvi)
from .rates import (RadioParams, ServingConfig, rate_lb, reward_table,
                    snr_spectral_efficiency)

__all__ = [
    "EngineConfig",
    "HandoffDecision",
    "TrialTrace",
    "PlannerResources",
    "DerivedPolicy",
    "simulate_trace",
    "derive_policy",
    "run_scheme",
    "run_pomdp_plain",
    "run_pomdp_ho_min",
    "run_lsf_time",
    "run_lsf_threshold",
    "top_lsf_set",
]

SCHEMES = ("pomdp_plain", "pomdp_ho_min", "lsf_time", "lsf_threshold")


@dataclass(frozen=True)
class EngineConfig:
    scheme: str
    b_con: int = 5
    t_h: int = 10
    r_threshold: float = 7.0
    gamma: float = 0.95
    belief_budget: int = 24
    expansion_depth: int = 2
    obs_samples: int = 2
    reuse_policy: bool = False  # cache (policy, pool) while the base holds

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.b_con < 1 or self.t_h < 1 or self.r_threshold < 0:
            raise ConfigError("need b_con >= 1, t_h >= 1, r_threshold >= 0")
        if not 0 <= self.gamma < 1:
            raise ConfigError("gamma must be in [0, 1)")


@dataclass(frozen=True)
class HandoffDecision:
    cycle: int
    serving_set: tuple[int, ...]
    n_ho: int
    triggered: bool


@dataclass
class TrialTrace:
    """Ground-truth channel evolution of one trip, scheme-independent."""

    layout: NetworkLayout
    start_position: np.ndarray
    heading: np.ndarray
    speed: float
    step_duration: float
    positions: np.ndarray  # (T+1, 2), canonical torus coordinates
    betas: np.ndarray  # (T+1, B), true LSF per cycle

    @property
    def n_cycles(self) -> int:
        return self.betas.shape[0] - 1

    @property
    def n_aps(self) -> int:
        return self.betas.shape[1]

    def distance_rows(self, t_from: int, t_to: int) -> np.ndarray:
        """Min-image distances to all APs for cycles t_from..t_to inclusive.

        Positions come from the unwrapped straight-line motion, so rows are
        well defined beyond the recorded trip (used for prediction).
        """
        t = np.arange(t_from, t_to + 1, dtype=float)
        pos = self.start_position[None, :] + (
            t[:, None] * self.speed * self.step_duration) * self.heading[None, :]
        return min_image_distance(pos[:, None, :],
                                  self.layout.ap_positions[None, :, :],
                                  self.layout.area_side)


@dataclass
class PlannerResources:
    """Model ingredients shared by every policy derivation of a run."""

    quantizer: StateQuantizer
    shadowing: ShadowingParams
    pathloss: PathLossParams
    radio: RadioParams
    aging: AgingProfile
    mobility: tuple[float, float]
    reward_tab: np.ndarray = field(init=False)
    actions: np.ndarray = field(init=False)
    b_con: int = 5

    def __post_init__(self):
        self.reward_tab, self.actions = reward_table(
            self.b_con + 1, self.b_con, self.quantizer.beta_good,
            self.quantizer.beta_bad, 1, self.aging, self.radio)


@dataclass
class DerivedPolicy:
    policy: StagePolicy
    pool: tuple[int, ...]
    model: PomdpModel
    values: np.ndarray  # total expected reward per sub-problem
    n_subproblems: int


def simulate_trace(layout: NetworkLayout, sh: ShadowingParams,
                   pl: PathLossParams, speed: float, step_duration: float,
                   n_cycles: int, rng: np.random.Generator,
                   start_position=None, heading=None) -> TrialTrace:
    """Simulate one trip's ground-truth LSF trace.

    The user starts at the area center unless given, with a uniformly random
    heading, and moves on a straight line with torus wrap-around.
    """
    if start_position is None:
        start_position = np.array([layout.area_side / 2.0] * 2)
    start_position = np.asarray(start_position, dtype=float)
    if heading is None:
        angle = rng.uniform(0.0, 2.0 * np.pi)
        heading = np.array([np.cos(angle), np.sin(angle)])
    heading = np.asarray(heading, dtype=float)

    traj = TrajectoryState(position=start_position, heading=heading,
                           speed=speed, step_duration=step_duration)
    proc = init_lsf(layout, sh, pl, traj, rng)
    positions = np.empty((n_cycles + 1, 2))
    betas = np.empty((n_cycles + 1, layout.n_aps))
    positions[0] = traj.position
    betas[0] = proc.lsf
    for t in range(1, n_cycles + 1):
        traj = advance(traj, layout)
        proc = step_lsf(proc, traj, layout, sh, pl, rng)
        positions[t] = traj.position
        betas[t] = proc.lsf
    return TrialTrace(layout=layout, start_position=start_position,
                      heading=heading, speed=speed,
                      step_duration=step_duration, positions=positions,
                      betas=betas)


def top_lsf_set(betas: np.ndarray, k: int) -> tuple[int, ...]:
    """Indices of the k largest gains; ties resolved to the lowest index."""
    order = np.lexsort((np.arange(betas.shape[0]), -betas))
    return tuple(sorted(int(i) for i in order[:k]))


def derive_policy(trace: TrialTrace, t0: int, base_set: tuple[int, ...],
                  known_lsf: dict[int, float], res: PlannerResources,
                  cfg: EngineConfig,
                  prior_beliefs: np.ndarray | None = None) -> DerivedPolicy:
    """Divide-and-conquer policy derivation grounded at cycle ``t0``.

    One sub-problem per AP outside the base set: its pool is the base set
    plus that candidate. All sub-problems are solved; the one with the best
    total expected reward supplies the returned policy and pool (ties go to
    the earliest candidate).

    Pool APs without an entry in ``known_lsf`` get probabilistic initial
    beliefs: entries of ``prior_beliefs`` (per-AP good-state beliefs carried
    forward by the caller) when given, else their stationary good-state
    marginal at the grounding distance.
    """
    base = tuple(sorted(base_set))
    if len(base) != cfg.b_con:
        raise ConfigError(f"base set must hold exactly {cfg.b_con} APs")
    n_aps = trace.n_aps
    others = [b for b in range(n_aps) if b not in set(base)]
    if not others:
        raise ConfigError("no candidate APs outside the base set")

    # per-AP stage statistics, shared by every sub-problem
    dist = trace.distance_rows(t0 - 1, t0 + cfg.t_h - 1)  # (t_h + 1, B)
    pbar1 = prob_good(dist, res.quantizer, res.shadowing, res.pathloss)
    p11, p01 = trans_probs(dist[:-1], dist[1:], res.quantizer, res.shadowing,
                           res.pathloss, res.mobility)

    priors = pbar1[0] if prior_beliefs is None else prior_beliefs
    base_states = {ap: bool(known_lsf[ap] > res.quantizer.beta_threshold)
                   for ap in known_lsf}
    ups_base = np.array([
        (1.0 if base_states[ap] else 0.0) if ap in base_states else priors[ap]
        for ap in base])

    def ap_matrix(stage: int, ap: int) -> np.ndarray:
        return np.array([[1.0 - p01[stage - 1, ap], p01[stage - 1, ap]],
                         [1.0 - p11[stage - 1, ap], p11[stage - 1, ap]]])

    # expanded transitions shared across sub-problems: the base-AP kron part
    # is identical, only the candidate factor (most significant bit) varies
    base_krons = []
    for stage in range(2, cfg.t_h + 1):
        tb = np.ones((1, 1))
        for ap in base:
            tb = np.kron(ap_matrix(stage, ap), tb)
        base_krons.append(tb)

    values = np.empty(len(others))
    policies = []
    for ell, cand in enumerate(others):
        cols = list(base) + [cand]
        ups0 = np.concatenate([
            ups_base,
            [1.0 if base_states[cand] else 0.0] if cand in base_states
            else [priors[cand]]])
        model = PomdpModel(
            pool=tuple(cols), b_con=cfg.b_con, horizon=cfg.t_h,
            gamma=cfg.gamma, trans_p11=p11[:, cols], trans_p01=p01[:, cols],
            obs_pbar1=pbar1[:, cols], reward_tab=res.reward_tab,
            actions=res.actions, initial_belief=Belief(ups0))
        trans_full: list[np.ndarray | None] = [None] * cfg.t_h
        for stage in range(2, cfg.t_h + 1):
            trans_full[stage - 1] = np.kron(ap_matrix(stage, cand),
                                            base_krons[stage - 2])
        # pool-keyed solver stream: repeated derivations over the same pool
        # see identical belief-set noise, so sub-problem values stay
        # comparable from cycle to cycle (no jitter-driven pool switching)
        solver_rng = np.random.default_rng(
            np.random.SeedSequence([hash(tuple(cols)) & 0x7FFFFFFF]))
        policy = solve_pbvi(model, belief_budget=cfg.belief_budget,
                            expansion_depth=cfg.expansion_depth,
                            rng=solver_rng, obs_samples=cfg.obs_samples,
                            trans_full=trans_full)
        values[ell] = policy.value
        policies.append((policy, model))
    best = int(np.argmax(values))
    policy, model = policies[best]
    return DerivedPolicy(policy=policy, pool=model.pool, model=model,
                         values=values, n_subproblems=len(others))


class _BeliefTracker:
    """Per-AP good-state beliefs carried forward across derivations.

    Keeps, for every AP in the network, the probability that its channel is
    good at the current grounding cycle given the full observation history:
    observed (serving) APs snap to their quantized states, unobserved APs
    evolve through the per-cycle transition probabilities. Policy
    derivations read these entries as initial beliefs, so dropping an AP
    does not erase what was just learned about it.
    """

    def __init__(self, trace: TrialTrace, res: PlannerResources):
        self.trace = trace
        self.res = res
        d0 = trace.distance_rows(0, 0)[0]
        self.ups = np.asarray(prob_good(d0, res.quantizer, res.shadowing,
                                        res.pathloss), dtype=float)

    def observe(self, t: int, serving: tuple[int, ...]) -> None:
        idx = list(serving)
        good = quantize_good(self.trace.betas[t][idx], self.res.quantizer)
        self.ups[idx] = good.astype(float)

    def advance(self, t: int) -> None:
        """Propagate the grounding from cycle t-1 to cycle t."""
        d = self.trace.distance_rows(t - 1, t)
        p11, p01 = trans_probs(d[0], d[1], self.res.quantizer,
                               self.res.shadowing, self.res.pathloss,
                               self.res.mobility)
        self.ups = p01 + (p11 - p01) * self.ups


def _selected_aps(model: PomdpModel, action: int) -> tuple[int, ...]:
    pool = np.asarray(model.pool)
    return tuple(sorted(int(ap) for ap in pool[model.actions[action]]))


def _observe(model: PomdpModel, action: int, betas_row: np.ndarray,
             quantizer: StateQuantizer) -> dict[int, bool]:
    obs = {}
    for pos in np.flatnonzero(model.actions[action]):
        ap = model.pool[pos]
        obs[int(pos)] = bool(betas_row[ap] > quantizer.beta_threshold)
    return obs


def _count_ho(new: tuple[int, ...], old: tuple[int, ...]) -> int:
    return len(set(new) - set(old))


def run_pomdp_plain(trace: TrialTrace, res: PlannerResources,
                    cfg: EngineConfig) -> list[HandoffDecision]:
    """Apply the planned policy for ``t_h`` cycles per derivation."""
    serving = top_lsf_set(trace.betas[0], cfg.b_con)
    tracker = _BeliefTracker(trace, res)
    tracker.observe(0, serving)
    decisions: list[HandoffDecision] = []
    t = 1
    while t <= trace.n_cycles:
        known = {b: float(trace.betas[t - 1][b]) for b in serving}
        dp = derive_policy(trace, t, serving, known, res, cfg,
                           prior_beliefs=tracker.ups)
        belief = propagate(dp.model.initial_belief, dp.model, 1)
        for stage in range(1, cfg.t_h + 1):
            if t > trace.n_cycles:
                break
            a = act(dp.policy, belief, stage)
            new_set = _selected_aps(dp.model, a)
            n_ho = _count_ho(new_set, serving)
            decisions.append(HandoffDecision(cycle=t, serving_set=new_set,
                                             n_ho=n_ho, triggered=n_ho > 0))
            if stage < cfg.t_h and t < trace.n_cycles:
                obs = _observe(dp.model, a, trace.betas[t], res.quantizer)
                belief = belief_update(belief, a, obs, dp.model, stage + 1)
            serving = new_set
            tracker.advance(t)
            tracker.observe(t, serving)
            t += 1
    return decisions


def run_pomdp_ho_min(trace: TrialTrace, res: PlannerResources,
                     cfg: EngineConfig) -> list[HandoffDecision]:
    """Planned handoffs executed only on rate-threshold violations.

    The potential serving set tracks the planner's action every cycle; the
    actual serving set jumps to it only when the previous cycle's SE fell
    below ``r_threshold``. With ``reuse_policy`` the derived policy is
    reused while the potential set is unchanged and the horizon has not
    expired (the default re-derives every cycle).
    """
    serving = top_lsf_set(trace.betas[0], cfg.b_con)
    potential = serving
    rate_prev = _planner_rate(trace, 0, serving, res)
    tracker = _BeliefTracker(trace, res)
    tracker.observe(0, serving)
    decisions: list[HandoffDecision] = []
    # cache holds (derived, base_at_derivation, t0)
    cache: tuple[DerivedPolicy, tuple[int, ...], int] | None = None

    for t in range(1, trace.n_cycles + 1):
        if (cfg.reuse_policy and cache is not None and cache[1] == potential
                and t - cache[2] + 1 <= cfg.t_h):
            dp, _, t0 = cache
            stage = t - t0 + 1
        else:
            known = {b: float(trace.betas[t - 1][b]) for b in serving}
            dp = derive_policy(trace, t, potential, known, res, cfg,
                               prior_beliefs=tracker.ups)
            t0 = t
            cache = (dp, potential, t0)
            stage = 1
        # the carried beliefs are grounded at t - 1 (serving states
        # observed); advance them one cycle into the decision stage
        ups = tracker.ups[list(dp.model.pool)]
        belief = propagate(Belief(ups), dp.model, stage)
        a = act(dp.policy, belief, stage)
        potential = _selected_aps(dp.model, a)

        triggered = rate_prev < cfg.r_threshold
        new_set = potential if triggered else serving
        n_ho = _count_ho(new_set, serving)
        decisions.append(HandoffDecision(cycle=t, serving_set=new_set,
                                         n_ho=n_ho, triggered=triggered))
        serving = new_set
        tracker.advance(t)
        tracker.observe(t, serving)
        rate_prev = _planner_rate(trace, t, serving, res)
    return decisions


def _planner_rate(trace: TrialTrace, t: int, serving: tuple[int, ...],
                  res: PlannerResources) -> float:
    """Planner-side trigger rate: the reward value of the serving set.

    Uses the single-user closed form on the quantized channel states, i.e.
    exactly the reward the planner assigns to keeping this set, so the rate
    constraint and the planning objective share one scale.
    """
    betas = trace.betas[t][list(serving)]
    values = quantize_state(betas, res.quantizer)
    return snr_spectral_efficiency(values, res.aging, res.radio)


def _data_rate(trace: TrialTrace, t: int, serving: tuple[int, ...],
               res: PlannerResources) -> float:
    """Physical interferer-free data rate of the serving set (lower bound)."""
    serving = tuple(serving)
    cfgd = ServingConfig(serving_set=serving,
                         lsf_values={b: float(trace.betas[t][b])
                                     for b in serving})
    return rate_lb(cfgd, [], res.aging, res.radio)


def run_lsf_time(trace: TrialTrace, res: PlannerResources,
                 cfg: EngineConfig) -> list[HandoffDecision]:
    """Time-triggered baseline: best-LSF APs every cycle (oracle LSF)."""
    serving = top_lsf_set(trace.betas[0], cfg.b_con)
    decisions = []
    for t in range(1, trace.n_cycles + 1):
        new_set = top_lsf_set(trace.betas[t], cfg.b_con)
        n_ho = _count_ho(new_set, serving)
        decisions.append(HandoffDecision(cycle=t, serving_set=new_set,
                                         n_ho=n_ho, triggered=n_ho > 0))
        serving = new_set
    return decisions


def run_lsf_threshold(trace: TrialTrace, res: PlannerResources,
                      cfg: EngineConfig) -> list[HandoffDecision]:
    """Threshold-triggered baseline: best-LSF re-selection on violations.

    The trigger compares the physical data rate of the current set against
    the threshold; with the standard power budget this bound saturates well
    below high thresholds, in which case the scheme degenerates to the
    time-triggered baseline.
    """
    serving = top_lsf_set(trace.betas[0], cfg.b_con)
    rate_prev = _data_rate(trace, 0, serving, res)
    decisions = []
    for t in range(1, trace.n_cycles + 1):
        triggered = rate_prev < cfg.r_threshold
        new_set = top_lsf_set(trace.betas[t], cfg.b_con) if triggered \
            else serving
        n_ho = _count_ho(new_set, serving)
        decisions.append(HandoffDecision(cycle=t, serving_set=new_set,
                                         n_ho=n_ho, triggered=triggered))
        serving = new_set
        rate_prev = _data_rate(trace, t, serving, res)
    return decisions


def run_scheme(trace: TrialTrace, res: PlannerResources,
               cfg: EngineConfig) -> list[HandoffDecision]:
    """Dispatch a scheme run over one trial trace."""
    if trace.n_aps <= cfg.b_con:
        raise ConfigError("need more APs than b_con")
    if cfg.scheme == "pomdp_plain":
        return run_pomdp_plain(trace, res, cfg)
    if cfg.scheme == "pomdp_ho_min":
        return run_pomdp_ho_min(trace, res, cfg)
    if cfg.scheme == "lsf_time":
        return run_lsf_time(trace, res, cfg)
    if cfg.scheme == "lsf_threshold":
        return run_lsf_threshold(trace, res, cfg)
    raise ConfigError(f"unknown scheme {cfg.scheme!r}")
