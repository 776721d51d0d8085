"""Finite-horizon POMDP over a candidate AP pool, and a point-based solver.

The model is fully factorized: each pool AP carries an independent two-state
(good/bad) channel chain with stage-dependent transition probabilities, the
reward couples APs only through the action, and observations reveal the
states of connected APs exactly while unconnected APs produce uninformative
draws. Beliefs therefore stay in product form: a vector ``upsilon`` of
per-AP good-state probabilities.

Conventions
-----------
* Stage ``t`` runs 1..horizon. The model is grounded one cycle before the
  first decision: ``initial_belief`` describes that grounding cycle, and the
  stage-1 belief is its propagation through the stage-1 transition.
* State index ``i``: pool position ``k`` is good iff ``(i >> k) & 1``.
* Actions are the ``C(pool, b_con)`` subsets in lexicographic order, so
  action 0 selects pool positions ``0..b_con-1``.
* ``trans_p11[t-1]``/``trans_p01[t-1]`` hold the per-AP transition into
  stage ``t``; ``obs_pbar1[t]`` holds per-AP good-state marginals at stage
  ``t`` (row 0: grounding cycle).
* Observing happens after acting at the same stage; the next stage's belief
  conditions on that observation and then propagates.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import ConfigError

__all__ = [
    "PomdpModel",
    "Belief",
    "StagePolicy",
    "build_model",
    "expand_belief",
    "propagate",
    "belief_update",
    "solve_pbvi",
    "act",
    "exact_expectimax",
    "dump_model",
]


@dataclass(frozen=True)
class Belief:
    """Product-form belief: per-AP probability of the good state."""

    upsilon: np.ndarray

    def __post_init__(self):
        ups = np.asarray(self.upsilon, dtype=float)
        object.__setattr__(self, "upsilon", ups)
        if ups.size and (ups.min() < -1e-12 or ups.max() > 1 + 1e-12):
            raise ConfigError("belief entries must lie in [0, 1]")

    @classmethod
    def _wrap(cls, ups: np.ndarray) -> "Belief":
        """Internal fast path: skip validation of known-good arrays."""
        obj = object.__new__(cls)
        object.__setattr__(obj, "upsilon", ups)
        return obj


@dataclass(frozen=True)
class PomdpModel:
    pool: tuple[int, ...]  # global AP ids, ordered
    b_con: int
    horizon: int
    gamma: float
    trans_p11: np.ndarray  # (horizon, P)
    trans_p01: np.ndarray  # (horizon, P)
    obs_pbar1: np.ndarray  # (horizon + 1, P)
    reward_tab: np.ndarray  # (2^P, n_actions)
    actions: np.ndarray  # (n_actions, P) bool
    initial_belief: Belief

    @property
    def pool_size(self) -> int:
        return len(self.pool)

    @property
    def n_states(self) -> int:
        return 1 << self.pool_size

    @property
    def n_actions(self) -> int:
        return self.actions.shape[0]


@dataclass
class StagePolicy:
    """Per-stage alpha-vector sets; each alpha is tagged with an action."""

    alphas: list[np.ndarray]  # stage t -> (n_alpha, 2^P)
    action_tags: list[np.ndarray]  # stage t -> (n_alpha,)
    value: float  # expected discounted reward from the initial belief

    @property
    def horizon(self) -> int:
        return len(self.alphas)


def _action_matrix(pool_size: int, b_con: int) -> np.ndarray:
    combos = list(combinations(range(pool_size), b_con))
    mat = np.zeros((len(combos), pool_size), dtype=bool)
    for j, combo in enumerate(combos):
        mat[j, list(combo)] = True
    return mat


def build_model(pool, base_states: dict[int, bool], distances: np.ndarray,
                quantizer, shadowing, pathloss, mobility: tuple[float, float],
                reward_tab: np.ndarray, actions: np.ndarray, b_con: int,
                horizon: int, gamma: float) -> PomdpModel:
    """Assemble the stage-indexed POMDP for one candidate pool.

    ``base_states`` maps observed AP ids to their quantized state (True =
    good) at the grounding cycle; unobserved pool APs get the marginal
    good-state probability at their grounding distance as the prior.
    ``distances`` has shape (horizon + 1, pool); row 0 holds the grounding
    distances and rows 1..horizon the predicted distances per stage.
    """
    from .channel import prob_good, trans_probs

    pool = tuple(pool)
    p = len(pool)
    distances = np.asarray(distances, dtype=float)
    if distances.shape != (horizon + 1, p):
        raise ConfigError(
            f"distances must have shape {(horizon + 1, p)}, got {distances.shape}")
    if reward_tab.shape != (1 << p, actions.shape[0]):
        raise ConfigError("reward table does not match pool size / actions")

    pbar1 = np.empty((horizon + 1, p))
    for t in range(horizon + 1):
        pbar1[t] = prob_good(distances[t], quantizer, shadowing, pathloss)
    p11 = np.empty((horizon, p))
    p01 = np.empty((horizon, p))
    for t in range(1, horizon + 1):
        p11[t - 1], p01[t - 1] = trans_probs(
            distances[t - 1], distances[t], quantizer, shadowing, pathloss,
            mobility)

    ups = pbar1[0].copy()
    for k, ap in enumerate(pool):
        if ap in base_states:
            ups[k] = 1.0 if base_states[ap] else 0.0
    return PomdpModel(pool=pool, b_con=b_con, horizon=horizon, gamma=gamma,
                      trans_p11=p11, trans_p01=p01, obs_pbar1=pbar1,
                      reward_tab=np.asarray(reward_tab, dtype=float),
                      actions=np.asarray(actions, dtype=bool),
                      initial_belief=Belief(ups))


def expand_belief(belief: Belief) -> np.ndarray:
    """Joint distribution over the 2^P states implied by the product form."""
    return _expand_batch(belief.upsilon[None, :])[0]


def _expand_batch(ups: np.ndarray) -> np.ndarray:
    """Expand a batch of product beliefs, (N, P) -> (N, 2^P)."""
    out = np.ones((ups.shape[0], 1))
    for k in range(ups.shape[1]):
        u = ups[:, k:k + 1]
        out = np.concatenate([out * (1.0 - u), out * u], axis=1)
    return out


def propagate(belief: Belief, model: PomdpModel, stage: int) -> Belief:
    """Push the belief through the transition into ``stage`` (1..horizon)."""
    if not 1 <= stage <= model.horizon:
        raise ConfigError(f"stage must be in [1, {model.horizon}]")
    p11 = model.trans_p11[stage - 1]
    p01 = model.trans_p01[stage - 1]
    return Belief._wrap(p01 + (p11 - p01) * belief.upsilon)


def belief_update(belief: Belief, action: int, observation: dict[int, bool],
                  model: PomdpModel, stage: int) -> Belief:
    """Condition on the observed states of connected APs, then propagate.

    ``observation`` maps pool positions to observed good/bad states and must
    cover exactly the APs selected by ``action``. The resulting belief
    describes the ``stage`` state given everything seen before it.
    """
    mask = model.actions[action]
    selected = set(np.flatnonzero(mask).tolist())
    if set(observation.keys()) != selected:
        raise ConfigError("observation must cover exactly the connected APs")
    ups = belief.upsilon.copy()
    for pos, good in observation.items():
        ups[pos] = 1.0 if good else 0.0
    return propagate(Belief(ups), model, stage)


def _transition_matrices(model: PomdpModel, stage: int) -> list[np.ndarray]:
    """Per-AP 2x2 transition matrices (row: from-state) into ``stage``."""
    p11 = model.trans_p11[stage - 1]
    p01 = model.trans_p01[stage - 1]
    return [np.array([[1.0 - p01[k], p01[k]], [1.0 - p11[k], p11[k]]])
            for k in range(model.pool_size)]


def transition_full(model: PomdpModel, stage: int) -> np.ndarray:
    """Expanded (2^P, 2^P) transition matrix into ``stage``; row = from."""
    full = np.ones((1, 1))
    for mat in _transition_matrices(model, stage):
        # kron from pool position 0 outward so position k owns state bit k
        full = np.kron(mat, full)
    return full


def _group_ids(actions_key: tuple, pool_size: int) -> np.ndarray:
    actions = np.array(actions_key, dtype=bool).reshape(-1, pool_size)
    n_states = 1 << pool_size
    bits = (np.arange(n_states)[:, None] >> np.arange(pool_size)[None, :]) & 1
    gids = np.zeros((actions.shape[0], n_states), dtype=np.int64)
    for a in range(actions.shape[0]):
        conn = np.flatnonzero(actions[a])
        for j, pos in enumerate(conn):
            gids[a] |= bits[:, pos].astype(np.int64) << j
    return gids


_STATIC_CACHE: dict[tuple, tuple] = {}


def _static_structures(actions: np.ndarray, pool_size: int):
    """Per-(action set) constants: observation groups, sort orders, corners.

    Two states belong to the same observation group of an action iff they
    agree on every connected bit (they are then indistinguishable through
    the observation).
    """
    key = (pool_size, actions.tobytes())
    hit = _STATIC_CACHE.get(key)
    if hit is not None:
        return hit
    gids = _group_ids(tuple(actions.ravel().tolist()), pool_size)
    perms = [np.argsort(gids[a], kind="stable") for a in range(gids.shape[0])]
    n_corners = 1 << pool_size
    corners = ((np.arange(n_corners)[:, None]
                >> np.arange(pool_size)[None, :]) & 1).astype(float)
    out = (gids, perms, corners)
    _STATIC_CACHE[key] = out
    return out


def _collect_belief_points(model: PomdpModel, belief_budget: int,
                           expansion_depth: int, rng: np.random.Generator,
                           enumerate_threshold: int, obs_samples: int,
                           corners: np.ndarray) -> np.ndarray:
    """Corner + initial + reachable beliefs, budgeted by farthest-point L1.

    Reachable points are generated level by level from the stage-1 belief:
    per action, either every connected-observation pattern (small pools) or
    ``obs_samples`` sampled patterns per frontier point.
    """
    p11, p01 = model.trans_p11, model.trans_p01

    def prop_rows(arr: np.ndarray, stage: int) -> np.ndarray:
        return p01[stage - 1] + (p11[stage - 1] - p01[stage - 1]) * arr

    ups0 = model.initial_belief.upsilon[None, :]
    ups1 = prop_rows(ups0, 1)
    reached = [ups0, ups1]
    frontier = ups1
    for depth in range(expansion_depth):
        stage = depth + 1
        if stage >= model.horizon:
            break
        children = []
        for a in range(model.n_actions):
            conn = np.flatnonzero(model.actions[a])
            if 2 ** len(conn) <= enumerate_threshold:
                for code in range(2 ** len(conn)):
                    rows = frontier.copy()
                    rows[:, conn] = [(code >> j) & 1 for j in range(len(conn))]
                    children.append(prop_rows(rows, stage + 1))
            else:
                probs = frontier[:, conn]
                for _ in range(obs_samples):
                    rows = frontier.copy()
                    rows[:, conn] = rng.random(probs.shape) < probs
                    children.append(prop_rows(rows, stage + 1))
        frontier = np.vstack(children)
        if frontier.shape[0] > 512:
            keep = rng.choice(frontier.shape[0], size=512, replace=False)
            frontier = frontier[np.sort(keep)]
        reached.append(frontier)

    corner_bits = corners
    if belief_budget < corner_bits.shape[0]:
        warnings.warn(
            f"belief budget {belief_budget} below the {corner_bits.shape[0]} "
            "belief corners; corner set stochastically subsampled",
            RuntimeWarning, stacklevel=2)
        keep = rng.choice(corner_bits.shape[0],
                          size=max(belief_budget // 2, 1), replace=False)
        corner_bits = corner_bits[np.sort(keep)]

    pool_pts = np.vstack(reached + [corner_bits])
    pool_pts = np.unique(np.clip(pool_pts, 0.0, 1.0).round(12), axis=0)

    # farthest-point selection in L1 on the expanded representation, seeded
    # with the stage-1 belief (the point the policy is read from)
    expanded = _expand_batch(pool_pts)
    seed_vec = _expand_batch(ups1)[0]
    dist = np.sum(np.abs(expanded - seed_vec[None, :]), axis=1)
    chosen = [int(np.argmin(dist))]
    mind = np.sum(np.abs(expanded - expanded[chosen[0]][None, :]), axis=1)
    while len(chosen) < min(belief_budget, pool_pts.shape[0]):
        cand = int(np.argmax(mind))
        if mind[cand] <= 1e-12:
            break
        chosen.append(cand)
        mind = np.minimum(mind, np.sum(np.abs(expanded - expanded[cand][None, :]),
                                       axis=1))
    return expanded[np.array(chosen)]


def _dedup_alphas(alphas: np.ndarray, tags: np.ndarray):
    seen: dict[bytes, int] = {}
    keep = []
    for i in range(alphas.shape[0]):
        key = tags[i].tobytes() + alphas[i].tobytes()
        if key not in seen:
            seen[key] = i
            keep.append(i)
    idx = np.array(keep)
    return alphas[idx], tags[idx]


def solve_pbvi(model: PomdpModel, belief_budget: int = 128,
               expansion_depth: int = 2, rng: np.random.Generator | None = None,
               enumerate_threshold: int = 8, obs_samples: int = 2,
               trans_full: list[np.ndarray | None] | None = None) -> StagePolicy:
    """Finite-horizon point-based value iteration with exact stage backups.

    Alpha sets are built backward from the final stage over a fixed belief
    set (belief corners, the initial belief, and beliefs reachable from it).
    Every backup is an exact Bellman backup, so each alpha vector is the
    value of a realizable plan and the reported value never exceeds the
    optimum. ``trans_full`` may supply precomputed expanded transition
    matrices (index t-1 = into stage t) to share work across related models.
    """
    if rng is None:
        rng = np.random.default_rng(0)
    gids, perms, corners = _static_structures(model.actions, model.pool_size)
    beliefs = _collect_belief_points(model, belief_budget, expansion_depth,
                                     rng, enumerate_threshold, obs_samples,
                                     corners)
    n_pts = beliefs.shape[0]
    n_states = model.n_states
    n_actions = model.n_actions
    r_tab = model.reward_tab  # (S, A)
    group_size = 1 << (model.pool_size - model.b_con)
    n_groups = n_states // group_size
    state_idx = np.arange(n_states)
    pts_idx = np.arange(n_pts)
    perm_all = np.stack(perms)  # (A, S)
    base_rewards = beliefs @ r_tab  # (Npts, A)

    # belief mass per observation group, laid out for batched matmuls:
    # (A * n_groups, group_size, Npts)
    bg = beliefs[:, perm_all].transpose(1, 0, 2).reshape(
        n_actions, n_pts, n_groups, group_size).transpose(0, 2, 3, 1)
    bg = np.ascontiguousarray(bg).reshape(n_actions * n_groups, group_size,
                                          n_pts)

    alphas: list[np.ndarray] = [None] * model.horizon  # type: ignore
    tags: list[np.ndarray] = [None] * model.horizon  # type: ignore
    alphas[model.horizon - 1] = r_tab.T.copy()
    tags[model.horizon - 1] = np.arange(n_actions)

    for stage in range(model.horizon - 1, 0, -1):
        tf = trans_full[stage] if trans_full is not None else None
        if tf is None:
            tf = transition_full(model, stage + 1)
        w = alphas[stage] @ tf.T  # (G, S): expected next value per from-state
        n_alpha = w.shape[0]
        wg = w[:, perm_all].transpose(1, 0, 2).reshape(
            n_actions, n_alpha, n_groups, group_size).transpose(0, 2, 1, 3)
        wg = np.ascontiguousarray(wg).reshape(n_actions * n_groups, n_alpha,
                                              group_size)
        # seg[(a,o), g, p] = sum_{s in group (a,o)} w[g, s] * belief_p[s]
        seg = np.matmul(wg, bg).reshape(n_actions, n_groups, n_alpha, n_pts)
        seg = np.ascontiguousarray(seg.transpose(0, 1, 3, 2))  # (A,O,Np,G)
        best = seg.argmax(axis=-1)  # (A, O, Npts)
        fut = seg.max(axis=-1)
        val = base_rewards + model.gamma * fut.sum(axis=1).T  # (Npts, A)
        best_a = np.argmax(val, axis=1)  # ties -> lowest action index
        # assemble one alpha per belief point, for its best action only
        chosen_gids = gids[best_a]  # (Npts, S)
        pick = best[best_a[:, None], chosen_gids, pts_idx[:, None]]
        stage_alphas = r_tab.T[best_a] \
            + model.gamma * w[pick, state_idx[None, :]]
        stage_alphas, stage_tags = _dedup_alphas(stage_alphas, best_a)
        alphas[stage - 1] = stage_alphas
        tags[stage - 1] = stage_tags

    omega1 = expand_belief(propagate(model.initial_belief, model, 1))
    value = float(np.max(alphas[0] @ omega1))
    return StagePolicy(alphas=alphas, action_tags=tags, value=value)


def act(policy: StagePolicy, belief: Belief, stage: int) -> int:
    """Best action at ``stage`` for ``belief``; ties pick the lowest index."""
    if not 1 <= stage <= policy.horizon:
        raise ConfigError(f"stage must be in [1, {policy.horizon}]")
    scores = policy.alphas[stage - 1] @ expand_belief(belief)
    best = scores.max()
    return int(policy.action_tags[stage - 1][scores >= best].min())


def exact_expectimax(model: PomdpModel, horizon: int | None = None) -> float:
    """Optimal expected discounted reward by exhaustive tree expansion.

    Only sized for toy instances: pool of at most 3 APs and horizon at most
    4. Serves as the ground-truth oracle for the point-based solver.
    """
    horizon = model.horizon if horizon is None else horizon
    if model.pool_size > 3 or horizon > 4:
        raise ConfigError("exact_expectimax is limited to pool <= 3, horizon <= 4")
    if horizon > model.horizon:
        raise ConfigError("horizon exceeds the model horizon")

    def value(belief: Belief, stage: int) -> float:
        omega = expand_belief(belief)
        best = -np.inf
        for a in range(model.n_actions):
            v = float(omega @ model.reward_tab[:, a])
            if stage < horizon:
                conn = np.flatnonzero(model.actions[a])
                probs = belief.upsilon[conn]
                acc = 0.0
                for code in range(1 << len(conn)):
                    goods = [(code >> j) & 1 == 1 for j in range(len(conn))]
                    pr = float(np.prod([p if g else 1.0 - p
                                        for p, g in zip(probs, goods)]))
                    if pr == 0.0:
                        continue
                    obs = dict(zip(conn.tolist(), goods))
                    child = belief_update(belief, a, obs, model, stage + 1)
                    acc += pr * value(child, stage + 1)
                v += model.gamma * acc
            best = max(best, v)
        return best

    return value(propagate(model.initial_belief, model, 1), 1)


def dump_model(model: PomdpModel, path) -> None:
    """Write a plain-text interchange dump of the model.

    The format is line-oriented (see docs/pomdp_dump_format.md): states as
    good/bad bitstrings, actions as selected pool positions, per-stage
    expanded transition triplets, per-stage observation triplets per action
    (only nonzero entries), and the dense reward table.
    """
    p = model.pool_size
    s = model.n_states
    lines = []
    lines.append(f"pomdp pool_size={p} b_con={model.b_con} "
                 f"horizon={model.horizon} gamma={model.gamma:.9g}")
    lines.append("pool " + " ".join(str(ap) for ap in model.pool))
    lines.append(f"states {s}")
    for i in range(s):
        bitstr = "".join("1" if (i >> k) & 1 else "0" for k in range(p))
        lines.append(f"state {i} {bitstr}")
    lines.append(f"actions {model.n_actions}")
    for a in range(model.n_actions):
        sel = " ".join(str(k) for k in np.flatnonzero(model.actions[a]))
        lines.append(f"action {a} {sel}")
    lines.append(f"observations {s}")
    lines.append("initial_belief " + " ".join(
        f"{u:.12g}" for u in model.initial_belief.upsilon))
    for t in range(1, model.horizon + 1):
        full = transition_full(model, t)
        lines.append(f"transition stage={t} entries={np.count_nonzero(full)}")
        for i, j in zip(*np.nonzero(full)):
            lines.append(f"T {i} {j} {full[i, j]:.12g}")
        pbar = model.obs_pbar1[t]
        lines.append(f"observation stage={t}")
        for a in range(model.n_actions):
            free = np.flatnonzero(~model.actions[a])
            for i in range(s):
                # the connected bits of the observation equal those of the
                # state; unconnected bits are independent marginal draws
                for code in range(1 << len(free)):
                    obs_index = i
                    pr = 1.0
                    for j, pos in enumerate(free):
                        bit = (code >> j) & 1
                        pr *= pbar[pos] if bit else 1.0 - pbar[pos]
                        if bit:
                            obs_index |= 1 << int(pos)
                        else:
                            obs_index &= ~(1 << int(pos))
                    if pr > 0.0:
                        lines.append(f"O {a} {i} {obs_index} {pr:.12g}")
        lines.append(f"reward stage={t}")
        for i in range(s):
            row = " ".join(f"{model.reward_tab[i, a]:.12g}"
                           for a in range(model.n_actions))
            lines.append(f"R {i} {row}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")
