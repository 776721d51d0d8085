import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cfho.channel import (AgingProfile, PathLossParams, ShadowingParams,
                          StateQuantizer)
from cfho.errors import ConfigError
from cfho.pomdp import (Belief, act, belief_update, build_model, dump_model,
                        exact_expectimax, expand_belief, propagate,
                        solve_pbvi, transition_full)
from cfho.rates import RadioParams, reward_table

PL = PathLossParams()
SH = ShadowingParams()
QUANT = StateQuantizer.from_distances(PL)
RADIO = RadioParams(p_dl=1.0, p_ul=0.1, noise_power=5.0238e-13, M=8,
                    tau_c=200, tau_p=16, pilot_index=16)
AGING = AgingProfile.build(60.0, 66.7e-6, 200)


def toy_model(pool_size=2, b_con=1, horizon=3, observed=None, drift=None,
              gamma=0.95):
    tab, actions = reward_table(pool_size, b_con, QUANT.beta_good,
                                QUANT.beta_bad, 1, AGING, RADIO)
    base = np.linspace(90.0, 220.0, pool_size)
    drift = np.full(pool_size, 10.0) if drift is None else np.asarray(drift)
    dist = base[None, :] + drift[None, :] * np.arange(horizon + 1)[:, None]
    observed = {0: True} if observed is None else observed
    return build_model(tuple(range(pool_size)), observed, np.clip(dist, 5, None),
                       QUANT, SH, PL, (10.0, 1.0), tab, actions,
                       b_con=b_con, horizon=horizon, gamma=gamma)


class TestBelief:
    def test_expand_unit_mass(self):
        np.testing.assert_allclose(expand_belief(Belief(np.ones(3))),
                                   np.eye(8)[7])

    def test_expand_uniform(self):
        omega = expand_belief(Belief(np.full(6, 0.5)))
        np.testing.assert_allclose(omega, np.full(64, 1 / 64))

    def test_invalid_entries_rejected(self):
        with pytest.raises(ConfigError):
            Belief(np.array([0.5, 1.5]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(0, 1), min_size=1, max_size=6))
def test_expand_sums_to_one(ups):
    omega = expand_belief(Belief(np.array(ups)))
    assert abs(float(omega.sum()) - 1.0) < 1e-12
    assert np.all(omega >= -1e-15)


class TestBeliefUpdate:
    def test_connected_observed_good(self):
        model = toy_model()
        nxt = belief_update(Belief(np.array([0.3, 0.8])), 0, {0: True},
                            model, 1)
        assert nxt.upsilon[0] == pytest.approx(float(model.trans_p11[0, 0]))

    def test_connected_observed_bad(self):
        model = toy_model()
        nxt = belief_update(Belief(np.array([0.3, 0.8])), 0, {0: False},
                            model, 1)
        assert nxt.upsilon[0] == pytest.approx(float(model.trans_p01[0, 0]))

    def test_unconnected_degenerate_belief(self):
        model = toy_model()
        nxt = belief_update(Belief(np.array([0.3, 1.0])), 0, {0: True},
                            model, 1)
        assert nxt.upsilon[1] == pytest.approx(float(model.trans_p11[0, 1]))

    def test_observation_for_unconnected_rejected(self):
        model = toy_model()
        with pytest.raises(ConfigError):
            belief_update(Belief(np.array([0.3, 0.8])), 0, {1: True}, model, 1)

    def test_factorized_equals_expanded_bayes(self):
        model = toy_model(pool_size=3, b_con=2, horizon=3)
        rng = np.random.default_rng(1)
        for _ in range(300):
            ups = rng.random(3)
            a = int(rng.integers(0, model.n_actions))
            conn = np.flatnonzero(model.actions[a])
            obs = {int(c): bool(rng.random() < 0.5) for c in conn}
            stage = int(rng.integers(1, 4))
            fact = expand_belief(belief_update(Belief(ups), a, obs, model,
                                               stage))
            omega = expand_belief(Belief(ups))
            keep = np.ones(model.n_states, dtype=bool)
            for pos, good in obs.items():
                bits = (np.arange(model.n_states) >> pos) & 1
                keep &= bits == int(good)
            omega = omega * keep
            if omega.sum() == 0:
                continue
            omega = omega / omega.sum()
            exact = omega @ transition_full(model, stage)
            np.testing.assert_allclose(fact, exact, atol=1e-12)


class TestTransitionMatrix:
    def test_rows_stochastic(self):
        model = toy_model(pool_size=3, b_con=2, horizon=4)
        for stage in range(1, 5):
            full = transition_full(model, stage)
            np.testing.assert_allclose(full.sum(axis=1), 1.0, atol=1e-9)
            assert np.all(full >= 0)


class TestSolver:
    def test_structural_counts_pool6(self):
        tab, actions = reward_table(6, 5, QUANT.beta_good, QUANT.beta_bad, 1,
                                    AGING, RADIO)
        model = build_model(tuple(range(6)), {0: True},
                            np.full((2, 6), 100.0), QUANT, SH, PL, (10.0, 1.0),
                            tab, actions, b_con=5, horizon=1, gamma=0.95)
        assert model.n_states == 64
        assert model.n_actions == 6
        assert model.reward_tab.shape == (64, 6)

    def test_one_step_horizon_is_greedy(self):
        model = toy_model(horizon=1)
        policy = solve_pbvi(model, belief_budget=16, expansion_depth=0,
                            rng=np.random.default_rng(0))
        omega1 = propagate(model.initial_belief, model, 1)
        expanded = expand_belief(omega1)
        greedy = float(np.max(expanded @ model.reward_tab))
        assert policy.value == pytest.approx(greedy, abs=1e-12)
        greedy_action = int(np.argmax(expanded @ model.reward_tab))
        assert act(policy, omega1, 1) == greedy_action

    def test_gamma_zero_every_stage_greedy(self):
        model = toy_model(horizon=3, gamma=0.0)
        policy = solve_pbvi(model, belief_budget=32, expansion_depth=2,
                            rng=np.random.default_rng(0))
        bel = Belief(np.array([0.7, 0.4]))
        expected = int(np.argmax(expand_belief(bel) @ model.reward_tab))
        for stage in (1, 2, 3):
            assert act(policy, bel, stage) == expected

    def test_matches_expectimax_with_full_reachable_set(self):
        for horizon in (1, 2, 3):
            model = toy_model(horizon=horizon)
            policy = solve_pbvi(model, belief_budget=256,
                                expansion_depth=max(1, horizon - 1),
                                rng=np.random.default_rng(0))
            assert policy.value == pytest.approx(exact_expectimax(model),
                                                 abs=1e-9)

    def test_never_exceeds_exact_value(self):
        rng = np.random.default_rng(5)
        for _ in range(8):
            model = toy_model(pool_size=2, b_con=1,
                              horizon=int(rng.integers(1, 4)),
                              drift=rng.uniform(-20, 20, size=2))
            exact = exact_expectimax(model)
            small = solve_pbvi(model, belief_budget=3, expansion_depth=0,
                               rng=np.random.default_rng(1))
            assert small.value <= exact + 1e-9

    def test_value_nondecreasing_in_horizon(self):
        values = []
        for horizon in (1, 2, 3, 4):
            model = toy_model(horizon=horizon)
            values.append(exact_expectimax(model))
        assert all(b >= a - 1e-12 for a, b in zip(values, values[1:]))

    def test_deterministic_given_seed(self):
        model = toy_model(pool_size=3, b_con=2, horizon=3)
        a = solve_pbvi(model, belief_budget=12, expansion_depth=2,
                       rng=np.random.default_rng(9))
        b = solve_pbvi(model, belief_budget=12, expansion_depth=2,
                       rng=np.random.default_rng(9))
        assert a.value == b.value

    def test_corner_subsample_warns(self):
        model = toy_model(pool_size=3, b_con=2, horizon=2)
        with pytest.warns(RuntimeWarning):
            solve_pbvi(model, belief_budget=4, expansion_depth=1,
                       rng=np.random.default_rng(0))


class TestAct:
    def test_tie_breaks_to_lowest_action(self):
        from cfho.pomdp import StagePolicy
        alphas = [np.array([[1.0, 1.0, 1.0, 1.0], [1.0, 1.0, 1.0, 1.0]])]
        policy = StagePolicy(alphas=alphas,
                             action_tags=[np.array([1, 0])], value=1.0)
        assert act(policy, Belief(np.array([0.5, 0.5])), 1) == 0

    def test_argmax_invariant_to_constant_shift(self):
        model = toy_model(horizon=2)
        policy = solve_pbvi(model, belief_budget=32, expansion_depth=1,
                            rng=np.random.default_rng(0))
        bel = Belief(np.array([0.6, 0.2]))
        base = act(policy, bel, 1)
        shifted = [a + 5.0 for a in policy.alphas]
        from cfho.pomdp import StagePolicy
        policy2 = StagePolicy(alphas=shifted, action_tags=policy.action_tags,
                              value=policy.value)
        assert act(policy2, bel, 1) == base

    def test_stage_guard(self):
        model = toy_model(horizon=2)
        policy = solve_pbvi(model, belief_budget=8, expansion_depth=1,
                            rng=np.random.default_rng(0))
        with pytest.raises(ConfigError):
            act(policy, Belief(np.array([0.5, 0.5])), 3)


class TestPolicyDominance:
    def test_corner_value_dominates_fixed_action_plans(self):
        # the solved value at a corner belief must be at least the exact
        # value of committing to any single action for the whole horizon
        model = toy_model(pool_size=2, b_con=1, horizon=3)
        policy = solve_pbvi(model, belief_budget=64, expansion_depth=2,
                            rng=np.random.default_rng(0))
        for corner_bits in range(4):
            ups0 = np.array([(corner_bits >> k) & 1 for k in range(2)],
                            dtype=float)
            omega = expand_belief(propagate(Belief(ups0), model, 1))
            solved = float(np.max(policy.alphas[0] @ omega))
            for a in range(model.n_actions):
                fixed = omega.copy()
                value = float(fixed @ model.reward_tab[:, a])
                disc = 1.0
                for stage in range(2, model.horizon + 1):
                    fixed = fixed @ transition_full(model, stage)
                    disc *= model.gamma
                    value += disc * float(fixed @ model.reward_tab[:, a])
                assert solved >= value - 1e-9


class TestExpectimax:
    def test_size_guard(self):
        tab, actions = reward_table(4, 3, QUANT.beta_good, QUANT.beta_bad, 1,
                                    AGING, RADIO)
        model = build_model(tuple(range(4)), {}, np.full((2, 4), 100.0),
                            QUANT, SH, PL, (10.0, 1.0), tab, actions,
                            b_con=3, horizon=1, gamma=0.95)
        with pytest.raises(ConfigError):
            exact_expectimax(model)


class TestDump:
    def test_dump_roundtrip_properties(self, tmp_path):
        model = toy_model(pool_size=2, b_con=1, horizon=2)
        path = tmp_path / "model.pomdp.txt"
        dump_model(model, path)
        text = path.read_text().splitlines()
        assert text[0].startswith("pomdp pool_size=2 b_con=1 horizon=2")
        assert "states 4" in text[2]
        # transition triplets of each stage form a row-stochastic matrix
        for stage in (1, 2):
            rows = np.zeros((4, 4))
            active = False
            for line in text:
                if line.startswith(f"transition stage={stage}"):
                    active = True
                    continue
                if active and line.startswith("T "):
                    _, i, j, v = line.split()
                    rows[int(i), int(j)] = float(v)
                elif active and not line.startswith("T "):
                    break
            np.testing.assert_allclose(rows.sum(axis=1), 1.0, atol=1e-9)
        # observation rows sum to one per (action, state)
        obs_sum: dict[tuple[int, int], float] = {}
        in_stage1 = False
        for line in text:
            if line.startswith("observation stage=1"):
                in_stage1 = True
                continue
            if in_stage1 and line.startswith("O "):
                _, a, i, _, v = line.split()
                obs_sum[(int(a), int(i))] = obs_sum.get((int(a), int(i)), 0.0) \
                    + float(v)
            elif in_stage1 and line.startswith("reward"):
                break
        assert obs_sum
        for total in obs_sum.values():
            assert total == pytest.approx(1.0, abs=1e-9)
