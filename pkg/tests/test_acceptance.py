"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the per-criterion
lines; the full campaign behind criterion 1 takes the longest (about 15
minutes on two cores).
"""

import math

import numpy as np
import pytest

from cfho.channel import (AgingProfile, PathLossParams, ShadowingParams,
                          StateQuantizer, bvn_upper_rect, prob_good,
                          step_correlation, trans_probs)
from cfho.config import default_config
from cfho.engine import derive_policy, top_lsf_set
from cfho.export import write_outputs
from cfho.harness import build_trial_trace, run_experiment
from cfho.pomdp import (Belief, belief_update, exact_expectimax,
                        expand_belief, solve_pbvi, transition_full)
from cfho.rates import mc_signal_oracle, rate_xi_terms
from cfho.validate import _toy_model, random_rate_config, _default_radio, \
    _default_aging


def _report(criterion: str, passed: bool, detail: str = "") -> None:
    mark = "PASS" if passed else "FAIL"
    print(f"[{mark}] {criterion}" + (f" :: {detail}" if detail else ""))
    assert passed, f"{criterion}: {detail}"


# ---------------------------------------------------------------------------
# 1. Handoff-reduction reproduction (the headline claim)
# ---------------------------------------------------------------------------

def test_criterion_1_handoff_reduction():
    cfg = default_config("desk")  # 60 APs / 0.7 km^2 ~ 122 APs per km^2
    assert cfg.seeds.trials == 50
    assert cfg.mobility.trip_cycles == 100
    assert cfg.engine.t_h == 10
    assert cfg.engine.r_threshold_nats == 7.0
    metrics = run_experiment(cfg, workers=2)
    pomdp = metrics.total_hos("pomdp_ho_min").sum()
    lsf_time = metrics.total_hos("lsf_time").sum()
    lsf_thr = metrics.total_hos("lsf_threshold").sum()
    ratio_time = pomdp / lsf_time
    ratio_thr = pomdp / lsf_thr
    _report(
        "criterion 1: cumulative-HO reduction",
        ratio_time <= 0.60 and ratio_thr <= 0.55,
        f"pomdp={pomdp} lsf_time={lsf_time} lsf_threshold={lsf_thr} "
        f"ratio_time={ratio_time:.3f} (<=0.60) "
        f"ratio_threshold={ratio_thr:.3f} (<=0.55)")


# ---------------------------------------------------------------------------
# 2. Closed-form rate terms vs the Monte Carlo signal oracle
# ---------------------------------------------------------------------------

def test_criterion_2_rate_vs_monte_carlo():
    radio = _default_radio()
    aging = _default_aging()
    rng = np.random.default_rng(2024)
    failures = []
    n_checked = 0
    for c in range(10):
        serving, interferers = random_rate_config(rng)
        lag = int(rng.choice([0, 60, 150]))
        xi1, xi23, xi4 = rate_xi_terms(serving, interferers, aging, radio, lag)
        est = mc_signal_oracle(serving, interferers, aging, radio, 100_000,
                               rng, lag)
        checks = [("xi1", xi1, est["ds"], est["ds_se"]),
                  ("xi23", xi23, est["bu_ca"], est["bu_ca_se"])]
        for k, val in enumerate(xi4):
            checks.append((f"xi4[{k}]", val, est["mi"][k], est["mi_se"][k]))
        for name, closed, mc, se in checks:
            n_checked += 1
            tol = max(0.03 * abs(closed), 3.0 * se)
            if abs(closed - mc) > tol:
                failures.append(f"config {c} {name}: closed={closed:.4e} "
                                f"mc={mc:.4e} tol={tol:.2e}")
    _report("criterion 2: closed-form rate vs MC oracle", not failures,
            f"{n_checked} terms over 10 configs"
            + ("; " + "; ".join(failures) if failures else ""))


# ---------------------------------------------------------------------------
# 3. Transition/observation probabilities vs simulated shadowing
# ---------------------------------------------------------------------------

def test_criterion_3_transition_probabilities_vs_mc():
    pl = PathLossParams()
    quant = StateQuantizer.from_distances(pl)
    mobility = (10.0, 1.0)
    rng = np.random.default_rng(7)
    n = 1_000_000
    pairs = ((120.0, 130.0), (140.0, 150.0), (150.0, 160.0),
             (170.0, 160.0), (200.0, 210.0))
    worst = 0.0
    for iota in (0.0, 0.5, 1.0):
        sh = ShadowingParams(sigma_sh_db=6.0, d_decorr=100.0, iota=iota)
        c = step_correlation(*mobility, sh)
        for d_prev, d_curr in pairs:
            kappa1 = rng.standard_normal(n)
            k2p = rng.standard_normal(n)
            k2c = c * k2p + math.sqrt(1 - c * c) * rng.standard_normal(n)
            w1, w2 = math.sqrt(iota), math.sqrt(1 - iota)
            from cfho.channel import path_loss
            bp = path_loss(d_prev, pl) * 10 ** (0.6 * (w1 * kappa1 + w2 * k2p))
            bc = path_loss(d_curr, pl) * 10 ** (0.6 * (w1 * kappa1 + w2 * k2c))
            gp = bp > quant.beta_threshold
            gc = bc > quant.beta_threshold
            p1 = float(prob_good(d_curr, quant, sh, pl))
            p11, p01 = trans_probs(d_prev, d_curr, quant, sh, pl, mobility)
            worst = max(worst,
                        abs(p1 - gc.mean()),
                        abs(p11 - (gc & gp).sum() / max(gp.sum(), 1)),
                        abs(p01 - (gc & ~gp).sum() / max((~gp).sum(), 1)))
    _report("criterion 3: state probabilities vs simulated shadowing",
            worst <= 5e-3, f"worst abs deviation {worst:.2e} (<=5e-3), "
            f"{len(pairs)} distance pairs x 3 iota values, 1e6 pairs each")


# ---------------------------------------------------------------------------
# 4. Solver correctness on toy models
# ---------------------------------------------------------------------------

def test_criterion_4_pbvi_equals_expectimax():
    rng = np.random.default_rng(11)
    worst_eq = 0.0
    bound_ok = True
    for m in range(8):
        horizon = int(rng.integers(1, 4))
        model = _toy_model(rng, 2, 1, horizon,
                           observed_good=bool(rng.random() < 0.5))
        exact = exact_expectimax(model)
        full = solve_pbvi(model, belief_budget=256,
                          expansion_depth=max(1, horizon - 1),
                          rng=np.random.default_rng(m))
        worst_eq = max(worst_eq, abs(full.value - exact))
        small = solve_pbvi(model, belief_budget=3, expansion_depth=0,
                           rng=np.random.default_rng(m))
        bound_ok &= small.value <= exact + 1e-9
        bound_ok &= full.value <= exact + 1e-9
    _report("criterion 4: PBVI equals expectimax on toys",
            worst_eq <= 1e-9 and bound_ok,
            f"worst |pbvi-exact| {worst_eq:.2e} (<=1e-9), "
            f"lower-bound property {'held' if bound_ok else 'VIOLATED'}")


# ---------------------------------------------------------------------------
# 5. Belief factorization consistency
# ---------------------------------------------------------------------------

def test_criterion_5_belief_consistency():
    rng = np.random.default_rng(13)
    model = _toy_model(rng, 3, 2, 3)
    worst = 0.0
    worst_sum = 0.0
    for _ in range(1000):
        ups = rng.random(3)
        a = int(rng.integers(0, model.n_actions))
        conn = np.flatnonzero(model.actions[a])
        obs = {int(k): bool(rng.random() < 0.5) for k in conn}
        stage = int(rng.integers(1, 4))
        fact = expand_belief(belief_update(Belief(ups), a, obs, model, stage))
        worst_sum = max(worst_sum, abs(float(fact.sum()) - 1.0))
        omega = expand_belief(Belief(ups))
        keep = np.ones(model.n_states, dtype=bool)
        for pos, good in obs.items():
            keep &= ((np.arange(model.n_states) >> pos) & 1) == int(good)
        omega = omega * keep
        if omega.sum() == 0:
            continue
        omega /= omega.sum()
        exact = omega @ transition_full(model, stage)
        worst = max(worst, float(np.max(np.abs(fact - exact))))
    _report("criterion 5: factorized belief equals exact Bayes filter",
            worst <= 1e-12 and worst_sum <= 1e-12,
            f"worst entry deviation {worst:.2e}, worst sum deviation "
            f"{worst_sum:.2e} over 1000 random triples (<=1e-12)")


# ---------------------------------------------------------------------------
# 6. Structural counts
# ---------------------------------------------------------------------------

def test_criterion_6_structural_counts():
    cfg = default_config("desk")
    cfg.network.n_aps = 30
    cfg.mobility.trip_cycles = 12
    cfg.validate()
    trace = build_trial_trace(cfg, 0)
    res = cfg.planner_resources()
    serving = top_lsf_set(trace.betas[0], 5)
    known = {b: float(trace.betas[0][b]) for b in serving}
    dp = derive_policy(trace, 1, serving, known, res,
                       cfg.engine_config("pomdp_ho_min"))
    ok = (dp.model.n_states == 64 and dp.model.n_actions == 6
          and dp.n_subproblems == 30 - 5 and len(dp.pool) == 6)
    _report("criterion 6: structural counts",
            ok, f"|S|={dp.model.n_states} (=64), |A|={dp.model.n_actions} "
            f"(=C(6,5)=6), subproblems={dp.n_subproblems} (=|B|-B_con=25)")


# ---------------------------------------------------------------------------
# 7. Bivariate normal accuracy
# ---------------------------------------------------------------------------

def test_criterion_7_bivariate_normal():
    worst_orthant = 0.0
    for rho in np.arange(-0.9, 0.95, 0.1):
        expect = 0.25 + math.asin(rho) / (2 * math.pi)
        worst_orthant = max(worst_orthant,
                            abs(bvn_upper_rect(0.0, 0.0, rho) - expect))
    rng = np.random.default_rng(17)
    n = 10_000_000
    worst_mc = 0.0
    for a, b, rho in ((0.5, -0.3, 0.6), (1.5, 1.0, -0.5), (-1.0, 0.2, 0.9)):
        x = rng.standard_normal(n)
        y = rho * x + math.sqrt(1 - rho * rho) * rng.standard_normal(n)
        emp = float(np.mean((x > a) & (y > b)))
        worst_mc = max(worst_mc, abs(emp - bvn_upper_rect(a, b, rho)))
    _report("criterion 7: bivariate normal rectangle",
            worst_orthant <= 1e-8 and worst_mc <= 1e-3,
            f"orthant-identity worst {worst_orthant:.2e} (<=1e-8), "
            f"1e7-sample MC worst {worst_mc:.2e} (<=1e-3)")


# ---------------------------------------------------------------------------
# 8. Byte-identical deterministic export
# ---------------------------------------------------------------------------

def test_criterion_8_deterministic_export(tmp_path):
    cfg = default_config("desk")
    cfg.network.n_aps = 12
    cfg.network.area_side_m = 500.0
    cfg.network.wrap_margin_m = 150.0
    cfg.engine.b_con = 3
    cfg.engine.t_h = 4
    cfg.engine.belief_budget = 10
    cfg.mobility.trip_cycles = 12
    cfg.seeds.trials = 4
    cfg.validate()
    m_serial = run_experiment(cfg, workers=1)
    m_par = run_experiment(cfg, workers=2)
    p1 = write_outputs(m_serial, tmp_path / "serial")
    p2 = write_outputs(m_par, tmp_path / "parallel")
    p3 = write_outputs(run_experiment(cfg, workers=1), tmp_path / "rerun")
    same = all(open(p1[k], "rb").read() == open(p2[k], "rb").read()
               and open(p1[k], "rb").read() == open(p3[k], "rb").read()
               for k in ("cycles", "summary", "manifest"))
    _report("criterion 8: byte-identical CSV/JSON across runs and workers",
            same, "serial vs 2-worker vs rerun")
