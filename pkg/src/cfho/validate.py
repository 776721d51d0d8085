"""Oracle validation suites.

Three independent cross-checks, each runnable standalone and wired into the
``cfho validate`` command:

* closed-form rate terms against the signal-level Monte Carlo oracle,
* channel-state probabilities against simulated correlated-shadowing pairs,
* the point-based solver against exhaustive expectimax on toy models.
"""

from __future__ import annotations

import numpy as np

from .channel import (AgingProfile, PathLossParams, ShadowingParams,
                      StateQuantizer, path_loss, prob_good, step_correlation,
                      trans_probs)
from .pomdp import build_model, exact_expectimax, solve_pbvi
from .rates import (Interferer, RadioParams, ServingConfig, mc_signal_oracle,
                    rate_xi_terms, reward_table)

__all__ = [
    "random_rate_config",
    "validate_rate_vs_mc",
    "validate_transition_vs_mc",
    "validate_pbvi_vs_expectimax",
    "run_all_validations",
]

_TABLE1_RADIO = dict(p_dl=1.0, p_ul=0.1, noise_power=5.0238e-13, M=8,
                     tau_c=200, tau_p=16, pilot_index=16)


def _default_radio() -> RadioParams:
    return RadioParams(**_TABLE1_RADIO)


def _default_aging() -> AgingProfile:
    return AgingProfile.build(f_doppler=60.0, sample_period=66.7e-6, tau_c=200)


def _draw_beta(rng: np.random.Generator, pl: PathLossParams,
               d_lo: float, d_hi: float) -> float:
    d = rng.uniform(d_lo, d_hi)
    shadow_db = 6.0 * rng.standard_normal()
    return float(path_loss(d, pl) * 10.0 ** (shadow_db / 10.0))


def random_rate_config(rng: np.random.Generator):
    """Random serving/interferer configuration for rate validation.

    1-5 serving APs, 0-3 interferers; when interferers exist the first one
    shares the typical user's pilot. Interferer serving sets may overlap the
    typical user's so per-AP loads above one are exercised.
    """
    pl = PathLossParams()
    n_serving = int(rng.integers(1, 6))
    serving_aps = tuple(range(n_serving))
    lsf = {b: _draw_beta(rng, pl, 30.0, 250.0) for b in serving_aps}
    serving = ServingConfig(serving_set=serving_aps, lsf_values=lsf)

    n_itf = int(rng.integers(0, 4))
    next_ap = n_serving
    interferers = []
    typical_gain = dict(lsf)  # one gain per (AP, typical user) link
    for k in range(n_itf):
        size = int(rng.integers(1, 4))
        aps = []
        for _ in range(size):
            if n_serving > 0 and rng.random() < 0.3:
                aps.append(int(rng.integers(0, n_serving)))  # shared AP
            else:
                aps.append(next_ap)
                next_ap += 1
        aps = tuple(dict.fromkeys(aps))
        copilot = k == 0
        own = {b: _draw_beta(rng, pl, 30.0, 250.0) for b in aps}
        if copilot:
            for b in serving_aps:
                own[b] = _draw_beta(rng, pl, 100.0, 500.0)
        to_typical = {}
        for b in aps:
            if b not in typical_gain:
                typical_gain[b] = _draw_beta(rng, pl, 80.0, 500.0)
            to_typical[b] = typical_gain[b]
        interferers.append(Interferer(
            serving_set=aps, lsf_to_typical=to_typical,
            copilot=copilot, lsf_own=own))
    return serving, interferers


def validate_rate_vs_mc(seed: int = 2024, n_configs: int = 10,
                        n_realizations: int = 100_000,
                        rel_tol: float = 0.03):
    """Closed-form xi terms vs the Monte Carlo signal oracle."""
    rng = np.random.default_rng(seed)
    radio = _default_radio()
    aging = _default_aging()
    lines = []
    ok = True
    for c in range(n_configs):
        serving, interferers = random_rate_config(rng)
        lag = int(rng.choice([0, 60, 150]))
        xi1, xi23, xi4 = rate_xi_terms(serving, interferers, aging, radio, lag)
        est = mc_signal_oracle(serving, interferers, aging, radio,
                               n_realizations, rng, lag)
        checks = [("xi1", xi1, est["ds"], est["ds_se"]),
                  ("xi23", xi23, est["bu_ca"], est["bu_ca_se"])]
        for k, x in enumerate(xi4):
            checks.append((f"xi4[{k}]", x, est["mi"][k], est["mi_se"][k]))
        for name, closed, mc, se in checks:
            tol = max(rel_tol * abs(closed), 3.0 * se)
            good = abs(closed - mc) <= tol
            ok &= good
            lines.append(
                f"config {c} lag {lag} {name}: closed={closed:.6e} "
                f"mc={mc:.6e} tol={tol:.2e} {'ok' if good else 'FAIL'}")
    return ok, lines


def validate_transition_vs_mc(seed: int = 7, n_pairs: int = 1_000_000,
                              abs_tol: float = 5e-3,
                              distance_pairs=((120.0, 130.0), (140.0, 150.0),
                                              (150.0, 160.0), (170.0, 160.0),
                                              (200.0, 210.0)),
                              iotas=(0.0, 0.5, 1.0)):
    """Closed-form state probabilities vs simulated shadowing pairs."""
    rng = np.random.default_rng(seed)
    pl = PathLossParams()
    quant = StateQuantizer.from_distances(pl)
    mobility = (10.0, 1.0)
    lines = []
    ok = True
    for iota in iotas:
        sh = ShadowingParams(sigma_sh_db=6.0, d_decorr=100.0, iota=iota)
        c = step_correlation(*mobility, sh)
        for d_prev, d_curr in distance_pairs:
            kappa1 = rng.standard_normal(n_pairs)
            k2_prev = rng.standard_normal(n_pairs)
            k2_curr = c * k2_prev + np.sqrt(1.0 - c * c) \
                * rng.standard_normal(n_pairs)
            w1, w2 = np.sqrt(iota), np.sqrt(1.0 - iota)
            beta_prev = path_loss(d_prev, pl) \
                * 10.0 ** (sh.sigma_sh_db * (w1 * kappa1 + w2 * k2_prev) / 10.0)
            beta_curr = path_loss(d_curr, pl) \
                * 10.0 ** (sh.sigma_sh_db * (w1 * kappa1 + w2 * k2_curr) / 10.0)
            good_prev = beta_prev > quant.beta_threshold
            good_curr = beta_curr > quant.beta_threshold

            emp_p1 = good_curr.mean()
            n_gp = good_prev.sum()
            n_bp = n_pairs - n_gp
            emp_p11 = (good_curr & good_prev).sum() / max(n_gp, 1)
            emp_p01 = (good_curr & ~good_prev).sum() / max(n_bp, 1)

            p1 = float(prob_good(d_curr, quant, sh, pl))
            p11, p01 = trans_probs(d_prev, d_curr, quant, sh, pl, mobility)
            for name, closed, emp in (("pbar1", p1, emp_p1),
                                      ("p11", p11, emp_p11),
                                      ("p01", p01, emp_p01)):
                good = abs(closed - emp) <= abs_tol
                ok &= good
                lines.append(
                    f"iota={iota} d=({d_prev:.0f},{d_curr:.0f}) {name}: "
                    f"closed={closed:.5f} emp={emp:.5f} "
                    f"{'ok' if good else 'FAIL'}")
    return ok, lines


def _toy_model(rng: np.random.Generator, pool_size: int, b_con: int,
               horizon: int, observed_good: bool = True):
    pl = PathLossParams()
    sh = ShadowingParams()
    quant = StateQuantizer.from_distances(pl)
    radio = _default_radio()
    aging = _default_aging()
    tab, actions = reward_table(pool_size, b_con, quant.beta_good,
                                quant.beta_bad, 1, aging, radio)
    base = rng.uniform(60.0, 250.0, size=pool_size)
    drift = rng.uniform(-15.0, 15.0, size=pool_size)
    dist = base[None, :] + drift[None, :] * np.arange(horizon + 1)[:, None]
    dist = np.clip(dist, 10.0, None)
    return build_model(tuple(range(pool_size)), {0: observed_good}, dist,
                       quant, sh, pl, (10.0, 1.0), tab, actions,
                       b_con=b_con, horizon=horizon, gamma=0.95)


def validate_pbvi_vs_expectimax(seed: int = 3, n_models: int = 6,
                                tol: float = 1e-9):
    """Point-based solver vs exhaustive expectimax on toy instances."""
    rng = np.random.default_rng(seed)
    lines = []
    ok = True
    cases = [(2, 1), (3, 2)]
    for pool_size, b_con in cases:
        for m in range(n_models):
            horizon = int(rng.integers(1, 4))
            model = _toy_model(rng, pool_size, b_con, horizon,
                               observed_good=bool(rng.random() < 0.5))
            policy = solve_pbvi(model, belief_budget=256,
                                expansion_depth=max(1, horizon - 1),
                                rng=np.random.default_rng(seed + m))
            exact = exact_expectimax(model)
            diff = policy.value - exact
            good = abs(diff) <= tol
            # restricted belief sets must stay lower bounds
            small = solve_pbvi(model, belief_budget=3, expansion_depth=0,
                               rng=np.random.default_rng(seed + m))
            bound_ok = small.value <= exact + tol
            ok &= good and bound_ok
            lines.append(
                f"pool={pool_size} b_con={b_con} T={horizon}: "
                f"pbvi={policy.value:.12f} exact={exact:.12f} "
                f"diff={diff:+.2e} small<=exact:{bound_ok} "
                f"{'ok' if good and bound_ok else 'FAIL'}")
    return ok, lines


def run_all_validations(seed: int = 0, quick: bool = False):
    """Run every suite; returns (all_passed, report_text)."""
    if quick:
        suites = [
            ("rate vs MC", lambda: validate_rate_vs_mc(
                seed + 1, n_configs=3, n_realizations=30_000)),
            ("transition vs MC", lambda: validate_transition_vs_mc(
                seed + 2, n_pairs=200_000, abs_tol=1e-2,
                distance_pairs=((140.0, 150.0), (170.0, 160.0)))),
            ("PBVI vs expectimax", lambda: validate_pbvi_vs_expectimax(
                seed + 3, n_models=3)),
        ]
    else:
        suites = [
            ("rate vs MC", lambda: validate_rate_vs_mc(seed + 1)),
            ("transition vs MC", lambda: validate_transition_vs_mc(seed + 2)),
            ("PBVI vs expectimax", lambda: validate_pbvi_vs_expectimax(seed + 3)),
        ]
    all_ok = True
    report = []
    for name, fn in suites:
        ok, lines = fn()
        all_ok &= ok
        report.append(f"[{'PASS' if ok else 'FAIL'}] {name}")
        report.extend("  " + ln for ln in lines)
    return all_ok, "\n".join(report)
