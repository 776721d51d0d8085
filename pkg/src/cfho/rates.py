"""Achievable-rate model: LMMSE estimation, conjugate beamforming, SE bounds.

The downlink spectral efficiency is a use-and-then-forget lower bound: only
the mean beamforming gain carries the desired signal, while beamformer
uncertainty, channel aging, and multiuser interference act as uncorrelated
noise. All second-order moments here were derived directly from the complex
Gaussian channel model (independent M-antenna links, LMMSE orthogonality,
E||h||^4 = M(M+1) psi^2) and are cross-checked against the signal-level
Monte Carlo oracle in this module.

Two flavours of the estimated-channel variance are used:

* ``psi`` — the physical LMMSE variance including pilot interference and
  noise in the denominator; feeds the full multi-user bound ``rate_lb``.
* ``psi_snr`` — an SNR-style variant with a noise-only denominator; feeds
  the single-user reward used by the handoff planner, where channel states
  are coarse quantized levels rather than true gains.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .channel import AgingProfile
from .errors import ConfigError

__all__ = [
    "RadioParams",
    "ServingConfig",
    "Interferer",
    "psi",
    "psi_snr",
    "eta",
    "rate_lb",
    "rate_xi_terms",
    "reward",
    "reward_table",
    "snr_spectral_efficiency",
    "mc_signal_oracle",
]


@dataclass(frozen=True)
class RadioParams:
    p_dl: float  # downlink power budget per AP, W
    p_ul: float  # uplink pilot power, W
    noise_power: float  # receiver noise, W
    M: int  # antennas per AP
    tau_c: int  # samples per frame
    tau_p: int  # pilot samples per frame
    pilot_index: int  # pilot slot of the typical user, 1..tau_p

    def __post_init__(self):
        if min(self.p_dl, self.p_ul, self.noise_power) <= 0:
            raise ConfigError("powers must be positive")
        if not self.tau_p < self.tau_c:
            raise ConfigError("tau_p must be smaller than tau_c")
        if not 1 <= self.pilot_index <= self.tau_p:
            raise ConfigError("pilot_index must be in [1, tau_p]")

    @property
    def n_est(self) -> int:
        """Sample index at which channels are estimated."""
        return self.tau_p + 1

    @property
    def est_lag(self) -> int:
        """Aging lag between the pilot and the estimation instant."""
        return self.n_est - self.pilot_index

    @property
    def data_lags(self) -> np.ndarray:
        """Aging lags of the data samples n = n_est .. tau_c."""
        return np.arange(0, self.tau_c - self.n_est + 1)


@dataclass
class ServingConfig:
    """The typical user's serving set and per-link gains."""

    serving_set: tuple[int, ...]
    lsf_values: dict[int, float]  # beta_bu for b in serving_set
    per_ap_load: dict[int, int] | None = None  # |E_b| overrides

    def __post_init__(self):
        self.serving_set = tuple(self.serving_set)
        if len(self.serving_set) == 0:
            return
        missing = [b for b in self.serving_set if b not in self.lsf_values]
        if missing:
            raise ConfigError(f"lsf_values missing serving APs {missing}")


@dataclass
class Interferer:
    """One co-scheduled user as seen by the typical user.

    ``lsf_to_typical`` holds the typical user's gains toward this user's
    serving APs. ``lsf_own`` holds this user's own gains; for copilot users
    it should also cover the typical user's serving APs (pilot
    contamination). Gains absent from the maps are treated as zero.
    """

    serving_set: tuple[int, ...]
    lsf_to_typical: dict[int, float]
    copilot: bool = False
    lsf_own: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        self.serving_set = tuple(self.serving_set)
        missing = [b for b in self.serving_set if b not in self.lsf_to_typical]
        if missing:
            raise ConfigError(f"lsf_to_typical missing APs {missing}")


def psi(beta: float, rho_est: float, radio: RadioParams,
        copilot_betas=()) -> float:
    """LMMSE estimated-channel variance (per antenna).

    ``copilot_betas`` are the gains of users sharing the pilot slot at the
    same AP (the user's own gain is added automatically).
    """
    if beta <= 0:
        raise ConfigError("beta must be positive")
    denom = radio.p_ul * (beta + float(np.sum(copilot_betas))) + radio.noise_power
    return rho_est ** 2 * radio.p_ul * beta ** 2 / denom


def psi_snr(value, rho_est: float, radio: RadioParams):
    """SNR-style estimated-channel variance with a noise-only denominator."""
    v = np.asarray(value, dtype=float)
    return rho_est ** 2 * radio.p_ul * v * v / radio.noise_power


def eta(psi_val: float, M: int, load: int, p_dl: float) -> float:
    """Per-user transmit scaling meeting the statistical power budget."""
    if psi_val <= 0:
        raise ConfigError("psi_val must be positive; drop the AP instead")
    if load < 1:
        raise ConfigError("load must be >= 1")
    return p_dl / (M * load * psi_val)


def _resolve_loads(serving: ServingConfig, interferers) -> dict[int, int]:
    """Per-AP load |E_b| implied by the serving sets, unless overridden."""
    loads: dict[int, int] = {}
    for b in serving.serving_set:
        loads[b] = loads.get(b, 0) + 1
    for itf in interferers:
        for b in itf.serving_set:
            loads[b] = loads.get(b, 0) + 1
    if serving.per_ap_load:
        loads.update(serving.per_ap_load)
    return loads


def _copilot_betas_at(ap: int, interferers) -> list[float]:
    return [itf.lsf_own.get(ap, 0.0) for itf in interferers if itf.copilot]


def rate_xi_terms(serving: ServingConfig, interferers, aging: AgingProfile,
                  radio: RadioParams, lag: int):
    """Closed-form signal/interference powers at one data sample.

    Returns (xi1, xi23, xi4_list) where ``lag`` is n - n_est.
    """
    rho_est = float(aging.rho[radio.est_lag])
    rho_n = float(aging.rho[lag])
    loads = _resolve_loads(serving, interferers)

    amp = 0.0
    xi23 = 0.0
    for b in serving.serving_set:
        beta = serving.lsf_values[b]
        psi_b = psi(beta, rho_est, radio, _copilot_betas_at(b, interferers))
        if psi_b > 0:
            amp += np.sqrt(psi_b / loads[b])
        xi23 += radio.p_dl * beta / loads[b]
    xi1 = radio.M * radio.p_dl * rho_n ** 2 * amp ** 2

    xi4 = []
    for itf in interferers:
        base = sum(radio.p_dl * itf.lsf_to_typical[b] / loads[b]
                   for b in itf.serving_set)
        coh = 0.0
        if itf.copilot:
            s = 0.0
            for b in itf.serving_set:
                beta_bu = itf.lsf_to_typical[b]
                if beta_bu <= 0:
                    continue
                others = [v.lsf_own.get(b, 0.0) for v in interferers if v.copilot]
                psi_bu = psi(beta_bu, rho_est, radio, others)
                s += np.sqrt(radio.p_dl * psi_bu / loads[b])
            coh = radio.M * rho_n ** 2 * s ** 2
        xi4.append(base + coh)
    return xi1, xi23, xi4


def rate_lb(serving: ServingConfig, interferers, aging: AgingProfile,
            radio: RadioParams) -> float:
    """Frame-averaged lower bound on the downlink SE, nats/s/Hz."""
    if len(serving.serving_set) == 0:
        return 0.0
    rho_est = float(aging.rho[radio.est_lag])
    loads = _resolve_loads(serving, interferers)

    amp = 0.0
    denom0 = radio.noise_power
    coh = 0.0
    for b in serving.serving_set:
        beta = serving.lsf_values[b]
        psi_b = psi(beta, rho_est, radio, _copilot_betas_at(b, interferers))
        if psi_b > 0:
            amp += np.sqrt(psi_b / loads[b])
        denom0 += radio.p_dl * beta / loads[b]
    for itf in interferers:
        denom0 += sum(radio.p_dl * itf.lsf_to_typical[b] / loads[b]
                      for b in itf.serving_set)
        if itf.copilot:
            s = 0.0
            for b in itf.serving_set:
                beta_bu = itf.lsf_to_typical[b]
                if beta_bu <= 0:
                    continue
                others = [v.lsf_own.get(b, 0.0) for v in interferers if v.copilot]
                s += np.sqrt(radio.p_dl * psi(beta_bu, rho_est, radio, others)
                             / loads[b])
            coh += radio.M * s ** 2

    gain = radio.M * radio.p_dl * amp ** 2
    rho2 = np.square(aging.rho[radio.data_lags])
    sinr = gain * rho2 / (denom0 + coh * rho2)
    return float(np.sum(np.log1p(sinr)) / radio.tau_c)


def _su_rate_from_values(values, loads, aging: AgingProfile,
                         radio: RadioParams) -> float:
    """Single-user SNR-style SE from per-AP channel values, nats/s/Hz.

    This is the planner's surrogate objective, not the physical bound: both
    the noise-only ``psi_snr`` and the M-weighted self-interference term
    keep their conventional single-user forms, so threshold semantics match
    the planner reward exactly (see ``rate_lb`` for the physical bound).
    """
    values = np.asarray(values, dtype=float)
    loads = np.broadcast_to(np.asarray(loads, dtype=float), values.shape)
    if values.size == 0:
        return 0.0
    rho_est = float(aging.rho[radio.est_lag])
    psi_s = psi_snr(values, rho_est, radio)
    amp = float(np.sum(np.sqrt(psi_s / loads)))
    denom = radio.M * radio.p_dl * float(np.sum(values / loads)) \
        + radio.noise_power
    gain = radio.M * radio.p_dl * amp ** 2
    rho2 = np.square(aging.rho[radio.data_lags])
    return float(np.sum(np.log1p(gain * rho2 / denom)) / radio.tau_c)


def snr_spectral_efficiency(betas, aging: AgingProfile, radio: RadioParams,
                            loads=1) -> float:
    """Interference-free SE of a serving set with true LSF gains."""
    return _su_rate_from_values(betas, loads, aging, radio)


def reward(state_values, action, loads, aging: AgingProfile,
           radio: RadioParams, b_con: int) -> float:
    """Planner reward: single-user SE over the APs selected by ``action``.

    ``state_values`` are quantized channel levels over the candidate pool and
    ``action`` is a boolean selection vector with exactly ``b_con`` ones.
    """
    action = np.asarray(action, dtype=bool)
    if int(action.sum()) != b_con:
        raise ConfigError(f"action must select exactly {b_con} APs")
    values = np.asarray(state_values, dtype=float)[action]
    loads_sel = np.broadcast_to(np.asarray(loads, dtype=float),
                                action.shape)[action]
    return _su_rate_from_values(values, loads_sel, aging, radio)


def reward_table(pool_size: int, b_con: int, good_value: float,
                 bad_value: float, loads, aging: AgingProfile,
                 radio: RadioParams):
    """Dense reward table over all states and all B_con-subsets.

    Returns ``(table, actions)`` with ``table[state, action]`` in nats/s/Hz
    and ``actions`` a boolean (n_actions, pool_size) selection matrix in
    lexicographic subset order. State bit k of the index gives the level of
    pool position k (1 = good).
    """
    from itertools import combinations

    if not 1 <= b_con <= pool_size:
        raise ConfigError("need 1 <= b_con <= pool_size")
    combos = list(combinations(range(pool_size), b_con))
    actions = np.zeros((len(combos), pool_size), dtype=bool)
    for j, combo in enumerate(combos):
        actions[j, list(combo)] = True

    n_states = 1 << pool_size
    bits = (np.arange(n_states)[:, None] >> np.arange(pool_size)[None, :]) & 1
    values = np.where(bits == 1, good_value, bad_value)  # (S, P)
    loads_v = np.broadcast_to(np.asarray(loads, dtype=float), (pool_size,))

    rho_est = float(aging.rho[radio.est_lag])
    sqrt_psi = np.sqrt(psi_snr(values, rho_est, radio) / loads_v)  # (S, P)
    amp = sqrt_psi @ actions.T  # (S, A)
    denom = radio.M * radio.p_dl * ((values / loads_v) @ actions.T) \
        + radio.noise_power
    gain = radio.M * radio.p_dl * amp ** 2
    rho2 = np.square(aging.rho[radio.data_lags])  # (J,)
    ratio = (gain / denom)[:, :, None] * rho2[None, None, :]
    table = np.sum(np.log1p(ratio), axis=-1) / radio.tau_c
    return table, actions


# ---------------------------------------------------------------------------
# Monte Carlo signal-level oracle
# ---------------------------------------------------------------------------

def _cn(rng: np.random.Generator, n: int, m: int) -> np.ndarray:
    """CN(0, I) samples, shape (n, m)."""
    return (rng.standard_normal((n, m)) + 1j * rng.standard_normal((n, m))) \
        / np.sqrt(2.0)


def mc_signal_oracle(serving: ServingConfig, interferers, aging: AgingProfile,
                     radio: RadioParams, n_realizations: int,
                     rng: np.random.Generator, lag: int,
                     chunk: int = 20000) -> dict:
    """Empirical per-term powers from direct simulation of the signal model.

    Simulates pilot reception, LMMSE estimation, conjugate beamforming, and
    the aged downlink channel at data lag ``lag`` (= n - n_est), and returns
    the desired-signal, beamformer-uncertainty, channel-aging, and multiuser
    interference powers together with standard errors and the empirical
    per-AP transmit power.
    """
    if n_realizations < 10_000:
        raise ConfigError("need at least 1e4 realizations")
    M = radio.M
    rho_n = float(aging.rho[lag])
    rho_bar_n = float(np.sqrt(max(0.0, 1.0 - rho_n ** 2)))
    loads = _resolve_loads(serving, interferers)

    # pilot slots: copilot users share the typical user's slot
    slots = {0: radio.pilot_index}
    free = [i for i in range(1, radio.tau_p + 1) if i != radio.pilot_index]
    for k, itf in enumerate(interferers, start=1):
        if itf.copilot:
            slots[k] = radio.pilot_index
        else:
            if not free:
                raise ConfigError("not enough pilot slots for interferers")
            slots[k] = free.pop(0)

    serving_sets = {0: tuple(serving.serving_set)}
    for k, itf in enumerate(interferers, start=1):
        serving_sets[k] = tuple(itf.serving_set)

    def beta_of(ap: int, user: int) -> float:
        if user == 0:
            if ap in serving.lsf_values:
                return serving.lsf_values[ap]
            for itf in interferers:
                if ap in itf.lsf_to_typical:
                    return itf.lsf_to_typical[ap]
            return 0.0
        return interferers[user - 1].lsf_own.get(ap, 0.0)

    # channel pairs: each user's channel at every AP whose pilot slot it
    # pollutes or whose beamformer points at it
    slot_users: dict[int, list[int]] = {}
    for user, slot in slots.items():
        slot_users.setdefault(slot, []).append(user)
    pairs: set[tuple[int, int]] = set()
    for user, aps in serving_sets.items():
        for b in aps:
            for v in slot_users[slots[user]]:
                pairs.add((b, v))
    for b in serving_sets[0]:
        pairs.add((b, 0))
    for k in range(1, len(interferers) + 1):
        for b in serving_sets[k]:
            pairs.add((b, 0))  # typical user's channel at interfering APs

    # deterministic LMMSE gains and power scalings
    c_gain: dict[tuple[int, int], float] = {}
    eta_of: dict[tuple[int, int], float] = {}
    for user, aps in serving_sets.items():
        slot = slots[user]
        rho_e = float(aging.rho[radio.n_est - slot])
        for b in aps:
            denom = radio.noise_power + sum(
                radio.p_ul * beta_of(b, v) for v in slot_users[slot])
            beta = beta_of(b, user)
            c_gain[(b, user)] = rho_e * np.sqrt(radio.p_ul) * beta / denom
            psi_b = rho_e ** 2 * radio.p_ul * beta ** 2 / denom
            eta_of[(b, user)] = eta(psi_b, M, loads[b], radio.p_dl)

    sum_t = 0.0 + 0.0j
    sum_t2 = 0.0
    sum_t4 = 0.0
    ca_acc = np.zeros(2)  # [sum, sum of squares]
    mi_acc = [np.zeros(2) for _ in interferers]
    tx_acc = {b: 0.0 for b in serving_sets[0]}

    done = 0
    while done < n_realizations:
        n = min(chunk, n_realizations - done)
        done += n

        h0 = {bw: np.sqrt(beta_of(*bw)) * _cn(rng, n, M)
              for bw in sorted(pairs)}
        # pilot reception per (AP, slot)
        y: dict[tuple[int, int], np.ndarray] = {}
        for user, aps in serving_sets.items():
            slot = slots[user]
            rho_e = float(aging.rho[radio.n_est - slot])
            rho_bar_e = float(np.sqrt(max(0.0, 1.0 - rho_e ** 2)))
            for b in aps:
                if (b, slot) in y:
                    continue
                acc_y = np.sqrt(radio.noise_power) * _cn(rng, n, M)
                for v in slot_users[slot]:
                    beta = beta_of(b, v)
                    if beta <= 0:
                        continue
                    h_i = rho_e * h0[(b, v)] \
                        + rho_bar_e * np.sqrt(beta) * _cn(rng, n, M)
                    acc_y = acc_y + np.sqrt(radio.p_ul) * h_i
                y[(b, slot)] = acc_y

        h_hat = {(b, user): c_gain[(b, user)] * y[(b, slots[user])]
                 for user, aps in serving_sets.items() for b in aps}

        # aged channels of the typical user at data sample n
        h_n: dict[int, np.ndarray] = {}
        for b in sorted(set(b for aps in serving_sets.values() for b in aps)):
            beta = beta_of(b, 0)
            h_n[b] = rho_n * h0[(b, 0)] \
                + rho_bar_n * np.sqrt(beta) * _cn(rng, n, M)

        # desired signal and beamformer uncertainty are carried by the
        # estimation-time channel projected on the beamformer
        t = np.zeros(n, dtype=complex)
        for b in serving_sets[0]:
            t += np.sqrt(eta_of[(b, 0)]) * np.sum(
                h0[(b, 0)] * np.conj(h_hat[(b, 0)]), axis=1)
        t_abs2 = np.abs(t) ** 2
        sum_t += np.sum(t)
        sum_t2 += float(np.sum(t_abs2))
        sum_t4 += float(np.sum(t_abs2 ** 2))

        # channel-aging term: innovation projected on the beamformer
        ca = np.zeros(n, dtype=complex)
        for b in serving_sets[0]:
            beta = beta_of(b, 0)
            v_n = _cn(rng, n, M)
            ca += np.sqrt(eta_of[(b, 0)] * beta) * np.sum(
                v_n * np.conj(h_hat[(b, 0)]), axis=1)
        ca_abs2 = np.abs(rho_bar_n * ca) ** 2
        ca_acc += (float(np.sum(ca_abs2)), float(np.sum(ca_abs2 ** 2)))

        # multiuser interference, one term per interferer
        for k in range(1, len(interferers) + 1):
            a = np.zeros(n, dtype=complex)
            for b in serving_sets[k]:
                a += np.sqrt(eta_of[(b, k)]) * np.sum(
                    h_n[b] * np.conj(h_hat[(b, k)]), axis=1)
            a_abs2 = np.abs(a) ** 2
            mi_acc[k - 1] += (float(np.sum(a_abs2)), float(np.sum(a_abs2 ** 2)))

        # per-AP transmit power of the typical user's serving APs
        for b in serving_sets[0]:
            total = np.zeros(n)
            for user, aps in serving_sets.items():
                if b in aps:
                    total += eta_of[(b, user)] * np.sum(
                        np.abs(h_hat[(b, user)]) ** 2, axis=1)
            tx_acc[b] += float(np.sum(total))

    r = float(n_realizations)
    mean_t = sum_t / r
    mean_t2 = sum_t2 / r
    var_t = max(0.0, mean_t2 - abs(mean_t) ** 2)
    sem_t = np.sqrt(var_t / r)
    sem_t2 = np.sqrt(max(0.0, sum_t4 / r - mean_t2 ** 2) / r)
    ds = rho_n ** 2 * abs(mean_t) ** 2
    ds_se = rho_n ** 2 * (2.0 * abs(mean_t) * sem_t + sem_t ** 2)
    bu = rho_n ** 2 * var_t
    bu_se = rho_n ** 2 * sem_t2 + ds_se

    def mean_se(a2: np.ndarray):
        mean = a2[0] / r
        var = max(0.0, a2[1] / r - mean ** 2)
        return mean, float(np.sqrt(var / r))

    ca, ca_se = mean_se(ca_acc)
    mi = [mean_se(acc_k) for acc_k in mi_acc]
    return {
        "ds": float(ds), "ds_se": float(ds_se),
        "bu": float(bu), "bu_se": float(bu_se),
        "ca": float(ca), "ca_se": float(ca_se),
        "bu_ca": float(bu + ca), "bu_ca_se": float(bu_se + ca_se),
        "mi": [m for m, _ in mi], "mi_se": [s for _, s in mi],
        "tx_power": {b: tx_acc[b] / r for b in serving_sets[0]},
    }
