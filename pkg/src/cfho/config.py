"""Experiment configuration: defaults, profiles, JSON loading, overrides.

Two bundled profiles:

* ``table1`` — the full-scale setup (125 APs on 1 km^2, 8 antennas, 10 m/s).
* ``desk`` — 60 APs on 0.7 km^2 (about the same AP density of ~122 APs/km^2)
  sized so a 50-trial campaign finishes on a laptop.

Values use explicit units in the field names; powers are configured in dBm
and converted to watts when the radio parameters are built.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from .channel import (AgingProfile, PathLossParams, ShadowingParams,
                      StateQuantizer)
from .engine import SCHEMES, EngineConfig, PlannerResources
from .errors import ConfigError
from .rates import RadioParams

__all__ = [
    "NetworkSection",
    "MobilitySection",
    "RadioSection",
    "ChannelSection",
    "EngineSection",
    "OverheadSection",
    "SeedsSection",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "apply_override",
    "noise_power",
    "dbm_to_watts",
]

SPEED_OF_LIGHT = 3.0e8


@dataclass
class NetworkSection:
    n_aps: int = 125
    area_side_m: float = 1000.0
    m_antennas: int = 8
    ap_height_m: float = 15.0
    user_height_m: float = 1.5
    wrap_margin_m: float = 200.0
    fixed_aps: bool = False  # keep one AP draw across trials


@dataclass
class MobilitySection:
    speed_mps: float = 10.0
    step_duration_s: float = 1.0
    trip_cycles: int = 100
    start_offset_m: tuple[float, float] = (0.0, 0.0)


@dataclass
class RadioSection:
    p_dl_dbm: float = 30.0
    p_ul_dbm: float = 20.0
    tau_c: int = 200
    tau_p: int = 16
    pilot_index: int = 16
    noise_density_dbm_hz: float = -174.0
    noise_figure_db: float = 8.0
    bandwidth_hz: float = 20e6
    carrier_hz: float = 1.8e9
    sample_period_s: float = 66.7e-6


@dataclass
class ChannelSection:
    d0_m: float = 1.1
    alpha_pl: float = 3.8
    sigma_sh_db: float = 6.0
    d_decorr_m: float = 100.0
    iota: float = 0.5
    d_threshold_m: float = 150.0  # quantizer threshold distance
    d_good_m: float = 50.0
    d_bad_m: float = 200.0


@dataclass
class EngineSection:
    schemes: tuple[str, ...] = ("pomdp_ho_min", "lsf_time", "lsf_threshold")
    b_con: int = 5
    t_h: int = 10
    r_threshold_nats: float = 7.0
    gamma: float = 0.95
    belief_budget: int = 24
    expansion_depth: int = 2
    obs_samples: int = 2
    reuse_policy: bool = False


@dataclass
class OverheadSection:
    delta: float = 0.0  # per-handoff fraction of the frame
    rule: str = "linear"  # or "geometric"


@dataclass
class SeedsSection:
    master_seed: int = 12345
    trials: int = 50


@dataclass
class ExperimentConfig:
    network: NetworkSection = field(default_factory=NetworkSection)
    mobility: MobilitySection = field(default_factory=MobilitySection)
    radio: RadioSection = field(default_factory=RadioSection)
    channel: ChannelSection = field(default_factory=ChannelSection)
    engine: EngineSection = field(default_factory=EngineSection)
    overhead: OverheadSection = field(default_factory=OverheadSection)
    seeds: SeedsSection = field(default_factory=SeedsSection)

    def validate(self) -> "ExperimentConfig":
        if self.network.n_aps <= self.engine.b_con:
            raise ConfigError("need more APs than b_con")
        for scheme in self.engine.schemes:
            if scheme not in SCHEMES:
                raise ConfigError(f"unknown scheme {scheme!r}")
        if not self.engine.schemes:
            raise ConfigError("at least one scheme is required")
        if not 0.0 <= self.overhead.delta <= 1.0:
            raise ConfigError("overhead delta must be in [0, 1]")
        if self.overhead.rule not in ("linear", "geometric"):
            raise ConfigError("overhead rule must be 'linear' or 'geometric'")
        if self.mobility.trip_cycles < 0 or self.seeds.trials < 0:
            raise ConfigError("trip_cycles and trials must be nonnegative")
        mob = self.mobility
        if mob.speed_mps < 0 or mob.step_duration_s <= 0:
            raise ConfigError("need speed >= 0 and step_duration > 0")
        self.radio_params()  # triggers RadioParams invariants
        return self

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    # ---- derived parameter objects -------------------------------------

    def pathloss_params(self) -> PathLossParams:
        return PathLossParams(d0=self.channel.d0_m, alpha_pl=self.channel.alpha_pl,
                              d_h=self.network.ap_height_m - self.network.user_height_m)

    def shadowing_params(self) -> ShadowingParams:
        return ShadowingParams(sigma_sh_db=self.channel.sigma_sh_db,
                               d_decorr=self.channel.d_decorr_m,
                               iota=self.channel.iota)

    def quantizer(self) -> StateQuantizer:
        return StateQuantizer.from_distances(
            self.pathloss_params(), d_threshold=self.channel.d_threshold_m,
            d_good=self.channel.d_good_m, d_bad=self.channel.d_bad_m)

    def radio_params(self) -> RadioParams:
        r = self.radio
        return RadioParams(
            p_dl=dbm_to_watts(r.p_dl_dbm), p_ul=dbm_to_watts(r.p_ul_dbm),
            noise_power=noise_power(r.noise_density_dbm_hz, r.noise_figure_db,
                                    r.bandwidth_hz),
            M=self.network.m_antennas, tau_c=r.tau_c, tau_p=r.tau_p,
            pilot_index=r.pilot_index)

    def aging_profile(self) -> AgingProfile:
        wavelength = SPEED_OF_LIGHT / self.radio.carrier_hz
        f_doppler = self.mobility.speed_mps / wavelength
        return AgingProfile.build(f_doppler, self.radio.sample_period_s,
                                  self.radio.tau_c)

    def engine_config(self, scheme: str) -> EngineConfig:
        e = self.engine
        return EngineConfig(scheme=scheme, b_con=e.b_con, t_h=e.t_h,
                            r_threshold=e.r_threshold_nats, gamma=e.gamma,
                            belief_budget=e.belief_budget,
                            expansion_depth=e.expansion_depth,
                            obs_samples=e.obs_samples,
                            reuse_policy=e.reuse_policy)

    def planner_resources(self) -> PlannerResources:
        return PlannerResources(
            quantizer=self.quantizer(), shadowing=self.shadowing_params(),
            pathloss=self.pathloss_params(), radio=self.radio_params(),
            aging=self.aging_profile(),
            mobility=(self.mobility.speed_mps, self.mobility.step_duration_s),
            b_con=self.engine.b_con)


def dbm_to_watts(dbm: float) -> float:
    return 10.0 ** ((dbm - 30.0) / 10.0)


def noise_power(density_dbm_hz: float, figure_db: float,
                bandwidth_hz: float) -> float:
    """Receiver noise power in watts from density, noise figure, bandwidth."""
    if bandwidth_hz <= 0:
        raise ConfigError("bandwidth must be positive")
    total_dbm = density_dbm_hz + figure_db + 10.0 * np.log10(bandwidth_hz)
    return dbm_to_watts(total_dbm)


_PROFILES = {
    "table1": {},
    "desk": {
        "network.n_aps": 60,
        "network.area_side_m": 700.0,
    },
}


def default_config(profile: str = "desk") -> ExperimentConfig:
    if profile not in _PROFILES:
        raise ConfigError(f"unknown profile {profile!r}; "
                          f"choose from {sorted(_PROFILES)}")
    cfg = ExperimentConfig()
    for key, value in _PROFILES[profile].items():
        apply_override(cfg, key, value)
    return cfg.validate()


def _coerce(current, raw):
    """Coerce an override value to the type of the current field value."""
    if isinstance(raw, str):
        if isinstance(current, bool):
            if raw.lower() in ("1", "true", "yes", "on"):
                return True
            if raw.lower() in ("0", "false", "no", "off"):
                return False
            raise ConfigError(f"cannot parse boolean from {raw!r}")
        if isinstance(current, int):
            return int(raw)
        if isinstance(current, float):
            return float(raw)
        if isinstance(current, tuple):
            parts = [p for p in raw.replace(",", " ").split() if p]
            if current and isinstance(current[0], float):
                return tuple(float(p) for p in parts)
            return tuple(parts)
        return raw
    if isinstance(current, bool):
        return bool(raw)
    if isinstance(current, int) and not isinstance(raw, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, tuple) and isinstance(raw, (list, tuple)):
        return tuple(raw)
    return raw


def apply_override(cfg: ExperimentConfig, dotted_key: str, value) -> None:
    """Set ``section.field = value`` with type coercion from the default."""
    parts = dotted_key.split(".")
    if len(parts) != 2:
        raise ConfigError(f"override key must be 'section.field', got {dotted_key!r}")
    section, name = parts
    if not hasattr(cfg, section):
        raise ConfigError(f"unknown config section {section!r}")
    sec = getattr(cfg, section)
    if not hasattr(sec, name):
        raise ConfigError(f"unknown config field {dotted_key!r}")
    setattr(sec, name, _coerce(getattr(sec, name), value))


def load_config(path=None, profile: str = "desk",
                overrides: dict | None = None) -> ExperimentConfig:
    """Build a config from a profile, an optional JSON file, and overrides.

    The JSON file may use nested sections ({"network": {"n_aps": 60}}) or
    flat dotted keys ({"network.n_aps": 60}); unknown keys are rejected.
    """
    cfg = default_config(profile)
    if path is not None:
        try:
            with open(path, "r", encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config file {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON in {path}: {exc}") from exc
        if not isinstance(data, dict):
            raise ConfigError("config file must hold a JSON object")
        for key, value in data.items():
            if isinstance(value, dict):
                for sub, v in value.items():
                    apply_override(cfg, f"{key}.{sub}", v)
            else:
                apply_override(cfg, key, value)
    for key, value in (overrides or {}).items():
        apply_override(cfg, key, value)
    return cfg.validate()
