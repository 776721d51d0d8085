"""Large-scale fading, channel aging, and channel-state statistics.

The ground-truth LSF is path loss (COST231 Walfisch-Ikegami style power law)
times log-normal shadowing built from a two-component model: a static AP-side
field ``kappa1`` (spatially correlated across APs) and a user-side process
``kappa2`` that evolves as a first-order autoregressive Gaussian chain with
per-step correlation 2^(-v*dt/d_decorr).

Quantizing the LSF against a threshold gives a two-state (good/bad) channel
chain per AP; the closed-form marginal and transition probabilities of that
chain are Gaussian orthant probabilities, computed here by numerical
quadrature.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import j0, ndtr

from .errors import ConfigError, NumericalError
from .geometry import NetworkLayout, TrajectoryState, distances_to_all, min_image_distance

__all__ = [
    "PathLossParams",
    "ShadowingParams",
    "LsfProcess",
    "AgingProfile",
    "StateQuantizer",
    "path_loss",
    "jakes_rho",
    "init_lsf",
    "step_lsf",
    "quantize_state",
    "quantize_good",
    "prob_good",
    "bvn_upper_rect",
    "trans_probs",
    "q_function",
    "step_correlation",
    "shadow_pair_correlation",
]


@dataclass(frozen=True)
class PathLossParams:
    """Power-law path loss with a fixed height offset removing the d=0 pole."""

    d0: float = 1.1  # reference distance, m
    alpha_pl: float = 3.8  # exponent
    d_h: float = 13.5  # AP/user height difference, m

    def __post_init__(self):
        if self.d0 <= 0 or self.alpha_pl <= 2 or self.d_h < 0:
            raise ConfigError("need d0 > 0, alpha_pl > 2, d_h >= 0")


@dataclass(frozen=True)
class ShadowingParams:
    sigma_sh_db: float = 6.0  # shadowing std, dB
    d_decorr: float = 100.0  # 50%-correlation distance, m
    iota: float = 0.5  # AP-side share of the shadowing variance

    def __post_init__(self):
        if self.sigma_sh_db < 0 or self.d_decorr <= 0 or not 0 <= self.iota <= 1:
            raise ConfigError("need sigma_sh_db >= 0, d_decorr > 0, 0 <= iota <= 1")


@dataclass
class LsfProcess:
    """Per-AP LSF state of one user trajectory at one decision cycle."""

    kappa1: np.ndarray  # (B,), static AP-side field, standard normal
    kappa2: float  # user-side AR(1) process value
    step_corr: float  # per-cycle correlation of kappa2
    lsf: np.ndarray  # (B,), linear power gains beta_b

    @property
    def n_aps(self) -> int:
        return self.kappa1.shape[0]


@dataclass(frozen=True)
class AgingProfile:
    """Jakes temporal correlation of the small-scale fading inside a frame."""

    f_doppler: float  # Hz
    sample_period: float  # s
    rho: np.ndarray  # (tau_c + 1,), rho[k] at lag k samples
    rho_bar: np.ndarray  # sqrt(1 - rho^2)

    @classmethod
    def build(cls, f_doppler: float, sample_period: float, tau_c: int) -> "AgingProfile":
        lags = np.arange(tau_c + 1)
        rho = jakes_rho(lags, f_doppler, sample_period)
        rho_bar = np.sqrt(np.maximum(0.0, 1.0 - rho * rho))
        return cls(f_doppler=f_doppler, sample_period=sample_period,
                   rho=rho, rho_bar=rho_bar)


@dataclass(frozen=True)
class StateQuantizer:
    """Two-level (good/bad) quantization of the LSF."""

    beta_threshold: float
    beta_good: float
    beta_bad: float
    levels: int = 2

    def __post_init__(self):
        if not self.beta_bad < self.beta_threshold < self.beta_good:
            raise ConfigError("need beta_bad < beta_threshold < beta_good")
        if self.levels != 2:
            raise ConfigError("only two-level quantization is supported")

    @classmethod
    def from_distances(cls, pl: "PathLossParams", d_threshold: float = 150.0,
                       d_good: float = 50.0, d_bad: float = 200.0) -> "StateQuantizer":
        """Thresholds expressed as the path loss at reference distances."""
        return cls(beta_threshold=float(path_loss(d_threshold, pl)),
                   beta_good=float(path_loss(d_good, pl)),
                   beta_bad=float(path_loss(d_bad, pl)))


def path_loss(d_2d, p: PathLossParams):
    """Linear power gain at planar distance ``d_2d`` (array-friendly)."""
    d3 = np.sqrt(np.square(np.asarray(d_2d, dtype=float)) + p.d_h ** 2)
    return d3 ** (-p.alpha_pl) * p.d0 ** p.alpha_pl


def jakes_rho(lag, f_doppler: float, sample_period: float):
    """Temporal correlation J0(2*pi*lag*fD*Ts) of the fading process."""
    return j0(2.0 * np.pi * np.asarray(lag, dtype=float) * f_doppler * sample_period)


def q_function(x):
    """Standard normal upper-tail probability Q(x) = P(N(0,1) > x)."""
    return ndtr(-np.asarray(x, dtype=float))


def step_correlation(speed: float, step_duration: float, sh: ShadowingParams) -> float:
    """Per-cycle correlation of the user-side shadowing process."""
    return float(2.0 ** (-(speed * step_duration) / sh.d_decorr))


def shadow_pair_correlation(speed: float, step_duration: float,
                            sh: ShadowingParams) -> float:
    """Correlation of the total shadowing between consecutive cycles."""
    c = step_correlation(speed, step_duration, sh)
    return sh.iota + (1.0 - sh.iota) * c


def _kappa1_covariance(layout: NetworkLayout, sh: ShadowingParams) -> np.ndarray:
    pos = layout.ap_positions
    d = min_image_distance(pos[:, None, :], pos[None, :, :], layout.area_side)
    return 2.0 ** (-d / sh.d_decorr)


def _draw_kappa1(layout: NetworkLayout, sh: ShadowingParams,
                 rng: np.random.Generator) -> np.ndarray:
    cov = _kappa1_covariance(layout, sh)
    b = cov.shape[0]
    jitter = 0.0
    for jitter in (0.0, 1e-12, 1e-11, 1e-10):
        try:
            chol = np.linalg.cholesky(cov + jitter * np.eye(b))
            break
        except np.linalg.LinAlgError:
            continue
    else:
        raise NumericalError("AP shadowing covariance is not factorizable")
    return chol @ rng.standard_normal(b)


def _lsf_from_components(dist: np.ndarray, kappa1: np.ndarray, kappa2: float,
                         sh: ShadowingParams, pl: PathLossParams) -> np.ndarray:
    kbar = np.sqrt(sh.iota) * kappa1 + np.sqrt(1.0 - sh.iota) * kappa2
    return path_loss(dist, pl) * 10.0 ** (sh.sigma_sh_db * kbar / 10.0)


def init_lsf(layout: NetworkLayout, sh: ShadowingParams, pl: PathLossParams,
             traj: TrajectoryState, rng: np.random.Generator) -> LsfProcess:
    """Draw the static AP field and the initial user-side shadowing state."""
    kappa1 = _draw_kappa1(layout, sh, rng)
    kappa2 = float(rng.standard_normal())
    dist = distances_to_all(traj.position, layout)
    lsf = _lsf_from_components(dist, kappa1, kappa2, sh, pl)
    c = step_correlation(traj.speed, traj.step_duration, sh)
    return LsfProcess(kappa1=kappa1, kappa2=kappa2, step_corr=c, lsf=lsf)


def step_lsf(proc: LsfProcess, traj: TrajectoryState, layout: NetworkLayout,
             sh: ShadowingParams, pl: PathLossParams,
             rng: np.random.Generator) -> LsfProcess:
    """Advance the user-side shadowing one cycle and refresh path losses.

    ``traj`` is the trajectory state after the movement (cycle_index >= 1).
    """
    c = proc.step_corr
    kappa2 = c * proc.kappa2 + np.sqrt(1.0 - c * c) * float(rng.standard_normal())
    dist = distances_to_all(traj.position, layout)
    lsf = _lsf_from_components(dist, proc.kappa1, kappa2, sh, pl)
    return replace(proc, kappa2=kappa2, lsf=lsf)


def quantize_good(beta, q: StateQuantizer):
    """True where the LSF exceeds the threshold (boundary counts as bad)."""
    return np.asarray(beta, dtype=float) > q.beta_threshold


def quantize_state(beta, q: StateQuantizer):
    """Representative LSF value of the quantized channel state."""
    return np.where(quantize_good(beta, q), q.beta_good, q.beta_bad)


def _threshold_argument(d_2d, q: StateQuantizer, sh: ShadowingParams,
                        pl: PathLossParams):
    """Standardized shadowing level at which the LSF crosses the threshold."""
    return (10.0 / sh.sigma_sh_db) * np.log10(q.beta_threshold / path_loss(d_2d, pl))


def prob_good(d_2d, q: StateQuantizer, sh: ShadowingParams, pl: PathLossParams):
    """Marginal probability that the channel state is good at distance d."""
    if sh.sigma_sh_db == 0.0:
        return np.where(path_loss(d_2d, pl) > q.beta_threshold, 1.0, 0.0)
    return q_function(_threshold_argument(d_2d, q, sh, pl))


_GL_NODES, _GL_WEIGHTS = leggauss(24)
_BVN_TOL = 1e-11
_CORR_ANALYTIC_CUTOFF = 1.0 - 1e-12


def _bvn_theta_integral(a, b, theta_max, panels: int) -> np.ndarray:
    """Gauss-Legendre value of int_0^theta_max exp(-g(theta)) / (2*pi) dtheta.

    Uses Plackett's identity dP/d(corr) = bvn density, substituting
    corr = sin(theta); the integrand is then bounded and smooth for all
    |corr| <= 1.
    """
    edges = np.linspace(0.0, 1.0, panels + 1)
    mid = (edges[:-1] + edges[1:]) / 2.0
    half = (edges[1:] - edges[:-1]) / 2.0
    # fractional nodes in (0, 1), shape (panels * n_gl,)
    frac = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    wts = (half[:, None] * _GL_WEIGHTS[None, :]).ravel()
    theta = theta_max[..., None] * frac  # (..., K)
    sin_t = np.sin(theta)
    cos2_t = np.square(np.cos(theta))
    aa = a[..., None]
    bb = b[..., None]
    # exponent is always <= 0 since a^2 + b^2 >= 2|ab| >= 2ab*sin(theta)
    expo = -(aa * aa + bb * bb - 2.0 * aa * bb * sin_t) / (2.0 * cos2_t)
    vals = np.exp(expo) / (2.0 * np.pi)
    return theta_max * np.sum(vals * wts, axis=-1)


def bvn_upper_rect(a, b, corr):
    """P(X > a, Y > b) for standard bivariate normal X, Y with corr(X,Y).

    Adaptive one-dimensional quadrature (panel-doubled Gauss-Legendre) of the
    correlation-parameter integral; absolute accuracy better than 1e-10.
    Degenerate |corr| = 1 handled analytically. Array-friendly.
    """
    a, b, corr = np.broadcast_arrays(np.asarray(a, dtype=float),
                                     np.asarray(b, dtype=float),
                                     np.asarray(corr, dtype=float))
    if np.any(np.abs(corr) > 1.0 + 1e-12):
        raise ConfigError("|corr| must be <= 1")
    corr = np.clip(corr, -1.0, 1.0)
    scalar = a.ndim == 0
    a, b, corr = np.atleast_1d(a), np.atleast_1d(b), np.atleast_1d(corr)

    out = np.empty(a.shape, dtype=float)
    hi = corr >= _CORR_ANALYTIC_CUTOFF
    lo = corr <= -_CORR_ANALYTIC_CUTOFF
    mid = ~(hi | lo)
    if np.any(hi):  # X = Y
        out[hi] = q_function(np.maximum(a[hi], b[hi]))
    if np.any(lo):  # X = -Y
        out[lo] = np.maximum(0.0, q_function(a[lo]) + q_function(b[lo]) - 1.0)
    if np.any(mid):
        am, bm = a[mid], b[mid]
        theta_max = np.arcsin(corr[mid])
        est = _bvn_theta_integral(am, bm, theta_max, 1)
        panels = 2
        while panels <= 64:
            nxt = _bvn_theta_integral(am, bm, theta_max, panels)
            if np.max(np.abs(nxt - est)) < _BVN_TOL:
                est = nxt
                break
            est = nxt
            panels *= 2
        out[mid] = np.clip(q_function(am) * q_function(bm) + est, 0.0, 1.0)
    return float(out[0]) if scalar and out.size == 1 else out


_DEGENERATE_EPS = 1e-14


def trans_probs(d_prev, d_curr, q: StateQuantizer, sh: ShadowingParams,
                pl: PathLossParams, mobility: tuple[float, float]):
    """Good-state transition probabilities (p11, p01) between two cycles.

    ``mobility`` is (speed, step_duration). Both outputs are clamped to
    [0, 1]; where the previous-state probability is numerically 0 or 1 the
    conditional falls back to the unconditional good-state probability.
    """
    speed, step_duration = mobility
    k_curr = np.atleast_1d(_threshold_argument(d_curr, q, sh, pl))
    k_prev = np.atleast_1d(_threshold_argument(d_prev, q, sh, pl))
    k_curr, k_prev = np.broadcast_arrays(k_curr, k_prev)
    corr = shadow_pair_correlation(speed, step_duration, sh)

    q_prev = q_function(k_prev)
    q_curr = q_function(k_curr)
    both = bvn_upper_rect(k_curr, k_prev, corr)
    both = np.minimum(np.atleast_1d(both), np.minimum(q_curr, q_prev))

    p11 = np.where(q_prev > _DEGENERATE_EPS, both / np.maximum(q_prev, _DEGENERATE_EPS),
                   q_curr)
    bad_prev = 1.0 - q_prev
    p01 = np.where(bad_prev > _DEGENERATE_EPS,
                   (q_curr - both) / np.maximum(bad_prev, _DEGENERATE_EPS),
                   q_curr)
    p11 = np.clip(p11, 0.0, 1.0)
    p01 = np.clip(p01, 0.0, 1.0)
    if np.ndim(d_prev) == 0 and np.ndim(d_curr) == 0:
        return float(p11[0]), float(p01[0])
    return p11, p01
