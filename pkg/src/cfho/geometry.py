"""Network geometry and user mobility.

APs live in a square area of side ``area_side``. The mobile user moves on a
straight line; whenever it comes close to the area boundary the position is
wrapped onto the opposite side (torus emulation of an infinite network).
All user-to-AP distances are therefore minimum-image distances on the torus,
which keeps the large-scale fading continuous across wrap events.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigError

__all__ = [
    "NetworkLayout",
    "TrajectoryState",
    "place_aps",
    "advance",
    "distance_2d",
    "distances_to_all",
    "min_image_distance",
]


@dataclass(frozen=True)
class NetworkLayout:
    """AP positions plus the vertical geometry shared by all links."""

    area_side: float
    ap_positions: np.ndarray  # (B, 2), meters
    ap_height: float = 15.0
    user_height: float = 1.5
    wrap_margin: float = 200.0

    def __post_init__(self):
        pos = np.atleast_2d(np.asarray(self.ap_positions, dtype=float))
        object.__setattr__(self, "ap_positions", pos)
        if self.area_side <= 0:
            raise ConfigError("area_side must be positive")
        if pos.ndim != 2 or pos.shape[1] != 2 or pos.shape[0] < 1:
            raise ConfigError("ap_positions must be a (B, 2) array with B >= 1")
        if np.any(pos < 0) or np.any(pos > self.area_side):
            raise ConfigError("AP positions must lie inside [0, area_side]^2")
        if self.ap_height <= self.user_height:
            raise ConfigError("ap_height must exceed user_height")
        if not 0 <= self.wrap_margin < self.area_side / 2:
            raise ConfigError("wrap_margin must satisfy 0 <= margin < area_side/2")

    @property
    def n_aps(self) -> int:
        return self.ap_positions.shape[0]

    @property
    def d_h(self) -> float:
        """Fixed AP/user height difference (minimum 3-D separation)."""
        return self.ap_height - self.user_height


@dataclass(frozen=True)
class TrajectoryState:
    """Straight-line user trajectory sampled at decision-cycle boundaries."""

    position: np.ndarray  # (2,), meters
    heading: np.ndarray  # (2,), unit vector
    speed: float  # m/s
    step_duration: float  # s, one decision cycle
    cycle_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        heading = np.asarray(self.heading, dtype=float)
        object.__setattr__(self, "heading", heading)
        if abs(np.linalg.norm(heading) - 1.0) > 1e-12:
            raise ConfigError("heading must be a unit vector")
        if self.speed < 0:
            raise ConfigError("speed must be nonnegative")
        if self.step_duration <= 0:
            raise ConfigError("step_duration must be positive")

    @property
    def step_length(self) -> float:
        return self.speed * self.step_duration


def place_aps(count: int, area_side: float, rng: np.random.Generator,
              ap_height: float = 15.0, user_height: float = 1.5,
              wrap_margin: float = 200.0) -> NetworkLayout:
    """Draw ``count`` AP positions i.i.d. uniform over the square area."""
    if count < 1:
        raise ConfigError("AP count must be >= 1")
    pos = rng.uniform(0.0, area_side, size=(count, 2))
    return NetworkLayout(area_side=area_side, ap_positions=pos,
                         ap_height=ap_height, user_height=user_height,
                         wrap_margin=wrap_margin)


def advance(traj: TrajectoryState, layout: NetworkLayout) -> TrajectoryState:
    """Move one decision cycle forward, wrapping onto the torus.

    The position is kept in the canonical cell [0, area_side)^2; positions
    that leave the cell (the user wrapped) re-enter on the opposite side.
    Minimum-image distances are unaffected by the choice of representative.
    """
    new_pos = traj.position + traj.heading * traj.step_length
    new_pos = np.mod(new_pos, layout.area_side)
    return replace(traj, position=new_pos, cycle_index=traj.cycle_index + 1)


def min_image_distance(p: np.ndarray, q: np.ndarray, area_side: float) -> np.ndarray:
    """Planar minimum-image distance between points on the wrap torus.

    ``p`` and ``q`` broadcast against each other on their leading axes; the
    last axis holds (x, y).
    """
    delta = np.abs(np.asarray(p, dtype=float) - np.asarray(q, dtype=float))
    delta = np.minimum(delta, area_side - delta)
    return np.sqrt(np.sum(delta * delta, axis=-1))


def distance_2d(position: np.ndarray, ap_index: int, layout: NetworkLayout) -> float:
    """Minimum-image distance from a user position to one AP."""
    if not 0 <= ap_index < layout.n_aps:
        raise IndexError(f"AP index {ap_index} out of range [0, {layout.n_aps})")
    return float(min_image_distance(position, layout.ap_positions[ap_index],
                                    layout.area_side))


def distances_to_all(position: np.ndarray, layout: NetworkLayout) -> np.ndarray:
    """Minimum-image distances from a user position to every AP, shape (B,)."""
    return min_image_distance(position[None, :], layout.ap_positions,
                              layout.area_side)
