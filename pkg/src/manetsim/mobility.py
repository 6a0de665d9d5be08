"""Random waypoint mobility.

Each node repeatedly draws a uniform point in the area and a uniform
speed, travels there in a straight line, pauses, and repeats.  Motion is
evaluated lazily: a leg is a closed-form function of time, so positions
are exact and no periodic position-update events are needed.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

from .core import US_PER_S, to_us

# Floor for drawn speeds; avoids the classic random-waypoint decay where
# near-zero draws stall nodes forever.
V_MIN = 0.5


@dataclass(frozen=True)
class Area:
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("area dimensions must be positive")

    def contains(self, x: float, y: float) -> bool:
        return 0.0 <= x <= self.width and 0.0 <= y <= self.height


@dataclass
class NodeMotion:
    node: int
    origin: tuple[float, float]
    waypoint: tuple[float, float]
    speed: float            # m/s; 0 means parked at origin
    depart_at: int          # microseconds
    pause: float            # seconds to wait at the waypoint

    @property
    def travel_us(self) -> int:
        if self.speed <= 0:
            return 0
        dist = math.dist(self.origin, self.waypoint)
        return to_us(dist / self.speed)

    @property
    def arrive_at(self) -> int:
        return self.depart_at + self.travel_us


def position_at(motion: NodeMotion, t: int) -> tuple[float, float]:
    """Position at time t (µs), clamped at the waypoint once reached."""
    if t < motion.depart_at:
        raise ValueError("t precedes leg departure")
    if motion.speed <= 0:
        return motion.origin
    travel = motion.travel_us
    if travel == 0 or t >= motion.depart_at + travel:
        return motion.waypoint
    frac = (t - motion.depart_at) / travel
    ox, oy = motion.origin
    wx, wy = motion.waypoint
    return (ox + (wx - ox) * frac, oy + (wy - oy) * frac)


def next_leg(rng: random.Random, area: Area, node: int, origin: tuple[float, float],
             v_max: float, depart_at: int, pause: float = 0.0) -> NodeMotion:
    """Draw the next leg: uniform waypoint, uniform speed in [V_MIN, v_max]."""
    if v_max <= 0:
        return NodeMotion(node, origin, origin, 0.0, depart_at, pause)
    waypoint = (rng.uniform(0.0, area.width), rng.uniform(0.0, area.height))
    speed = rng.uniform(min(V_MIN, v_max), v_max)
    return NodeMotion(node, origin, waypoint, speed, depart_at, pause)
