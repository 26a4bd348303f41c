"""Reference trajectories with analytic derivatives up to third order.

Tracking controllers consume position, velocity, acceleration and jerk of
the reference point, so every generator returns exact closed-form
derivatives rather than finite differences. A startup check verifies the
reference keeps a minimum speed and a bounded acceleration over the whole
experiment horizon, which the controllers require.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Union

Vec2 = tuple[float, float]


class ReferenceSample(NamedTuple):
    """Reference point state at time t: position and first three derivatives."""

    t: float
    position: Vec2
    velocity: Vec2
    acceleration: Vec2
    jerk: Vec2

    def speed(self) -> float:
        return math.hypot(self.velocity[0], self.velocity[1])


@dataclass(frozen=True)
class Circle:
    """Circle of given radius traversed at a constant angular rate (rad/s)."""

    radius: float
    angular_rate: float = 0.2
    center: Vec2 = (0.0, 0.0)
    phase: float = 0.0

    def __post_init__(self) -> None:
        if not self.radius > 0.0:
            raise ValueError("Circle.radius must be positive")

    def sample(self, t: float) -> ReferenceSample:
        w = self.angular_rate
        ang = w * t + self.phase
        c, s = math.cos(ang), math.sin(ang)
        r = self.radius
        return ReferenceSample(
            t,
            (self.center[0] + r * c, self.center[1] + r * s),
            (-r * w * s, r * w * c),
            (-r * w * w * c, -r * w * w * s),
            (r * w ** 3 * s, -r * w ** 3 * c),
        )


@dataclass(frozen=True)
class Lissajous:
    """Eight-shaped 2:1 Lissajous curve.

    Component x oscillates at base_rate, component y at half that rate:
    xi(t) = offset + amplitude * (sin(base_rate*t), sin(base_rate*t/2)).
    """

    amplitude: float
    base_rate: float
    offset: Vec2 = (0.0, 0.0)

    def __post_init__(self) -> None:
        if not self.amplitude > 0.0:
            raise ValueError("Lissajous.amplitude must be positive")

    def sample(self, t: float) -> ReferenceSample:
        a = self.amplitude
        w1 = self.base_rate
        w2 = 0.5 * self.base_rate
        s1, c1 = math.sin(w1 * t), math.cos(w1 * t)
        s2, c2 = math.sin(w2 * t), math.cos(w2 * t)
        return ReferenceSample(
            t,
            (self.offset[0] + a * s1, self.offset[1] + a * s2),
            (a * w1 * c1, a * w2 * c2),
            (-a * w1 ** 2 * s1, -a * w2 ** 2 * s2),
            (-a * w1 ** 3 * c1, -a * w2 ** 3 * c2),
        )


@dataclass(frozen=True)
class StraightLine:
    """Constant-velocity straight line from a start point."""

    start: Vec2
    velocity: Vec2

    def sample(self, t: float) -> ReferenceSample:
        return ReferenceSample(
            t,
            (self.start[0] + self.velocity[0] * t, self.start[1] + self.velocity[1] * t),
            self.velocity,
            (0.0, 0.0),
            (0.0, 0.0),
        )


Trajectory = Union[Circle, Lissajous, StraightLine]


def paper_lissajous() -> Lissajous:
    """The 10 m eight-shaped curve used by the shipped experiment configs."""
    return Lissajous(amplitude=5.0, base_rate=math.sqrt(0.4), offset=(5.0, 5.0))


@dataclass(frozen=True)
class Assumption1Report:
    """Result of the reference-speed/acceleration envelope check."""

    min_speed: float
    max_acceleration: float
    delta_r: float
    a_r: float
    passed: bool


def validate_assumption1(trajectory: Trajectory, horizon: float,
                         delta_r: float, a_r: float,
                         grid_dt: float = 1e-3) -> Assumption1Report:
    """Check |velocity| >= delta_r and |acceleration| <= a_r on a time grid.

    Samples the closed-form derivatives every grid_dt seconds over
    [0, horizon]. The report carries the observed extremes; it never
    raises, callers decide what a failure means.
    """
    if not horizon > 0.0:
        raise ValueError("horizon must be positive")
    n = int(round(horizon / grid_dt))
    min_speed = math.inf
    max_acc = 0.0
    for i in range(n + 1):
        ref = trajectory.sample(i * grid_dt)
        speed = math.hypot(ref.velocity[0], ref.velocity[1])
        acc = math.hypot(ref.acceleration[0], ref.acceleration[1])
        if speed < min_speed:
            min_speed = speed
        if acc > max_acc:
            max_acc = acc
    return Assumption1Report(min_speed, max_acc, delta_r, a_r,
                             min_speed >= delta_r and max_acc <= a_r)
