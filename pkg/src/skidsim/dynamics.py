"""Planar rigid-body dynamics of a four-wheel skid-steering robot.

The vehicle is a single rigid body driven by left/right wheel torques and
slowed by Coulomb-style rolling and lateral friction. Turning necessarily
drags the wheels sideways, so the resistive forces depend on the signs of
the individual wheel contact velocities, which in turn follow from the
body-frame velocity and the wheel layout.

Conventions: inertial pose q = (X, Y, theta) with theta the yaw angle in
radians (unwrapped); body frame has x forward and y to the left; torques
are the summed left-side (tau1) and right-side (tau2) wheel torques.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple, Optional


class BodyVelocity(NamedTuple):
    """Velocity in the body frame: forward, lateral, yaw rate."""

    xdot: float
    ydot: float
    thetadot: float


class WheelTorques(NamedTuple):
    """Left-side and right-side wheel torque commands (N*m)."""

    tau1: float
    tau2: float


class WheelVelocities(NamedTuple):
    """Longitudinal and lateral contact-point speeds of the four wheels.

    Wheels are numbered 1 front-left, 2 front-right, 3 rear-right,
    4 rear-left; pairs on the same side share the longitudinal speed and
    pairs on the same axle share the lateral speed.
    """

    xdot1: float
    xdot2: float
    xdot3: float
    xdot4: float
    ydot1: float
    ydot2: float
    ydot3: float
    ydot4: float


@dataclass(frozen=True)
class RobotParams:
    """Physical constants of the vehicle and the ground contact.

    Units: m (kg), inertia_z (kg*m^2), lengths in meters, g in m/s^2.
    f_r and mu are the dimensionless rolling and lateral friction
    coefficients. d0 is the virtual offset of the instantaneous center of
    rotation ahead of the center of mass and must satisfy 0 < d0 < a.
    sgn_epsilon is the velocity half-width (m/s) of the smoothed sign
    function used inside the friction terms; 0 selects the exact
    discontinuous sign.
    """

    m: float
    inertia_z: float
    a: float
    b: float
    half_track: float
    wheel_radius: float
    d0: float
    f_r: float
    mu: float
    g: float = 9.81
    sgn_epsilon: float = 1e-3

    def __post_init__(self) -> None:
        for name in ("m", "inertia_z", "a", "b", "half_track",
                     "wheel_radius", "d0", "f_r", "mu", "g"):
            value = getattr(self, name)
            if not (value > 0.0) or not math.isfinite(value):
                raise ValueError(f"RobotParams.{name} must be strictly positive, got {value!r}")
        if not self.d0 < self.a:
            raise ValueError(f"RobotParams requires d0 < a, got d0={self.d0}, a={self.a}")
        if self.sgn_epsilon < 0.0:
            raise ValueError("RobotParams.sgn_epsilon must be >= 0")


def atrv2(f_r: float = 0.05, mu: float = 0.5, g: float = 9.81,
          sgn_epsilon: float = 1e-3) -> RobotParams:
    """Parameter set of the ATRV-2 vehicle.

    The friction coefficients are not part of the vehicle datasheet and
    default to typical rubber-on-hard-ground values; callers should record
    the values they use.
    """
    return RobotParams(m=116.0, inertia_z=20.0, a=0.37, b=0.55,
                       half_track=0.315, wheel_radius=0.2, d0=0.18,
                       f_r=f_r, mu=mu, g=g, sgn_epsilon=sgn_epsilon)


@dataclass(frozen=True)
class FullState:
    """Unconstrained plant state: inertial pose and inertial velocity."""

    x: float
    y: float
    theta: float
    xdot: float
    ydot: float
    thetadot: float

    def body_velocity(self) -> BodyVelocity:
        return body_from_inertial(self.theta, (self.xdot, self.ydot, self.thetadot))

    def as_tuple(self) -> tuple[float, float, float, float, float, float]:
        return (self.x, self.y, self.theta, self.xdot, self.ydot, self.thetadot)


def rotation(theta: float) -> tuple[tuple[float, float], tuple[float, float]]:
    """Planar rotation matrix mapping body coordinates to inertial ones."""
    c, s = math.cos(theta), math.sin(theta)
    return ((c, -s), (s, c))


def body_from_inertial(theta: float,
                       inertial: tuple[float, float, float]) -> BodyVelocity:
    """Rotate an inertial velocity (Xdot, Ydot, thetadot) into the body frame."""
    c, s = math.cos(theta), math.sin(theta)
    xd, yd, td = inertial
    return BodyVelocity(c * xd + s * yd, -s * xd + c * yd, td)


def inertial_from_body(theta: float, v: BodyVelocity) -> tuple[float, float, float]:
    """Inverse of body_from_inertial."""
    c, s = math.cos(theta), math.sin(theta)
    return (c * v.xdot - s * v.ydot, s * v.xdot + c * v.ydot, v.thetadot)


def smooth_sgn(v: float, epsilon: float) -> float:
    """Sign of v, smoothed to tanh(v/epsilon) when epsilon > 0.

    epsilon = 0 gives the exact sign (-1, 0, +1). The smoothed variant is
    odd and monotone and agrees with the exact sign up to ~2e-9 once
    |v| > 10*epsilon.
    """
    if epsilon == 0.0:
        if v > 0.0:
            return 1.0
        if v < 0.0:
            return -1.0
        return 0.0
    return math.tanh(v / epsilon)


def wheel_velocities(params: RobotParams, v: BodyVelocity) -> WheelVelocities:
    """Contact-point velocities of the four wheels for a rigid-body motion."""
    t, a, b = params.half_track, params.a, params.b
    x_left = v.xdot - t * v.thetadot
    x_right = v.xdot + t * v.thetadot
    y_front = v.ydot + a * v.thetadot
    y_rear = v.ydot - b * v.thetadot
    return WheelVelocities(x_left, x_right, x_right, x_left,
                           y_front, y_front, y_rear, y_rear)


def resistive_terms(params: RobotParams, v: BodyVelocity) -> tuple[float, float, float]:
    """Resistive force/moment (R_x, F_y, M_r) acting on the body.

    R_x is the total rolling resistance along body x (N), F_y the total
    lateral friction force (N) and M_r the resistive yaw moment (N*m).
    All three are built from the signs of the wheel contact velocities,
    evaluated with the configured sign smoothing.
    """
    w = wheel_velocities(params, v)
    eps = params.sgn_epsilon
    sx1 = smooth_sgn(w.xdot1, eps)
    sx2 = smooth_sgn(w.xdot2, eps)
    sy1 = smooth_sgn(w.ydot1, eps)
    sy3 = smooth_sgn(w.ydot3, eps)
    mg = params.m * params.g
    ab = params.a + params.b
    r_x = params.f_r * (mg / 2.0) * (sx1 + sx2)
    f_y = params.mu * (mg / ab) * (params.b * sy1 + params.a * sy3)
    m_r = (params.mu * params.a * params.b * mg / ab * (sy1 - sy3)
           + params.f_r * params.half_track * mg / 2.0 * (sx2 - sx1))
    return (r_x, f_y, m_r)


def full_dynamics(params: RobotParams, state: FullState,
                  tau: WheelTorques) -> tuple[float, float, float]:
    """Inertial accelerations (Xddot, Yddot, thetaddot) of the full plant.

    Solves M qddot = E(q) tau - c(q, qdot) componentwise; the mass matrix
    is diagonal so no linear solver is involved.
    """
    return full_state_derivative(params, state.as_tuple(), tau.tau1, tau.tau2)[3:]


def full_state_derivative(params: RobotParams,
                          y: tuple[float, float, float, float, float, float],
                          tau1: float, tau2: float) -> tuple[float, ...]:
    """Time derivative of the 6-component full state under constant torques."""
    _, _, theta, xd, yd, td = y
    c, s = math.cos(theta), math.sin(theta)
    v = BodyVelocity(c * xd + s * yd, -s * xd + c * yd, td)
    r_x, f_y, m_r = resistive_terms(params, v)
    thrust = (tau1 + tau2) / params.wheel_radius
    moment = params.half_track * (tau1 - tau2) / params.wheel_radius
    xdd = (c * thrust - (r_x * c - f_y * s)) / params.m
    ydd = (s * thrust - (r_x * s + f_y * c)) / params.m
    tdd = (moment - m_r) / params.inertia_z
    return (xd, yd, td, xdd, ydd, tdd)


def x_icr(v: BodyVelocity, tol: float = 1e-6) -> Optional[float]:
    """Longitudinal body-frame coordinate of the instantaneous center of rotation.

    Returns -ydot/thetadot, or None when |thetadot| < tol (straight-line
    motion, ICR at infinity). None is a value, not an error.
    """
    if abs(v.thetadot) < tol:
        return None
    return -v.ydot / v.thetadot


def kinetic_energy(params: RobotParams, y: tuple[float, ...]) -> float:
    """Kinetic energy of the full state (translation plus yaw)."""
    _, _, _, xd, yd, td = y
    return 0.5 * params.m * (xd * xd + yd * yd) + 0.5 * params.inertia_z * td * td
