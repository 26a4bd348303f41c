"""Constrained model used for control design.

A virtual nonholonomic constraint ydot + d0*thetadot = 0 pins the
instantaneous center of rotation at a fixed distance d0 ahead of the
center of mass. Admissible velocities live in the null space of the
constraint row, parameterized by a pseudo-velocity eta = (eta1, eta2), and
the constrained equations of motion reduce to a pair of integrators
etadot = u after a change of control variables that maps the design input
u back to wheel torques.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .dynamics import BodyVelocity, FullState, RobotParams, WheelTorques, resistive_terms


class SingularInputMap(Exception):
    """Raised when the torque map N^T E is numerically singular."""


@dataclass(frozen=True)
class ReducedState:
    """State of the constrained model.

    eta1 is the forward pseudo-velocity (equal to the body-frame xdot) and
    eta2 the lateral one; the yaw rate is slaved to it through
    thetadot = -eta2/d0.
    """

    x: float
    y: float
    theta: float
    eta1: float
    eta2: float

    def body_velocity(self, d0: float) -> BodyVelocity:
        return BodyVelocity(self.eta1, self.eta2, -self.eta2 / d0)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.x, self.y, self.theta, self.eta1, self.eta2)


def n_matrix(theta: float, d0: float) -> tuple[tuple[float, float], ...]:
    """Null-space basis N(q) of the constraint row [-sin, cos, d0].

    Columns of the returned 3x2 matrix span the admissible generalized
    velocities: qdot = N(q) eta.
    """
    if not d0 > 0.0:
        raise ValueError("d0 must be positive")
    c, s = math.cos(theta), math.sin(theta)
    return ((c, -s), (s, c), (0.0, -1.0 / d0))


def reduced_dynamics(state: ReducedState, u: tuple[float, float],
                     d0: float) -> tuple[float, float, float, float, float]:
    """Time derivative of the reduced state under design input u."""
    return reduced_state_derivative(state.as_tuple(), u[0], u[1], d0)


def reduced_state_derivative(y: tuple[float, float, float, float, float],
                             u1: float, u2: float,
                             d0: float) -> tuple[float, float, float, float, float]:
    _, _, theta, eta1, eta2 = y
    c, s = math.cos(theta), math.sin(theta)
    return (c * eta1 - s * eta2,
            s * eta1 + c * eta2,
            -eta2 / d0,
            u1,
            u2)


def constraint_residual(v: BodyVelocity, d0: float) -> float:
    """Violation ydot + d0*thetadot of the virtual constraint (m/s)."""
    return v.ydot + d0 * v.thetadot


def input_map_determinant(params: RobotParams) -> float:
    """Determinant of N^T E; a state-independent constant 2t/(r^2 d0)."""
    return 2.0 * params.half_track / (params.wheel_radius ** 2 * params.d0)


def check_input_map(params: RobotParams, tol: float = 1e-12) -> None:
    """Fail fast if the torque map would be singular for these parameters."""
    if abs(input_map_determinant(params)) < tol:
        raise SingularInputMap(
            f"|det(N^T E)| = {abs(input_map_determinant(params)):.3e} < {tol:.0e}")


def torque_from_u(params: RobotParams, measured: FullState,
                  u: tuple[float, float]) -> WheelTorques:
    """Wheel torques realizing etadot = u on the constrained model.

    Implements tau = (N^T E)^-1 (N^T M N u + N^T M Ndot eta + N^T c) with
    the pseudo-velocity read off the measured body velocity
    (eta1 = xdot, eta2 = ydot) and Ndot built from the measured yaw rate.
    All the matrix products collapse to scalars:

        N^T M N      = diag(m, m + I/d0^2)
        N^T M Ndot eta = thetadot * m * (-eta2, eta1)
        N^T c        = (R_x, F_y - M_r/d0)
    """
    check_input_map(params)
    v = measured.body_velocity()
    eta1, eta2, omega = v.xdot, v.ydot, v.thetadot
    r_x, f_y, m_r = resistive_terms(params, v)
    d0 = params.d0
    rhs1 = params.m * u[0] - omega * params.m * eta2 + r_x
    rhs2 = (params.m + params.inertia_z / d0 ** 2) * u[1] \
        + omega * params.m * eta1 + f_y - m_r / d0
    # (N^T E)^-1 for N^T E = [[1/r, 1/r], [-t/(r d0), t/(r d0)]]
    r = params.wheel_radius
    half_long = 0.5 * r * rhs1
    half_turn = 0.5 * r * d0 / params.half_track * rhs2
    return WheelTorques(half_long - half_turn, half_long + half_turn)
