"""Trajectory-tracking controllers for the constrained skid-steering model.

Two controllers produce the design input u = (u1, u2) of the reduced
model (forward acceleration and lateral-channel acceleration):

* ``backstepping_control`` - a static state feedback built by
  backstepping: auxiliary velocity targets (eta1d, omega_d) stabilize the
  body-frame position error of a control point placed d0 ahead of the
  center of mass, then the inputs drive the velocity mismatches to zero.
  A closed-form Lyapunov decrease certificate is available as a runtime
  diagnostic. Needs position and velocity measurements only, and a
  reference whose speed stays above a floor delta_r.

* ``dfl_control`` - a dynamic-feedback-linearization baseline: an
  integrator state zeta tracks the forward acceleration, the control
  point becomes a flat output with a triple-integrator response per axis,
  and pole placement gains close the loop. Singular whenever the forward
  velocity vanishes; the caller decides what to do when that trips.

Both are pure functions of their inputs; the baseline's integrator state
is passed in and returned by value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

from .dynamics import FullState
from .trajectories import ReferenceSample

Vec2 = tuple[float, float]


class DegenerateReference(Exception):
    """Reference speed below the admissible floor delta_r."""


class SingularVelocity(Exception):
    """Forward velocity too small for the feedback-linearization baseline."""


@dataclass(frozen=True)
class BacksteppingGains:
    """Backstepping gains; all strictly positive.

    k1, k2, k4, k6 are constant. kappa3, kappa5, kappa7 are scale-free:
    the effective gains are speed-scheduled at runtime as
    k3 = kappa3/|v_r|, k5 = |v_r|^2 kappa5, k7 = |v_r| kappa7 with v_r the
    reference velocity, which keeps the lateral-loop poles proportional
    to the reference speed.
    """

    k1: float
    k2: float
    kappa3: float
    k4: float
    kappa5: float
    k6: float
    kappa7: float

    def __post_init__(self) -> None:
        for name in ("k1", "k2", "kappa3", "k4", "kappa5", "k6", "kappa7"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"BacksteppingGains.{name} must be strictly positive")


@dataclass(frozen=True)
class DflGains:
    """Per-axis pole-placement gains of the baseline controller.

    Each inertial axis closes a triple-integrator loop
    s^3 + ka s^2 + kv s + kp, so besides positivity the Routh condition
    ka*kv > kp must hold for a stable axis.
    """

    kp1: float
    kv1: float
    ka1: float
    kp2: float
    kv2: float
    ka2: float

    def __post_init__(self) -> None:
        for name in ("kp1", "kv1", "ka1", "kp2", "kv2", "ka2"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"DflGains.{name} must be strictly positive")
        if not self.ka1 * self.kv1 > self.kp1:
            raise ValueError("DflGains axis 1 violates ka*kv > kp")
        if not self.ka2 * self.kv2 > self.kp2:
            raise ValueError("DflGains axis 2 violates ka*kv > kp")


@dataclass(frozen=True)
class DflState:
    """Dynamic-extension state: integrator on the forward acceleration (m/s^2)."""

    zeta: float = 0.0


class TrackingError(NamedTuple):
    """Position errors of the control point and a heading-error diagnostic."""

    xi_tilde: Vec2   # inertial-frame position error (m)
    xi_bar: Vec2     # the same error rotated into the body frame (m)
    theta_tilde: float  # heading vs. reference velocity direction (rad)


def control_point(pose: tuple[float, float, float], d0: float) -> Vec2:
    """Inertial position of the control point d0 ahead of the center of mass."""
    x, y, theta = pose
    return (x + d0 * math.cos(theta), y + d0 * math.sin(theta))


def tracking_errors(pose: tuple[float, float, float], ref: ReferenceSample,
                    d0: float) -> TrackingError:
    """Errors between the control point and the reference at one instant."""
    c, s = math.cos(pose[2]), math.sin(pose[2])
    xi = control_point(pose, d0)
    ex, ey = xi[0] - ref.position[0], xi[1] - ref.position[1]
    p1 = c * ref.velocity[0] + s * ref.velocity[1]
    p2 = -s * ref.velocity[0] + c * ref.velocity[1]
    return TrackingError((ex, ey),
                         (c * ex + s * ey, -s * ex + c * ey),
                         -math.atan2(p2, p1))


def omega_r(ref: ReferenceSample, delta_r: float = 0.01) -> float:
    """Yaw rate of the reference velocity direction (rad/s).

    Equals the signed rotation rate of v_r: (v_r x a_r)_z / |v_r|^2. For a
    circle at constant angular rate Omega this returns exactly Omega.
    """
    vx, vy = ref.velocity
    speed_sq = vx * vx + vy * vy
    if speed_sq < delta_r * delta_r:
        raise DegenerateReference(
            f"reference speed {math.sqrt(speed_sq):.3e} below delta_r={delta_r:.3e}")
    ax, ay = ref.acceleration
    return (vx * ay - vy * ax) / speed_sq


class _Terms(NamedTuple):
    """Intermediate backstepping quantities shared by control and diagnostics."""

    speed: float
    xi_bar: Vec2
    p1: float          # forward component of the reference velocity in body frame
    p2: float          # lateral component of the reference velocity in body frame
    omega_ref: float
    eta1d: float
    omega_d: float
    eta1d_dot: float
    omega_d_dot: float


def _terms(measured: FullState, ref: ReferenceSample, gains: BacksteppingGains,
           d0: float, delta_r: float) -> _Terms:
    c, s = math.cos(measured.theta), math.sin(measured.theta)
    vx, vy = ref.velocity
    speed_sq = vx * vx + vy * vy
    if speed_sq < delta_r * delta_r:
        raise DegenerateReference(
            f"reference speed {math.sqrt(speed_sq):.3e} below delta_r={delta_r:.3e}")
    speed = math.sqrt(speed_sq)

    xi_x = measured.x + d0 * c - ref.position[0]
    xi_y = measured.y + d0 * s - ref.position[1]
    xb1 = c * xi_x + s * xi_y
    xb2 = -s * xi_x + c * xi_y

    p1 = c * vx + s * vy
    p2 = -s * vx + c * vy
    ax, ay = ref.acceleration
    q1 = c * ax + s * ay
    q2 = -s * ax + c * ay

    body = measured.body_velocity()
    eta1 = body.xdot
    omega = body.thetadot

    w_ref = (vx * ay - vy * ax) / speed_sq
    va = vx * ax + vy * ay  # v_r . a_r
    jx, jy = ref.jerk
    w_ref_dot = (vx * jy - vy * jx) / speed_sq - 2.0 * w_ref * va / speed_sq

    eta1d = p1 - gains.k1 * xb1
    omega_d = w_ref - gains.k2 * speed * xb2 + gains.kappa3 * p2

    # Derivatives of the auxiliary targets along the error dynamics,
    # evaluated with the measured state (no numerical differentiation).
    xb1_dot = omega * xb2 + eta1 - p1
    xb2_dot = -omega * xb1 - p2
    p1_dot = omega * p2 + q1
    p2_dot = -omega * p1 + q2
    eta1d_dot = p1_dot - gains.k1 * xb1_dot
    omega_d_dot = (w_ref_dot
                   - gains.k2 * (va / speed) * xb2
                   - gains.k2 * speed * xb2_dot
                   + gains.kappa3 * p2_dot)
    return _Terms(speed, (xb1, xb2), p1, p2, w_ref, eta1d, omega_d,
                  eta1d_dot, omega_d_dot)


def aux_velocities(xi_bar: Vec2, theta: float, ref: ReferenceSample,
                   gains: BacksteppingGains,
                   delta_r: float = 0.01) -> tuple[float, float]:
    """Auxiliary velocity targets (eta1d, omega_d) for a given body-frame error."""
    vx, vy = ref.velocity
    speed_sq = vx * vx + vy * vy
    if speed_sq < delta_r * delta_r:
        raise DegenerateReference(
            f"reference speed {math.sqrt(speed_sq):.3e} below delta_r={delta_r:.3e}")
    speed = math.sqrt(speed_sq)
    c, s = math.cos(theta), math.sin(theta)
    p1 = c * vx + s * vy
    p2 = -s * vx + c * vy
    w_ref = (vx * ref.acceleration[1] - vy * ref.acceleration[0]) / speed_sq
    eta1d = p1 - gains.k1 * xi_bar[0]
    omega_d = w_ref - gains.k2 * speed * xi_bar[1] + gains.kappa3 * p2
    return (eta1d, omega_d)


def backstepping_control(measured: FullState, ref: ReferenceSample,
                         gains: BacksteppingGains, d0: float,
                         delta_r: float = 0.01) -> tuple[float, float]:
    """Design input (u1, u2) of the backstepping tracking law.

    u1 commands the forward pseudo-acceleration. The yaw channel is
    designed in terms of ubar2 = omegadot and mapped back through
    u2 = -d0*ubar2. The speed-scheduled gains k3, k5, k7 and the k5
    rate-correction term are folded in analytically.
    """
    t = _terms(measured, ref, gains, d0, delta_r)
    body = measured.body_velocity()
    u1 = t.eta1d_dot - gains.k4 * t.xi_bar[0] - gains.k6 * (body.xdot - t.eta1d)
    va = ref.velocity[0] * ref.acceleration[0] + ref.velocity[1] * ref.acceleration[1]
    ubar2 = (t.omega_d_dot
             + gains.kappa5 * t.speed * t.p2 / gains.k2
             + (va / (t.speed * t.speed) - gains.kappa7 * t.speed)
             * (body.thetadot - t.omega_d))
    return (u1, -d0 * ubar2)


def lyapunov_diagnostics(measured: FullState, ref: ReferenceSample,
                         gains: BacksteppingGains, d0: float,
                         delta_r: float = 0.01) -> tuple[float, float, float]:
    """Storage value S, Lyapunov value L and the closed-form Ldot.

    L is nonnegative and Ldot is a negative-weighted sum of squares, so
    the returned Ldot is <= 0 for every state and admissible reference;
    along closed-loop trajectories of the reduced model it matches the
    finite-difference slope of L.
    """
    t = _terms(measured, ref, gains, d0, delta_r)
    body = measured.body_velocity()
    xb1, xb2 = t.xi_bar
    storage = 0.5 * (xb1 * xb1 + xb2 * xb2) + (1.0 - t.p1 / t.speed) / gains.k2
    e_eta = body.xdot - t.eta1d
    e_omega = body.thetadot - t.omega_d
    k5 = t.speed * t.speed * gains.kappa5
    lyap = storage + e_eta * e_eta / (2.0 * gains.k4) + e_omega * e_omega / (2.0 * k5)
    k3 = gains.kappa3 / t.speed
    k7 = gains.kappa7 * t.speed
    lyap_dot = -(gains.k1 * xb1 * xb1
                 + (k3 / gains.k2) * t.p2 * t.p2
                 + (gains.k6 / gains.k4) * e_eta * e_eta
                 + (k7 / k5) * e_omega * e_omega)
    return (storage, lyap, lyap_dot)


def dfl_control(measured: FullState, ref: ReferenceSample, gains: DflGains,
                accel: tuple[float, float, float], state: DflState, dt: float,
                d0: float, eta_min: float = 0.05) -> tuple[float, float, DflState]:
    """One update of the dynamic-feedback-linearization baseline.

    The control point is a flat output: with an integrator state zeta
    standing in for the forward acceleration command, its third derivative
    is an invertible function of (zetadot, omegadot) as long as the
    forward velocity is nonzero. Per axis the commanded jerk is the
    reference jerk plus pole-placement feedback on the position, velocity
    and acceleration errors.

    accel is the measured inertial acceleration (Xddot, Yddot,
    thetaddot): unlike the backstepping law, this controller needs an
    acceleration measurement, which reflects whatever torque is acting on
    the plant right now. Raises SingularVelocity when |eta1| < eta_min,
    leaving the state untouched.
    """
    body = measured.body_velocity()
    eta1 = body.xdot
    if abs(eta1) < eta_min:
        raise SingularVelocity(f"|eta1| = {abs(eta1):.3e} < eta_min = {eta_min:.3e}")
    omega = body.thetadot
    c, s = math.cos(measured.theta), math.sin(measured.theta)

    xi = (measured.x + d0 * c, measured.y + d0 * s)
    lateral = body.ydot + d0 * omega
    xi_dot = (c * eta1 - s * lateral, s * eta1 + c * lateral)
    # The extension state is the physical forward acceleration, so it is
    # re-anchored to the accelerometer every update: etadot1 =
    # e1^T R^T pddot + omega*ydot_b. With ideal actuation this reproduces
    # the free integrator exactly; with actuation delay the anchor lags
    # the commanded value, which is what makes the baseline fragile.
    xdd, ydd, _ = accel
    zeta = c * xdd + s * ydd + omega * body.ydot
    xi_ddot = (c * zeta - s * eta1 * omega,
               s * zeta + c * eta1 * omega)

    cmd_x = (ref.jerk[0]
             + gains.ka1 * (ref.acceleration[0] - xi_ddot[0])
             + gains.kv1 * (ref.velocity[0] - xi_dot[0])
             + gains.kp1 * (ref.position[0] - xi[0]))
    cmd_y = (ref.jerk[1]
             + gains.ka2 * (ref.acceleration[1] - xi_ddot[1])
             + gains.kv2 * (ref.velocity[1] - xi_dot[1])
             + gains.kp2 * (ref.position[1] - xi[1]))

    body_cmd_1 = c * cmd_x + s * cmd_y
    body_cmd_2 = -s * cmd_x + c * cmd_y
    zeta_dot = body_cmd_1 + eta1 * omega * omega
    ubar2 = (body_cmd_2 - 2.0 * zeta * omega) / eta1

    new_state = DflState(zeta + zeta_dot * dt)
    return (new_state.zeta, -d0 * ubar2, new_state)
