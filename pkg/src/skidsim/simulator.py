"""Deterministic fixed-step closed-loop simulation engine.

One run integrates either the full plant or the reduced model under a
chosen controller. Sensing, control and actuation follow a strict
schedule: at every control instant a single noise vector is drawn and
added to the true state to form the measurement, the controller is
evaluated on that measurement, and the resulting command enters a delay
queue; the command popped from the queue (zero while the queue is still
filling) is held constant until the next control instant. Noise never
feeds back into the integrated plant state. Given the same configuration,
including the seed, two runs produce identical output.
"""

from __future__ import annotations

import logging
import math
import random
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Union

from . import controllers, reduced
from .controllers import BacksteppingGains, DflGains, DflState, SingularVelocity
from .dynamics import (BodyVelocity, FullState, RobotParams, body_from_inertial,
                       full_state_derivative, inertial_from_body)
from .integrators import NonFiniteState, integrate_step
from .reduced import reduced_state_derivative, torque_from_u
from .trajectories import Trajectory, validate_assumption1

log = logging.getLogger("skidsim.simulator")

NOISE_CHANNELS = ("x", "y", "theta", "xdot", "ydot", "thetadot")

# Columns of the exported series, in order. Measured channels repeat the
# most recent sensor sample between control instants.
SERIES_COLUMNS = (
    "t", "X", "Y", "theta", "Xdot", "Ydot", "thetadot",
    "X_meas", "Y_meas", "theta_meas", "Xdot_meas", "Ydot_meas", "thetadot_meas",
    "xi_r_x", "xi_r_y", "u1", "u2", "tau1", "tau2",
    "err_x", "err_y", "L", "Ldot", "x_icr", "constraint_residual",
)

# Extra in-memory columns, not exported.
_ANALYSIS_COLUMNS = ("err_body_1", "err_body_2", "theta_err")

SERIES_SCHEMA_VERSION = 1

X_ICR_TOL = 1e-6  # yaw-rate floor (rad/s) below which x_ICR is undefined


class ConfigError(Exception):
    """Invalid or inconsistent simulation configuration."""


class EmptySeries(Exception):
    """Metrics requested for a series with no records."""


@dataclass(frozen=True)
class NoiseSpec:
    """Per-channel Gaussian measurement noise.

    mean and std are 6-tuples over the inertial state channels
    (X, Y, theta, Xdot, Ydot, thetadot) in their native units.
    """

    mean: tuple[float, float, float, float, float, float] = (0.0,) * 6
    std: tuple[float, float, float, float, float, float] = (0.0,) * 6

    def __post_init__(self) -> None:
        if len(self.mean) != 6 or len(self.std) != 6:
            raise ValueError("NoiseSpec.mean and .std must have 6 channels")
        if any(s < 0.0 for s in self.std):
            raise ValueError("NoiseSpec.std entries must be >= 0")


def gaussian_noise(spec: NoiseSpec, rng: random.Random) -> tuple[float, ...]:
    """One 6-channel noise vector from a seeded generator.

    Standard normals come from Box-Muller with both outputs of each pair
    consumed, channels filled in the fixed order X, Y, theta, Xdot, Ydot,
    thetadot, so the stream is fully pinned by the seed.
    """
    normals = []
    for _ in range(3):
        u1 = 1.0 - rng.random()  # (0, 1]
        u2 = rng.random()
        radius = math.sqrt(-2.0 * math.log(u1))
        normals.append(radius * math.cos(2.0 * math.pi * u2))
        normals.append(radius * math.sin(2.0 * math.pi * u2))
    return tuple(m + s * z for m, s, z in zip(spec.mean, spec.std, normals))


@dataclass(frozen=True)
class InitialState:
    """Initial pose and body-frame velocity of the robot.

    Velocities are given in the body frame (forward, lateral, yaw rate).
    The full plant converts them to inertial rates once at startup; the
    reduced plant takes its pseudo-velocity directly from (xdot_body,
    ydot_body) and its yaw rate is then slaved to the lateral channel, so
    thetadot is ignored there.
    """

    x: float = 0.0
    y: float = 0.0
    theta: float = 0.0
    xdot_body: float = 0.0
    ydot_body: float = 0.0
    thetadot: float = 0.0

    def body_velocity(self) -> BodyVelocity:
        return BodyVelocity(self.xdot_body, self.ydot_body, self.thetadot)

    def full_state(self) -> FullState:
        inertial = inertial_from_body(self.theta, self.body_velocity())
        return FullState(self.x, self.y, self.theta, *inertial)


@dataclass(frozen=True)
class SimConfig:
    """Complete description of one closed-loop run."""

    plant: str                    # "full" or "reduced"
    controller: str               # "backstepping" or "dfl"
    gains: Union[BacksteppingGains, DflGains]
    trajectory: Trajectory
    t_end: float
    params: RobotParams
    initial: InitialState
    dt_integrator: float = 0.005
    dt_control: Optional[float] = None   # defaults to dt_integrator
    delay: float = 0.0
    noise: Optional[NoiseSpec] = None
    seed: int = 0
    delta_r: float = 0.01
    a_r: float = 10.0
    eta_min: float = 0.05

    def control_period(self) -> float:
        return self.dt_integrator if self.dt_control is None else self.dt_control


def validate_config(config: SimConfig) -> None:
    """Raise ConfigError on any violated configuration invariant."""
    if config.plant not in ("full", "reduced"):
        raise ConfigError(f"unknown plant {config.plant!r}")
    if config.controller not in ("backstepping", "dfl"):
        raise ConfigError(f"unknown controller {config.controller!r}")
    if config.controller == "backstepping" and not isinstance(config.gains, BacksteppingGains):
        raise ConfigError("backstepping controller requires BacksteppingGains")
    if config.controller == "dfl" and not isinstance(config.gains, DflGains):
        raise ConfigError("dfl controller requires DflGains")
    if not config.t_end > 0.0:
        raise ConfigError("t_end must be positive")
    if not config.dt_integrator > 0.0:
        raise ConfigError("dt_integrator must be positive")
    if int(round(config.t_end / config.dt_integrator)) < 1:
        raise ConfigError("t_end must cover at least one integrator step")
    dt_c = config.control_period()
    ratio = dt_c / config.dt_integrator
    if dt_c < config.dt_integrator or abs(ratio - round(ratio)) > 1e-9:
        raise ConfigError(
            f"dt_control={dt_c} must be an integer multiple of dt_integrator={config.dt_integrator}")
    if config.delay < 0.0:
        raise ConfigError("delay must be >= 0")
    steps = config.delay / dt_c
    if abs(steps - round(steps)) > 1e-9:
        raise ConfigError(f"delay={config.delay} must be an integer multiple of dt_control={dt_c}")
    try:
        reduced.check_input_map(config.params)
    except reduced.SingularInputMap as exc:
        raise ConfigError(str(exc)) from exc
    report = validate_assumption1(config.trajectory, config.t_end,
                                  config.delta_r, config.a_r)
    if not report.passed:
        raise ConfigError(
            "trajectory violates the reference envelope: "
            f"min speed {report.min_speed:.4g} (floor {config.delta_r:.4g}), "
            f"max acceleration {report.max_acceleration:.4g} (cap {config.a_r:.4g})")


class DelayLine:
    """FIFO of commands with a fixed latency measured in control steps.

    push(cmd) enqueues the newly computed command and returns the one to
    apply now: with latency k, the command applied at control step n is
    the one computed at step n-k, and the prefill value for the first k
    steps.
    """

    def __init__(self, latency_steps: int, prefill):
        self._queue = deque([prefill] * latency_steps)

    def push(self, command):
        self._queue.append(command)
        return self._queue.popleft()


@dataclass
class TimeSeries:
    """Uniformly sampled closed-loop records plus run-level flags.

    Column lists are aligned; SERIES_COLUMNS documents the exported subset
    and order, body-frame errors stay in memory for analysis. Undefined
    diagnostics (x_ICR during straight motion, L for the baseline
    controller) are NaN. icr_bounds carries the admissible [-b, a]
    interval of the robot that produced the series.
    """

    columns: dict[str, list[float]] = field(default_factory=dict)
    failed: bool = False
    failure_step: Optional[int] = None
    singular_events: int = 0
    icr_bounds: tuple[float, float] = (-math.inf, math.inf)

    def __post_init__(self) -> None:
        if not self.columns:
            self.columns = {name: [] for name in SERIES_COLUMNS + _ANALYSIS_COLUMNS}

    def __len__(self) -> int:
        return len(self.columns["t"])

    def column(self, name: str) -> list[float]:
        return self.columns[name]

    def rows(self):
        """Yield exported rows in SERIES_COLUMNS order."""
        cols = [self.columns[name] for name in SERIES_COLUMNS]
        yield from zip(*cols)


@dataclass(frozen=True)
class Metrics:
    """Summary statistics of the control-point tracking error."""

    rise_time: float
    max_peak: float
    decay_ratio: float
    rms_error_steady: float
    max_error: float
    icr_violation_fraction: float
    diverged: bool = False


def _measurement(truth: tuple[float, ...], config: SimConfig,
                 rng: random.Random) -> FullState:
    """Noisy inertial view of the true state; one noise draw per call."""
    if config.plant == "reduced":
        x, y, theta, eta1, eta2 = truth
        body = reduced.ReducedState(x, y, theta, eta1, eta2).body_velocity(config.params.d0)
        state = (x, y, theta) + inertial_from_body(theta, body)
    else:
        state = truth
    if config.noise is None:
        return FullState(*state)
    noise = gaussian_noise(config.noise, rng)
    return FullState(*(value + n for value, n in zip(state, noise)))


def _true_view(truth: tuple[float, ...], config: SimConfig):
    """Pose, body velocity and inertial velocity of the true state."""
    if config.plant == "reduced":
        x, y, theta, eta1, eta2 = truth
        body = reduced.ReducedState(x, y, theta, eta1, eta2).body_velocity(config.params.d0)
        return (x, y, theta), body, inertial_from_body(theta, body)
    pose = truth[:3]
    body = body_from_inertial(pose[2], truth[3:])
    return pose, body, truth[3:]


def _accelerations(truth: tuple[float, ...], config: SimConfig,
                   cmd) -> tuple[float, float, float]:
    """True inertial accelerations (Xddot, Yddot, thetaddot) under cmd.

    This is what an accelerometer/gyro package reports at the sampling
    instant: the plant's instantaneous response to whatever command is
    acting on it right now (under delay, a stale one).
    """
    u, tau = cmd
    if config.plant == "full":
        return full_state_derivative(config.params, truth, tau[0], tau[1])[3:]
    # qddot = Ndot eta + N etadot with etadot = u.
    x, y, theta, eta1, eta2 = truth
    d0 = config.params.d0
    omega = -eta2 / d0
    c, s = math.cos(theta), math.sin(theta)
    return (omega * (-s * eta1 - c * eta2) + c * u[0] - s * u[1],
            omega * (c * eta1 - s * eta2) + s * u[0] + c * u[1],
            -u[1] / d0)


def run(config: SimConfig) -> TimeSeries:
    """Execute the closed loop and return the full record.

    A non-finite plant state aborts the run but returns the partial
    series with the failure flagged; every other configuration problem
    raises ConfigError before any integration happens.
    """
    validate_config(config)
    params = config.params
    dt = config.dt_integrator
    dt_c = config.control_period()
    control_every = int(round(dt_c / dt))
    latency = int(round(config.delay / dt_c))
    n_steps = int(round(config.t_end / dt))
    rng = random.Random(config.seed)

    zero_cmd = ((0.0, 0.0), (0.0, 0.0))  # (u, tau)
    line = DelayLine(latency, zero_cmd)
    dfl_state = DflState()
    backstepping = config.controller == "backstepping"

    if config.plant == "full":
        y = config.initial.full_state().as_tuple()

        def plant_rhs(state, u, tau):
            return full_state_derivative(params, state, tau[0], tau[1])
    else:
        y = (config.initial.x, config.initial.y, config.initial.theta,
             config.initial.xdot_body, config.initial.ydot_body)

        def plant_rhs(state, u, tau):
            return reduced_state_derivative(state, u[0], u[1], params.d0)

    series = TimeSeries(icr_bounds=(-params.b, params.a))
    cols = series.columns
    held = zero_cmd
    last_cmd = zero_cmd
    meas = None

    def record(t: float, truth, meas_state: FullState, cmd) -> None:
        pose, body, inertial = _true_view(truth, config)
        ref = config.trajectory.sample(t)
        err = controllers.tracking_errors(pose, ref, params.d0)
        if backstepping:
            try:
                _, lyap, lyap_dot = controllers.lyapunov_diagnostics(
                    FullState(*pose, *inertial), ref, config.gains, params.d0,
                    config.delta_r)
            except controllers.DegenerateReference:
                lyap, lyap_dot = math.nan, math.nan
        else:
            lyap, lyap_dot = math.nan, math.nan
        icr = -body.ydot / body.thetadot if abs(body.thetadot) >= X_ICR_TOL else math.nan
        u, tau = cmd
        for name, value in (
            ("t", t), ("X", pose[0]), ("Y", pose[1]), ("theta", pose[2]),
            ("Xdot", inertial[0]), ("Ydot", inertial[1]), ("thetadot", inertial[2]),
            ("X_meas", meas_state.x), ("Y_meas", meas_state.y),
            ("theta_meas", meas_state.theta), ("Xdot_meas", meas_state.xdot),
            ("Ydot_meas", meas_state.ydot), ("thetadot_meas", meas_state.thetadot),
            ("xi_r_x", ref.position[0]), ("xi_r_y", ref.position[1]),
            ("u1", u[0]), ("u2", u[1]), ("tau1", tau[0]), ("tau2", tau[1]),
            ("err_x", err.xi_tilde[0]), ("err_y", err.xi_tilde[1]),
            ("L", lyap), ("Ldot", lyap_dot), ("x_icr", icr),
            ("constraint_residual", body.ydot + params.d0 * body.thetadot),
            ("err_body_1", err.xi_bar[0]), ("err_body_2", err.xi_bar[1]),
            ("theta_err", err.theta_tilde),
        ):
            cols[name].append(value)

    for n in range(n_steps):
        t = n * dt
        if n % control_every == 0:
            meas = _measurement(y, config, rng)
            ref = config.trajectory.sample(t)
            if backstepping:
                u = controllers.backstepping_control(
                    meas, ref, config.gains, params.d0, config.delta_r)
            else:
                try:
                    u1, u2, dfl_state = controllers.dfl_control(
                        meas, ref, config.gains, _accelerations(y, config, held),
                        dfl_state, dt_c, params.d0, config.eta_min)
                    u = (u1, u2)
                except SingularVelocity:
                    series.singular_events += 1
                    log.debug("singular velocity at t=%.3f, holding last command", t)
                    u = last_cmd[0]
            tau = torque_from_u(params, meas, u)
            last_cmd = (u, tau)
            held = line.push(last_cmd)
        record(t, y, meas, held)
        try:
            y = integrate_step(lambda s: plant_rhs(s, held[0], held[1]), y, dt)
        except NonFiniteState:
            series.failed = True
            series.failure_step = n + 1
            log.warning("non-finite state at step %d (t=%.3f)", n + 1, t + dt)
            break
    else:
        record(n_steps * dt, y, meas, held)
    return series


def compute_metrics(series: TimeSeries, steady_window: float) -> Metrics:
    """Tracking-error statistics over one run.

    rise_time is the first time the error norm falls below 10 percent of
    its initial value (inf if it never does); max_peak the largest error
    after that; decay_ratio the ratio of the second to the first local
    error maximum after the rise (0 with fewer than two peaks); the RMS is
    taken over the trailing steady_window seconds. The ICR fraction counts
    steps whose defined x_ICR leaves the series' [-b, a] interval, over
    all steps.
    """
    n = len(series)
    if n == 0:
        raise EmptySeries("series has no records")
    t = series.column("t")
    duration = t[-1] - t[0]
    if duration > 0.0 and not steady_window < duration:
        raise ValueError("steady_window must be shorter than the series duration")
    err = [math.hypot(a, b)
           for a, b in zip(series.column("err_x"), series.column("err_y"))]

    threshold = 0.1 * err[0]
    rise_idx = next((i for i, e in enumerate(err) if e <= threshold), None)
    rise_time = t[rise_idx] - t[0] if rise_idx is not None else math.inf
    tail = err[rise_idx:] if rise_idx is not None else err
    max_peak = max(tail)
    max_error = max(err)

    peaks = [tail[i] for i in range(1, len(tail) - 1)
             if tail[i] > tail[i - 1] and tail[i] >= tail[i + 1]]
    decay_ratio = peaks[1] / peaks[0] if len(peaks) >= 2 and peaks[0] > 0.0 else 0.0

    start = t[-1] - steady_window
    steady = [e * e for time, e in zip(t, err) if time >= start]
    rms = math.sqrt(sum(steady) / len(steady)) if steady else 0.0

    lo, hi = series.icr_bounds
    violations = sum(1 for v in series.column("x_icr")
                     if not math.isnan(v) and (v < lo or v > hi))
    diverged = series.failed or not math.isfinite(rms) or not math.isfinite(max_error)
    return Metrics(rise_time, max_peak, decay_ratio, rms, max_error,
                   violations / n, diverged)
