"""Experiment file parsing and rendering.

An experiment file is INI-style structured text with the sections
[robot], [trajectory], [controller], [noise], [timing] and [output].
Unknown sections or keys are rejected, every omitted optional key is
materialized to its default, and rendering a parsed configuration
reproduces an equivalent file (floats are written in shortest
round-trip form, so parse(render(c)) == c).
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass

from .controllers import BacksteppingGains, DflGains
from .dynamics import RobotParams
from .simulator import ConfigError, InitialState, NoiseSpec, SimConfig
from .trajectories import Circle, Lissajous, StraightLine, Trajectory

_NOISE_KEYS = tuple(f"{kind}_{ch}" for kind in ("mean", "std")
                    for ch in ("x", "y", "theta", "xdot", "ydot", "thetadot"))

# section -> {key: default}; None marks a required key.
_ROBOT_KEYS = {
    "plant": "full",
    "m": None, "inertia_z": None, "a": None, "b": None,
    "half_track": None, "wheel_radius": None, "d0": None,
    "f_r": None, "mu": None,
    "g": 9.81, "sgn_epsilon": 1e-3,
    "x0": 0.0, "y0": 0.0, "theta0": 0.0,
    "xdot0_body": 0.0, "ydot0_body": 0.0, "thetadot0": 0.0,
}
_TRAJECTORY_KEYS = {
    "circle": {"radius": None, "angular_rate": 0.2,
               "center_x": 0.0, "center_y": 0.0, "phase": 0.0},
    "lissajous": {"amplitude": None, "base_rate": None,
                  "offset_x": 0.0, "offset_y": 0.0},
    "straight_line": {"start_x": 0.0, "start_y": 0.0,
                      "velocity_x": 0.0, "velocity_y": 0.0},
}
_CONTROLLER_KEYS = {
    "backstepping": {"k1": None, "k2": None, "kappa3": None, "k4": None,
                     "kappa5": None, "k6": None, "kappa7": None,
                     "delta_r": 0.01, "a_r": 10.0},
    "dfl": {"kp1": None, "kv1": None, "ka1": None,
            "kp2": None, "kv2": None, "ka2": None,
            "delta_r": 0.01, "a_r": 10.0, "eta_min": 0.05},
}
_TIMING_KEYS = {"t_end": None, "dt_integrator": 0.005, "dt_control": None,
                "delay": 0.0, "seed": 0}
_OUTPUT_KEYS = {"steady_window": 20.0}


@dataclass(frozen=True)
class ExperimentConfig:
    """A fully resolved experiment: the run itself plus output settings."""

    sim: SimConfig
    steady_window: float = 20.0


def _section(parser: configparser.ConfigParser, name: str,
             known: dict, required_section: bool = True) -> dict[str, str]:
    if not parser.has_section(name):
        if required_section:
            raise ConfigError(f"missing section [{name}]")
        return {}
    raw = dict(parser.items(name))
    for key in raw:
        if key not in known:
            raise ConfigError(f"unknown key '{key}' in section [{name}]")
    return raw


def _floats(raw: dict[str, str], defaults: dict, section: str) -> dict[str, float]:
    out = {}
    for key, default in defaults.items():
        if key in raw:
            try:
                out[key] = float(raw[key])
            except ValueError as exc:
                raise ConfigError(f"key '{key}' in [{section}] is not a number: "
                                  f"{raw[key]!r}") from exc
        elif default is None:
            raise ConfigError(f"missing required key '{key}' in section [{section}]")
        else:
            out[key] = float(default)
    return out


def parse_config(text: str) -> ExperimentConfig:
    """Parse experiment file text into a fully materialized configuration."""
    parser = configparser.ConfigParser(interpolation=None,
                                       inline_comment_prefixes=(";", "#"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"unparsable experiment file: {exc}") from exc
    for section in parser.sections():
        if section not in ("robot", "trajectory", "controller", "noise",
                           "timing", "output"):
            raise ConfigError(f"unknown section [{section}]")

    raw_robot = _section(parser, "robot", _ROBOT_KEYS)
    plant = raw_robot.pop("plant", _ROBOT_KEYS["plant"]).strip()
    if plant not in ("full", "reduced"):
        raise ConfigError(f"key 'plant' in [robot] must be full or reduced, got {plant!r}")
    robot = _floats(raw_robot, {k: v for k, v in _ROBOT_KEYS.items() if k != "plant"},
                    "robot")
    try:
        params = RobotParams(m=robot["m"], inertia_z=robot["inertia_z"],
                             a=robot["a"], b=robot["b"],
                             half_track=robot["half_track"],
                             wheel_radius=robot["wheel_radius"], d0=robot["d0"],
                             f_r=robot["f_r"], mu=robot["mu"], g=robot["g"],
                             sgn_epsilon=robot["sgn_epsilon"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    initial = InitialState(robot["x0"], robot["y0"], robot["theta0"],
                           robot["xdot0_body"], robot["ydot0_body"],
                           robot["thetadot0"])

    raw_traj = _section(parser, "trajectory",
                        {"kind": None} | {k: None for spec in _TRAJECTORY_KEYS.values()
                                          for k in spec})
    kind = raw_traj.pop("kind", "").strip()
    if kind not in _TRAJECTORY_KEYS:
        raise ConfigError(f"key 'kind' in [trajectory] must be one of "
                          f"{sorted(_TRAJECTORY_KEYS)}, got {kind!r}")
    for key in raw_traj:
        if key not in _TRAJECTORY_KEYS[kind]:
            raise ConfigError(f"unknown key '{key}' in section [trajectory] "
                              f"for kind {kind}")
    traj_values = _floats(raw_traj, _TRAJECTORY_KEYS[kind], "trajectory")
    trajectory: Trajectory
    try:
        if kind == "circle":
            trajectory = Circle(traj_values["radius"], traj_values["angular_rate"],
                                (traj_values["center_x"], traj_values["center_y"]),
                                traj_values["phase"])
        elif kind == "lissajous":
            trajectory = Lissajous(traj_values["amplitude"], traj_values["base_rate"],
                                   (traj_values["offset_x"], traj_values["offset_y"]))
        else:
            trajectory = StraightLine((traj_values["start_x"], traj_values["start_y"]),
                                      (traj_values["velocity_x"], traj_values["velocity_y"]))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    raw_ctrl = _section(parser, "controller",
                        {"kind": None} | {k: None for spec in _CONTROLLER_KEYS.values()
                                          for k in spec})
    ctrl_kind = raw_ctrl.pop("kind", "").strip()
    if ctrl_kind not in _CONTROLLER_KEYS:
        raise ConfigError(f"key 'kind' in [controller] must be one of "
                          f"{sorted(_CONTROLLER_KEYS)}, got {ctrl_kind!r}")
    for key in raw_ctrl:
        if key not in _CONTROLLER_KEYS[ctrl_kind]:
            raise ConfigError(f"unknown key '{key}' in section [controller] "
                              f"for kind {ctrl_kind}")
    ctrl = _floats(raw_ctrl, _CONTROLLER_KEYS[ctrl_kind], "controller")
    try:
        if ctrl_kind == "backstepping":
            gains = BacksteppingGains(ctrl["k1"], ctrl["k2"], ctrl["kappa3"],
                                      ctrl["k4"], ctrl["kappa5"], ctrl["k6"],
                                      ctrl["kappa7"])
        else:
            gains = DflGains(ctrl["kp1"], ctrl["kv1"], ctrl["ka1"],
                             ctrl["kp2"], ctrl["kv2"], ctrl["ka2"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    raw_noise = _section(parser, "noise", dict.fromkeys(_NOISE_KEYS),
                         required_section=False)
    noise = None
    if parser.has_section("noise"):
        values = _floats(raw_noise, dict.fromkeys(_NOISE_KEYS, 0.0), "noise")
        try:
            noise = NoiseSpec(tuple(values[f"mean_{ch}"] for ch in
                                    ("x", "y", "theta", "xdot", "ydot", "thetadot")),
                              tuple(values[f"std_{ch}"] for ch in
                                    ("x", "y", "theta", "xdot", "ydot", "thetadot")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    raw_timing = _section(parser, "timing", _TIMING_KEYS)
    seed_text = raw_timing.pop("seed", None)
    try:
        seed = int(seed_text) if seed_text is not None else 0
    except ValueError as exc:
        raise ConfigError(f"key 'seed' in [timing] is not an integer: "
                          f"{seed_text!r}") from exc
    timing = _floats(raw_timing, {k: v for k, v in _TIMING_KEYS.items()
                                  if k not in ("seed", "dt_control")}, "timing")
    if "dt_control" in raw_timing:
        try:
            dt_control = float(raw_timing["dt_control"])
        except ValueError as exc:
            raise ConfigError("key 'dt_control' in [timing] is not a number") from exc
    else:
        dt_control = timing["dt_integrator"]

    raw_output = _section(parser, "output", _OUTPUT_KEYS, required_section=False)
    output = _floats(raw_output, _OUTPUT_KEYS, "output")

    sim = SimConfig(plant=plant, controller=ctrl_kind, gains=gains,
                    trajectory=trajectory, t_end=timing["t_end"], params=params,
                    initial=initial, dt_integrator=timing["dt_integrator"],
                    dt_control=dt_control, delay=timing["delay"], noise=noise,
                    seed=seed, delta_r=ctrl["delta_r"], a_r=ctrl["a_r"],
                    eta_min=ctrl.get("eta_min", 0.05))
    return ExperimentConfig(sim=sim, steady_window=output["steady_window"])


def load_config(path: str) -> ExperimentConfig:
    """Read and parse an experiment file from disk."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    return parse_config(text)


def _fmt(value: float) -> str:
    return repr(float(value))


def render_config(config: ExperimentConfig) -> str:
    """Render a configuration back to experiment-file text.

    Every field is materialized, so the output is a complete record of the
    run, suitable both for re-execution and for echoing into manifests.
    """
    sim = config.sim
    p = sim.params
    ini = sim.initial
    out = io.StringIO()

    def block(name: str, pairs) -> None:
        out.write(f"[{name}]\n")
        for key, value in pairs:
            out.write(f"{key} = {value}\n")
        out.write("\n")

    block("robot", [
        ("plant", sim.plant),
        ("m", _fmt(p.m)), ("inertia_z", _fmt(p.inertia_z)),
        ("a", _fmt(p.a)), ("b", _fmt(p.b)),
        ("half_track", _fmt(p.half_track)),
        ("wheel_radius", _fmt(p.wheel_radius)), ("d0", _fmt(p.d0)),
        ("f_r", _fmt(p.f_r)), ("mu", _fmt(p.mu)), ("g", _fmt(p.g)),
        ("sgn_epsilon", _fmt(p.sgn_epsilon)),
        ("x0", _fmt(ini.x)), ("y0", _fmt(ini.y)), ("theta0", _fmt(ini.theta)),
        ("xdot0_body", _fmt(ini.xdot_body)), ("ydot0_body", _fmt(ini.ydot_body)),
        ("thetadot0", _fmt(ini.thetadot)),
    ])

    traj = sim.trajectory
    if isinstance(traj, Circle):
        block("trajectory", [
            ("kind", "circle"), ("radius", _fmt(traj.radius)),
            ("angular_rate", _fmt(traj.angular_rate)),
            ("center_x", _fmt(traj.center[0])), ("center_y", _fmt(traj.center[1])),
            ("phase", _fmt(traj.phase)),
        ])
    elif isinstance(traj, Lissajous):
        block("trajectory", [
            ("kind", "lissajous"), ("amplitude", _fmt(traj.amplitude)),
            ("base_rate", _fmt(traj.base_rate)),
            ("offset_x", _fmt(traj.offset[0])), ("offset_y", _fmt(traj.offset[1])),
        ])
    else:
        block("trajectory", [
            ("kind", "straight_line"),
            ("start_x", _fmt(traj.start[0])), ("start_y", _fmt(traj.start[1])),
            ("velocity_x", _fmt(traj.velocity[0])), ("velocity_y", _fmt(traj.velocity[1])),
        ])

    gains = sim.gains
    if isinstance(gains, BacksteppingGains):
        pairs = [("kind", "backstepping"),
                 ("k1", _fmt(gains.k1)), ("k2", _fmt(gains.k2)),
                 ("kappa3", _fmt(gains.kappa3)), ("k4", _fmt(gains.k4)),
                 ("kappa5", _fmt(gains.kappa5)), ("k6", _fmt(gains.k6)),
                 ("kappa7", _fmt(gains.kappa7)),
                 ("delta_r", _fmt(sim.delta_r)), ("a_r", _fmt(sim.a_r))]
    else:
        pairs = [("kind", "dfl"),
                 ("kp1", _fmt(gains.kp1)), ("kv1", _fmt(gains.kv1)),
                 ("ka1", _fmt(gains.ka1)), ("kp2", _fmt(gains.kp2)),
                 ("kv2", _fmt(gains.kv2)), ("ka2", _fmt(gains.ka2)),
                 ("delta_r", _fmt(sim.delta_r)), ("a_r", _fmt(sim.a_r)),
                 ("eta_min", _fmt(sim.eta_min))]
    block("controller", pairs)

    if sim.noise is not None:
        channels = ("x", "y", "theta", "xdot", "ydot", "thetadot")
        block("noise",
              [(f"mean_{ch}", _fmt(v)) for ch, v in zip(channels, sim.noise.mean)]
              + [(f"std_{ch}", _fmt(v)) for ch, v in zip(channels, sim.noise.std)])

    block("timing", [
        ("t_end", _fmt(sim.t_end)),
        ("dt_integrator", _fmt(sim.dt_integrator)),
        ("dt_control", _fmt(sim.control_period())),
        ("delay", _fmt(sim.delay)),
        ("seed", str(sim.seed)),
    ])
    block("output", [("steady_window", _fmt(config.steady_window))])
    return out.getvalue()
