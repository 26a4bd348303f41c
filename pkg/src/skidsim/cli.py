"""Command-line front end.

Subcommands:

* ``simulate <config> -o <dir>``  - run one experiment, write series.csv,
  metrics.csv and manifest.txt into the output directory.
* ``compare <configA> <configB> -o <dir>`` - run two experiments sharing
  trajectory and timing, write both full outputs plus a side-by-side
  metrics table and an aligned per-axis error CSV.
* ``tune longitudinal|lateral ...`` - pole-placement gain synthesis,
  printed as a [controller] block in experiment-file syntax.
* ``plot <series.csv> -o <file>`` - trajectory overlay and error traces
  as a vector-graphics (SVG) file.

Exit codes: 0 success, 1 configuration or input error, 2 run aborted on a
non-finite state (partial series still written). The environment variable
SKIDSIM_LOG selects log verbosity (debug, info, warning, error).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import hashlib
import logging
import math
import os
import sys

from . import __version__
from .config import ExperimentConfig, load_config, render_config
from .gains import (InfeasibleGains, InfeasibleK1, feasibility_check,
                    gain_product_condition, hurwitz_check,
                    lateral_pole_scaling_report, tune_lateral, tune_longitudinal)
from .simulator import (SERIES_COLUMNS, SERIES_SCHEMA_VERSION, ConfigError,
                        Metrics, TimeSeries, compute_metrics, run)

log = logging.getLogger("skidsim.cli")

METRICS_COLUMNS = ("rise_time", "max_peak", "decay_ratio", "rms_error_steady",
                   "max_error", "icr_violation_fraction", "diverged")


class SchemaError(Exception):
    """A series CSV does not match the expected schema."""


class ConfigMismatch(Exception):
    """Two configurations to compare differ in trajectory or timing."""


def _fmt(value: float) -> str:
    return repr(float(value))


def write_series_csv(series: TimeSeries, path: str) -> None:
    """Write the exported series columns; shortest round-trip float format."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(SERIES_COLUMNS)
        for row in series.rows():
            writer.writerow([_fmt(v) for v in row])


def write_metrics_csv(metrics: Metrics, path: str) -> None:
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(METRICS_COLUMNS)
        writer.writerow([_fmt(metrics.rise_time), _fmt(metrics.max_peak),
                         _fmt(metrics.decay_ratio), _fmt(metrics.rms_error_steady),
                         _fmt(metrics.max_error), _fmt(metrics.icr_violation_fraction),
                         str(int(metrics.diverged))])


def write_manifest(config: ExperimentConfig, series: TimeSeries, path: str,
                   command: str) -> None:
    """Echo the fully resolved configuration and run facts.

    The manifest is the only output that carries a timestamp; the CSVs
    stay byte-identical across reruns.
    """
    resolved = render_config(config)
    digest = hashlib.sha256(resolved.encode("utf-8")).hexdigest()
    lines = [
        f"code_version = {__version__}",
        f"series_schema_version = {SERIES_SCHEMA_VERSION}",
        f"command = {command}",
        f"created_utc = {datetime.datetime.now(datetime.timezone.utc).isoformat()}",
        f"config_sha256 = {digest}",
        f"rows = {len(series)}",
        f"completed = {not series.failed}",
        f"failure_step = {series.failure_step if series.failed else ''}",
        f"singular_events = {series.singular_events}",
        "noise_injection = measurement only, one draw per control instant",
        "initial_delay_policy = zero command until the queue fills",
        "series_columns = " + ",".join(SERIES_COLUMNS),
        "",
        resolved,
    ]
    with open(path, "w", encoding="utf-8") as handle:
        handle.write("\n".join(lines))


def _simulate_into(config: ExperimentConfig, outdir: str, command: str):
    os.makedirs(outdir, exist_ok=True)
    series = run(config.sim)
    # The metrics window may not span a series cut short by a failure.
    t = series.column("t")
    duration = t[-1] - t[0] if len(t) > 1 else 0.0
    dt = config.sim.dt_integrator
    window = min(config.steady_window, duration - dt) if duration > dt else 0.0
    metrics = compute_metrics(series, window)
    write_series_csv(series, os.path.join(outdir, "series.csv"))
    write_metrics_csv(metrics, os.path.join(outdir, "metrics.csv"))
    write_manifest(config, series, os.path.join(outdir, "manifest.txt"), command)
    return series, metrics


def cmd_simulate(args: argparse.Namespace) -> int:
    try:
        config = load_config(args.config)
        series, metrics = _simulate_into(config, args.output, "simulate")
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    if series.failed:
        print(f"run aborted on non-finite state at step {series.failure_step}; "
              "partial series written", file=sys.stderr)
        return 2
    return 0


def cmd_compare(args: argparse.Namespace) -> int:
    try:
        config_a = load_config(args.config_a)
        config_b = load_config(args.config_b)
        _check_comparable(config_a, config_b)
        series_a, metrics_a = _simulate_into(
            config_a, os.path.join(args.output, "a"), "compare")
        series_b, metrics_b = _simulate_into(
            config_b, os.path.join(args.output, "b"), "compare")
    except ConfigMismatch as exc:
        print(f"config mismatch: {exc}", file=sys.stderr)
        return 1
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1

    os.makedirs(args.output, exist_ok=True)
    with open(os.path.join(args.output, "compare_metrics.csv"), "w",
              newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("metric", "a", "b"))
        for name in METRICS_COLUMNS:
            va, vb = getattr(metrics_a, name), getattr(metrics_b, name)
            if name == "diverged":
                writer.writerow((name, str(int(va)), str(int(vb))))
            else:
                writer.writerow((name, _fmt(va), _fmt(vb)))

    n = min(len(series_a), len(series_b))
    with open(os.path.join(args.output, "compare_errors.csv"), "w",
              newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(("t", "err_x_a", "err_y_a", "err_x_b", "err_y_b"))
        t = series_a.column("t")
        for i in range(n):
            writer.writerow([_fmt(t[i]),
                             _fmt(series_a.column("err_x")[i]),
                             _fmt(series_a.column("err_y")[i]),
                             _fmt(series_b.column("err_x")[i]),
                             _fmt(series_b.column("err_y")[i])])
    if series_a.failed or series_b.failed:
        print("at least one run aborted on a non-finite state; "
              "comparison covers the common prefix", file=sys.stderr)
        return 2
    return 0


def _check_comparable(a: ExperimentConfig, b: ExperimentConfig) -> None:
    if a.sim.trajectory != b.sim.trajectory:
        raise ConfigMismatch("trajectories differ")
    for field in ("t_end", "dt_integrator", "delay"):
        if getattr(a.sim, field) != getattr(b.sim, field):
            raise ConfigMismatch(f"timing field {field} differs")
    if a.sim.control_period() != b.sim.control_period():
        raise ConfigMismatch("timing field dt_control differs")


def cmd_tune(args: argparse.Namespace) -> int:
    if args.mode == "longitudinal":
        if len(args.poles) != 2:
            print("longitudinal tuning needs exactly 2 poles", file=sys.stderr)
            return 1
        if args.k1 is None:
            print("longitudinal tuning needs --k1", file=sys.stderr)
            return 1
        try:
            k4, k6 = tune_longitudinal((args.poles[0], args.poles[1]), args.k1)
        except InfeasibleK1 as exc:
            print(f"infeasible: {exc}", file=sys.stderr)
            return 1
        print("[controller]")
        print("kind = backstepping")
        print(f"k1 = {_fmt(args.k1)}")
        print(f"k4 = {_fmt(k4)}")
        print(f"k6 = {_fmt(k6)}")
        ok = hurwitz_check((1.0, args.k1 + k6, args.k1 * k6 + k4))
        print(f"; hurwitz = {ok}")
        print(f"; gain_product_condition (advisory) = "
              f"{gain_product_condition(args.k1, k4, k6)}")
        return 0

    if len(args.poles) != 3:
        print("lateral tuning needs exactly 3 poles", file=sys.stderr)
        return 1
    if args.k2 is None:
        print("lateral tuning needs --k2", file=sys.stderr)
        return 1
    poles = tuple(args.poles)
    try:
        kappa3, kappa5, kappa7 = tune_lateral(args.k2, poles)
    except InfeasibleGains as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        if poles[0] == poles[1] and not feasibility_check(args.k2, poles[0], poles[2]):
            print("feasibility bound violated: needs k2 < lambda1^2 and "
                  "lambda3 > 2*lambda1*k2/(lambda1^2 - k2)", file=sys.stderr)
        return 1
    print("[controller]")
    print("kind = backstepping")
    print(f"k2 = {_fmt(args.k2)}")
    print(f"kappa3 = {_fmt(kappa3)}")
    print(f"kappa5 = {_fmt(kappa5)}")
    print(f"kappa7 = {_fmt(kappa7)}")
    a2 = kappa3 + kappa7
    a1 = kappa3 * kappa7 + kappa5 / args.k2 + args.k2
    a0 = args.k2 * kappa7
    print(f"; hurwitz = {hurwitz_check((1.0, a2, a1, a0))}")
    if poles[0] == poles[1]:
        print(f"; feasibility_bound = {feasibility_check(args.k2, poles[0], poles[2])}")
    report = lateral_pole_scaling_report(args.k2, kappa3, kappa5, kappa7,
                                         poles, speed=2.0)
    print("; pole scaling at reference speed 2.0:")
    print(f";   observed          = {report['observed']}")
    print(f";   speed * poles     = {report['linear_scaling']} "
          f"(max residual {max(abs(r) for r in report['residual_linear']):.2e})")
    print(f";   speed^2 * poles   = {report['quadratic_scaling']} "
          f"(max residual {max(abs(r) for r in report['residual_quadratic']):.2e})")
    return 0


def read_series_csv(path: str) -> dict[str, list[float]]:
    """Load a series CSV, validating the schema."""
    try:
        with open(path, "r", newline="", encoding="utf-8") as handle:
            reader = csv.reader(handle)
            try:
                header = next(reader)
            except StopIteration:
                raise SchemaError("series file is empty") from None
            missing = [c for c in SERIES_COLUMNS if c not in header]
            if missing:
                raise SchemaError(f"missing column(s): {', '.join(missing)}")
            index = {name: header.index(name) for name in SERIES_COLUMNS}
            data: dict[str, list[float]] = {name: [] for name in SERIES_COLUMNS}
            for row in reader:
                if len(row) != len(header):
                    raise SchemaError(f"row width {len(row)} != header width {len(header)}")
                for name in SERIES_COLUMNS:
                    data[name].append(float(row[index[name]]))
    except OSError as exc:
        raise SchemaError(f"cannot read {path}: {exc}") from exc
    except ValueError as exc:
        raise SchemaError(f"non-numeric cell in {path}: {exc}") from exc
    if not data["t"]:
        raise SchemaError("series contains a header but no rows")
    return data


def plot_series(data: dict[str, list[float]], path: str) -> None:
    """Two-panel figure: XY path overlay and error norm versus time."""
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, (ax_path, ax_err) = plt.subplots(1, 2, figsize=(11, 4.5))
    ax_path.plot(data["xi_r_x"], data["xi_r_y"], "k--", label="reference")
    ax_path.plot(data["X"], data["Y"], "b-", label="robot")
    ax_path.set_xlabel("X (m)")
    ax_path.set_ylabel("Y (m)")
    ax_path.set_aspect("equal", adjustable="datalim")
    ax_path.legend()
    ax_path.set_title("path")

    err = [math.hypot(a, b) for a, b in zip(data["err_x"], data["err_y"])]
    ax_err.plot(data["t"], data["err_x"], label="err_x")
    ax_err.plot(data["t"], data["err_y"], label="err_y")
    ax_err.plot(data["t"], err, "k", label="|err|")
    ax_err.set_xlabel("t (s)")
    ax_err.set_ylabel("tracking error (m)")
    ax_err.legend()
    ax_err.set_title("control-point error")

    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def cmd_plot(args: argparse.Namespace) -> int:
    try:
        data = read_series_csv(args.series)
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return 1
    plot_series(data, args.output)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="skidsim",
        description="skid-steering trajectory-tracking simulator")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p_sim = sub.add_parser("simulate", help="run one experiment config")
    p_sim.add_argument("config")
    p_sim.add_argument("-o", "--output", required=True, help="output directory")
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run two configs side by side")
    p_cmp.add_argument("config_a")
    p_cmp.add_argument("config_b")
    p_cmp.add_argument("-o", "--output", required=True, help="output directory")
    p_cmp.set_defaults(func=cmd_compare)

    p_tune = sub.add_parser("tune", help="pole-placement gain synthesis")
    p_tune.add_argument("mode", choices=("longitudinal", "lateral"))
    p_tune.add_argument("--poles", type=float, nargs="+", required=True,
                        help="negative real pole locations")
    p_tune.add_argument("--k1", type=float, default=None)
    p_tune.add_argument("--k2", type=float, default=None)
    p_tune.set_defaults(func=cmd_tune)

    p_plot = sub.add_parser("plot", help="render a series CSV to SVG")
    p_plot.add_argument("series")
    p_plot.add_argument("-o", "--output", required=True, help="output SVG path")
    p_plot.set_defaults(func=cmd_plot)
    return parser


def main(argv=None) -> int:
    level = os.environ.get("SKIDSIM_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING))
    args = build_parser().parse_args(argv)
    return args.func(args)


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
