import math
import random

import pytest

from skidsim.simulator import (ConfigError, DelayLine, EmptySeries, Metrics,
                               NoiseSpec, SimConfig, TimeSeries, compute_metrics,
                               gaussian_noise, run)
from skidsim.trajectories import StraightLine


def circle_config(params, bs_gains, trajectory, initial, **kwargs):
    defaults = dict(plant="full", controller="backstepping", gains=bs_gains,
                    trajectory=trajectory, t_end=10.0, params=params, initial=initial)
    defaults.update(kwargs)
    return SimConfig(**defaults)


def test_noise_spec_validation():
    with pytest.raises(ValueError):
        NoiseSpec(std=(0.1, -0.1, 0.0, 0.0, 0.0, 0.0))
    with pytest.raises(ValueError):
        NoiseSpec(mean=(0.0,) * 5, std=(0.0,) * 5)


def test_gaussian_noise_deterministic():
    spec = NoiseSpec(std=(0.02, 0.02, 0.01, 0.08, 0.08, 0.01))
    a = [gaussian_noise(spec, random.Random(7)) for _ in range(1)][0]
    b = gaussian_noise(spec, random.Random(7))
    assert a == b
    c = gaussian_noise(spec, random.Random(8))
    assert a != c


def test_gaussian_noise_zero_sigma():
    spec = NoiseSpec(mean=(1.0, 2.0, 3.0, 4.0, 5.0, 6.0))
    assert gaussian_noise(spec, random.Random(0)) == (1.0, 2.0, 3.0, 4.0, 5.0, 6.0)


def test_gaussian_noise_statistics():
    # sample mean within 3 sigma/sqrt(N), sample sigma within 1 percent
    spec = NoiseSpec(std=(0.02, 0.02, 0.01, 0.08, 0.08, 0.01))
    rng = random.Random(123)
    n = 1_000_000
    total = 0.0
    total_sq = 0.0
    for _ in range(n):
        x = gaussian_noise(spec, rng)[0]
        total += x
        total_sq += x * x
    mean = total / n
    sigma = math.sqrt(total_sq / n - mean * mean)
    assert abs(mean) < 3 * 0.02 / math.sqrt(n)
    assert abs(sigma - 0.02) < 0.01 * 0.02


def test_delay_line_contract():
    line = DelayLine(3, "Z")
    applied = [line.push(i) for i in range(10)]
    assert applied == ["Z", "Z", "Z", 0, 1, 2, 3, 4, 5, 6]
    line = DelayLine(0, "Z")
    assert [line.push(i) for i in range(3)] == [0, 1, 2]


def test_run_determinism(params, bs_gains, circle_tune_trajectory, experiment_initial,
                         sensor_noise):
    cfg = circle_config(params, bs_gains, circle_tune_trajectory, experiment_initial,
                        t_end=5.0, noise=sensor_noise, seed=99)
    a = run(cfg)
    b = run(cfg)
    assert a.columns == b.columns
    assert a.failed == b.failed


def test_zero_sigma_noise_equals_no_noise(params, bs_gains, circle_tune_trajectory,
                                          experiment_initial):
    base = circle_config(params, bs_gains, circle_tune_trajectory, experiment_initial,
                         t_end=2.0)
    with_zero = circle_config(params, bs_gains, circle_tune_trajectory,
                              experiment_initial, t_end=2.0, noise=NoiseSpec())
    assert run(base).columns == run(with_zero).columns


def test_measurement_matches_truth_without_noise(params, bs_gains,
                                                 circle_tune_trajectory,
                                                 experiment_initial):
    series = run(circle_config(params, bs_gains, circle_tune_trajectory,
                               experiment_initial, t_end=2.0))
    # the trailing row repeats the sensor sample taken one step earlier,
    # so the comparison covers the control instants only
    for truth, meas in (("X", "X_meas"), ("Ydot", "Ydot_meas"),
                        ("thetadot", "thetadot_meas")):
        assert series.column(truth)[:-1] == series.column(meas)[:-1]


def test_delay_applies_stale_commands(params, bs_gains, circle_tune_trajectory,
                                      experiment_initial):
    nodelay = run(circle_config(params, bs_gains, circle_tune_trajectory,
                                experiment_initial, t_end=2.0))
    delayed = run(circle_config(params, bs_gains, circle_tune_trajectory,
                                experiment_initial, t_end=2.0, delay=0.01))
    # two control periods of zero command, then the command computed at step 0
    assert delayed.column("u1")[0] == 0.0 and delayed.column("u1")[1] == 0.0
    assert delayed.column("tau1")[0] == 0.0
    assert delayed.column("u1")[2] == nodelay.column("u1")[0]
    assert delayed.column("u2")[2] == nodelay.column("u2")[0]


def test_record_count(params, bs_gains, circle_tune_trajectory, experiment_initial):
    series = run(circle_config(params, bs_gains, circle_tune_trajectory,
                               experiment_initial, t_end=2.0))
    assert len(series) == int(round(2.0 / 0.005)) + 1
    assert series.column("t")[-1] == pytest.approx(2.0, abs=1e-12)


def test_lyapunov_monotone_per_control_step(params, bs_gains, circle_tune_trajectory,
                                            experiment_initial):
    series = run(circle_config(params, bs_gains, circle_tune_trajectory,
                               experiment_initial, plant="reduced", t_end=20.0))
    lyap = series.column("L")
    assert all(b <= a + 1e-8 for a, b in zip(lyap, lyap[1:]))


def test_reduced_plant_keeps_constraint(params, bs_gains, circle_tune_trajectory,
                                        experiment_initial):
    series = run(circle_config(params, bs_gains, circle_tune_trajectory,
                               experiment_initial, plant="reduced", t_end=5.0))
    assert max(abs(r) for r in series.column("constraint_residual")) < 1e-15
    # the reduced model pins the defined ICR offset at exactly d0
    defined = [v for v in series.column("x_icr") if not math.isnan(v)]
    assert defined and all(abs(v - params.d0) < 1e-9 for v in defined)


def test_grid_refinement_reduced_plant(params, bs_gains, circle_tune_trajectory,
                                       experiment_initial):
    # smooth vector field: halving the step moves the final position far
    # less than the 1e-6 bound that fifth-order convergence guarantees
    coarse = run(circle_config(params, bs_gains, circle_tune_trajectory,
                               experiment_initial, plant="reduced", t_end=60.0,
                               dt_control=0.005))
    fine = run(circle_config(params, bs_gains, circle_tune_trajectory,
                             experiment_initial, plant="reduced", t_end=60.0,
                             dt_control=0.005, dt_integrator=0.0025))
    dx = coarse.column("X")[-1] - fine.column("X")[-1]
    dy = coarse.column("Y")[-1] - fine.column("Y")[-1]
    assert math.hypot(dx, dy) < 1e-6


def test_grid_refinement_full_plant_statistics(params, bs_gains,
                                               circle_tune_trajectory,
                                               experiment_initial):
    # The friction sign-smoothing width (1e-3 m/s) makes the full plant
    # effectively non-smooth at wheel-speed zero crossings, so pointwise
    # final states do not refine; the steady oscillation statistics do.
    coarse = run(circle_config(params, bs_gains, circle_tune_trajectory,
                               experiment_initial, t_end=60.0, dt_control=0.005))
    fine = run(circle_config(params, bs_gains, circle_tune_trajectory,
                             experiment_initial, t_end=60.0, dt_control=0.005,
                             dt_integrator=0.0025))
    def tail_max(series):
        err = [math.hypot(a, b) for a, b in zip(series.column("err_x"),
                                                series.column("err_y"))]
        return max(err[int(len(err) * 2 / 3):])
    a, b = tail_max(coarse), tail_max(fine)
    assert abs(a - b) / a < 0.2


def test_divergence_captured_not_raised(params, dfl_gains, lissajous,
                                        lissajous_initial, sensor_noise):
    cfg = SimConfig(plant="full", controller="dfl", gains=dfl_gains,
                    trajectory=lissajous, t_end=120.0, params=params,
                    initial=lissajous_initial, noise=sensor_noise, seed=42,
                    dt_control=0.01, delay=0.03)
    series = run(cfg)
    assert series.failed
    assert series.failure_step is not None
    assert len(series) == series.failure_step
    metrics = compute_metrics(series, 1.0)
    assert metrics.diverged


def test_config_validation(params, bs_gains, dfl_gains, circle_tune_trajectory,
                           experiment_initial):
    good = circle_config(params, bs_gains, circle_tune_trajectory, experiment_initial)
    with pytest.raises(ConfigError):
        run(SimConfig(**{**good.__dict__, "plant": "hovercraft"}))
    with pytest.raises(ConfigError):
        run(SimConfig(**{**good.__dict__, "t_end": -1.0}))
    with pytest.raises(ConfigError):
        run(SimConfig(**{**good.__dict__, "dt_control": 0.007}))
    with pytest.raises(ConfigError):
        run(SimConfig(**{**good.__dict__, "dt_control": 0.01, "delay": 0.015}))
    with pytest.raises(ConfigError):
        run(SimConfig(**{**good.__dict__, "gains": dfl_gains}))
    with pytest.raises(ConfigError):
        run(SimConfig(**{**good.__dict__,
                         "trajectory": StraightLine((0.0, 0.0), (0.0, 0.0))}))


def _synthetic_series(t, err):
    series = TimeSeries()
    for ti, ei in zip(t, err):
        for name in series.columns:
            if name == "t":
                series.columns[name].append(ti)
            elif name == "err_x":
                series.columns[name].append(ei)
            elif name == "x_icr":
                series.columns[name].append(math.nan)
            else:
                series.columns[name].append(0.0)
    return series


def test_metrics_zero_error():
    t = [i * 0.005 for i in range(2001)]
    metrics = compute_metrics(_synthetic_series(t, [0.0] * len(t)), 2.0)
    assert metrics == Metrics(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, False)


def test_metrics_exponential_envelope():
    t = [i * 0.005 for i in range(2001)]
    metrics = compute_metrics(_synthetic_series(t, [math.exp(-ti) for ti in t]), 2.0)
    assert metrics.rise_time == pytest.approx(math.log(10.0), abs=0.01)
    assert metrics.decay_ratio == 0.0
    assert metrics.max_error == 1.0
    assert metrics.max_peak == pytest.approx(0.1, abs=0.01)


def test_metrics_damped_oscillation():
    # analytic peak-ratio oracle: successive maxima of exp(-t)|sin 5t| are
    # a factor exp(-pi/5) apart
    t = [i * 0.005 for i in range(2001)]
    err = [math.exp(-ti) * abs(math.sin(5.0 * ti)) for ti in t]
    metrics = compute_metrics(_synthetic_series(t, err), 2.0)
    assert metrics.decay_ratio == pytest.approx(math.exp(-math.pi / 5.0), abs=5e-3)


def test_metrics_empty_series():
    with pytest.raises(EmptySeries):
        compute_metrics(TimeSeries(), 1.0)


def test_metrics_icr_violations():
    t = [i * 0.005 for i in range(401)]
    series = _synthetic_series(t, [0.0] * len(t))
    series.icr_bounds = (-0.55, 0.37)
    icr = series.columns["x_icr"]
    for i in range(len(icr)):
        icr[i] = 0.18 if i % 4 else 0.9  # every 4th step outside [-b, a]
    metrics = compute_metrics(series, 1.0)
    assert metrics.icr_violation_fraction == pytest.approx(101 / 401, rel=1e-12)
