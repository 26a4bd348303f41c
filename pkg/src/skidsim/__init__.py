"""Deterministic skid-steering robot simulation toolkit.

Plant models (full rigid-body dynamics and the constrained reduced
model), trajectory-tracking controllers (backstepping and a
dynamic-feedback-linearization baseline), pole-placement gain tuning,
reference trajectories with analytic derivatives, and a fixed-step
closed-loop simulator with measurement noise and control delay.
"""

__version__ = "0.1.0"

from .controllers import (BacksteppingGains, DegenerateReference, DflGains,
                          DflState, SingularVelocity, backstepping_control,
                          control_point, dfl_control, lyapunov_diagnostics,
                          omega_r, tracking_errors)
from .dynamics import (BodyVelocity, FullState, RobotParams, WheelTorques,
                       atrv2, body_from_inertial, full_dynamics,
                       inertial_from_body, resistive_terms, smooth_sgn,
                       wheel_velocities, x_icr)
from .gains import (InfeasibleGains, InfeasibleK1, UnsupportedDegree,
                    feasibility_check, hurwitz_check, tune_lateral,
                    tune_longitudinal)
from .integrators import NonFiniteState, integrate_step
from .reduced import (ReducedState, SingularInputMap, constraint_residual,
                      n_matrix, reduced_dynamics, torque_from_u)
from .simulator import (ConfigError, EmptySeries, InitialState, Metrics,
                        NoiseSpec, SimConfig, TimeSeries, compute_metrics,
                        gaussian_noise, run)
from .trajectories import (Circle, Lissajous, ReferenceSample, StraightLine,
                           paper_lissajous, validate_assumption1)
