"""Fixed-step fifth-order Dormand-Prince Runge-Kutta integration.

Only the propagating fifth-order formula is implemented (six function
evaluations per step); there is no embedded error estimate and no step
adaptation, matching a fixed-step ode5-style solver.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

State = tuple[float, ...]

# Dormand-Prince 5(4) tableau, fifth-order weights only.
_A2 = (1 / 5,)
_A3 = (3 / 40, 9 / 40)
_A4 = (44 / 45, -56 / 15, 32 / 9)
_A5 = (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729)
_A6 = (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84)


class NonFiniteState(Exception):
    """Raised when an integration step produces a NaN or infinite component."""


def integrate_step(f: Callable[[State], Sequence[float]], y: State, dt: float) -> State:
    """Advance y by one fixed Dormand-Prince step of size dt.

    f maps a state tuple to its time derivative and is treated as
    autonomous: any control input must already be bound into f (zero-order
    hold over the step). Raises NonFiniteState if the result is not finite.
    """
    if not dt > 0.0:
        raise ValueError(f"dt must be positive, got {dt!r}")
    k1 = f(y)
    k2 = f(tuple(yi + dt * _A2[0] * a for yi, a in zip(y, k1)))
    k3 = f(tuple(yi + dt * (_A3[0] * a + _A3[1] * b)
                 for yi, a, b in zip(y, k1, k2)))
    k4 = f(tuple(yi + dt * (_A4[0] * a + _A4[1] * b + _A4[2] * c)
                 for yi, a, b, c in zip(y, k1, k2, k3)))
    k5 = f(tuple(yi + dt * (_A5[0] * a + _A5[1] * b + _A5[2] * c + _A5[3] * d)
                 for yi, a, b, c, d in zip(y, k1, k2, k3, k4)))
    k6 = f(tuple(yi + dt * (_A6[0] * a + _A6[1] * b + _A6[2] * c + _A6[3] * d + _A6[4] * e)
                 for yi, a, b, c, d, e in zip(y, k1, k2, k3, k4, k5)))
    out = tuple(yi + dt * (_B[0] * a + _B[2] * c + _B[3] * d + _B[4] * e + _B[5] * g)
                for yi, a, c, d, e, g in zip(y, k1, k3, k4, k5, k6))
    for component in out:
        if not math.isfinite(component):
            raise NonFiniteState(f"non-finite state after step: {out!r}")
    return out
