"""Pole-placement gain synthesis for the two linearized tracking loops.

Around the moving equilibrium the closed loop splits into a longitudinal
2x2 subsystem in (position error, velocity error) and a lateral 3x3
subsystem in (lateral error, heading error, yaw-rate error) whose
coefficients scale with the reference speed. Both loops are tuned by
assigning negative real poles; feasibility and Hurwitz checks guard the
resulting gains. Eigenvalues of the small companion systems are computed
from closed-form quadratic/cubic root formulas, so the routines stay
deterministic and dependency-free.
"""

from __future__ import annotations

import cmath
import math

Matrix2 = tuple[tuple[float, float], tuple[float, float]]
Matrix3 = tuple[tuple[float, float, float], ...]


class InfeasibleK1(Exception):
    """k1 not compatible with the requested longitudinal poles."""


class InfeasibleGains(Exception):
    """Requested lateral poles produce a non-positive gain."""


class UnsupportedDegree(Exception):
    """Polynomial degree outside the supported range (1..3)."""


def tune_longitudinal(poles: tuple[float, float], k1: float) -> tuple[float, float]:
    """Gains (k4, k6) placing the longitudinal poles at the requested values.

    Requires two strictly negative real poles and 0 < k1 < -max(poles);
    then k6 = -l1 - l2 - k1 and k4 = (k1 + l1)(k1 + l2) are both positive
    and the matrix [[-k1, 1], [-k4, -k6]] has exactly the requested
    eigenvalues.
    """
    l1, l2 = poles
    if not (l1 < 0.0 and l2 < 0.0):
        raise InfeasibleK1(f"poles must be strictly negative, got {poles!r}")
    if not k1 > 0.0:
        raise InfeasibleK1(f"k1 must be strictly positive, got {k1!r}")
    if not k1 < -max(l1, l2):
        raise InfeasibleK1(
            f"k1 < -max(poles) violated: k1={k1!r}, -max(poles)={-max(l1, l2)!r}")
    k6 = -l1 - l2 - k1
    k4 = (k1 + l1) * (k1 + l2)
    return (k4, k6)


def tune_lateral(k2: float, poles: tuple[float, float, float]) -> tuple[float, float, float]:
    """Scale-free lateral gains (kappa3, kappa5, kappa7) for the given poles.

    poles are the scale-free pole locations of the lateral loop at unit
    reference speed. The relations follow from matching the coefficients
    of the factorized characteristic polynomial; every output must come
    out strictly positive, otherwise the request is infeasible.
    """
    if not k2 > 0.0:
        raise InfeasibleGains(f"k2 must be strictly positive, got {k2!r}")
    l1, l2, l3 = poles
    if not (l1 < 0.0 and l2 < 0.0 and l3 < 0.0):
        raise InfeasibleGains(f"poles must be strictly negative, got {poles!r}")
    kappa7 = -(l1 * l2 * l3) / k2
    kappa3 = -l1 - l2 - l3 - kappa7
    kappa5 = k2 * (l1 * l2 + l1 * l3 + l2 * l3 - kappa3 * kappa7 - k2)
    for name, value in (("kappa3", kappa3), ("kappa5", kappa5), ("kappa7", kappa7)):
        if not value > 0.0:
            raise InfeasibleGains(f"{name} = {value!r} is not strictly positive")
    return (kappa3, kappa5, kappa7)


def feasibility_check(k2: float, lambda1: float, lambda3: float) -> bool:
    """Sufficient feasibility condition for a repeated pair lambda1 = lambda2.

    True iff k2 < lambda1^2 and lambda3 > 2*lambda1*k2/(lambda1^2 - k2),
    which guarantees tune_lateral yields strictly positive gains.
    """
    if not k2 < lambda1 * lambda1:
        return False
    return lambda3 > 2.0 * lambda1 * k2 / (lambda1 * lambda1 - k2)


def hurwitz_check(coefficients: tuple[float, ...]) -> bool:
    """Routh-Hurwitz test for a monic real polynomial of degree 1 to 3.

    coefficients are listed highest power first and must start with 1.
    Degree 1 and 2 reduce to positivity of the non-leading coefficients;
    degree 3 (s^3 + a2 s^2 + a1 s + a0) additionally needs a2*a1 > a0.
    """
    degree = len(coefficients) - 1
    if degree < 1 or degree > 3:
        raise UnsupportedDegree(f"degree {degree} not supported")
    if coefficients[0] != 1.0:
        raise ValueError("polynomial must be monic")
    if any(c <= 0.0 for c in coefficients[1:]):
        return False
    if degree == 3:
        _, a2, a1, a0 = coefficients
        return a2 * a1 > a0
    return True


def gain_product_condition(k1: float, k4: float, k6: float) -> bool:
    """Auxiliary inequality (k1 + k6) * k1 * k6 > k4 on the longitudinal gains.

    Stricter than the Routh-Hurwitz condition for this loop (which holds
    for any positive gains); reported alongside tuning results as an
    advisory check only.
    """
    return (k1 + k6) * k1 * k6 > k4


def longitudinal_matrix(k1: float, k4: float, k6: float) -> Matrix2:
    """Closed-loop matrix of the longitudinal (forward) error subsystem."""
    return ((-k1, 1.0), (-k4, -k6))


def lateral_matrix(k2: float, kappa3: float, kappa5: float, kappa7: float,
                   speed: float) -> Matrix3:
    """Closed-loop matrix of the lateral error subsystem at a reference speed.

    Rows act on (lateral error, heading error, yaw-rate error); the
    speed-scheduled gains k3 = kappa3/speed, k5 = speed^2 kappa5 and
    k7 = speed*kappa7 are substituted in.
    """
    k3 = kappa3 / speed
    k5 = speed * speed * kappa5
    k7 = speed * kappa7
    return ((0.0, speed, 0.0),
            (-k2 * speed, -k3 * speed * speed, 1.0),
            (0.0, -k5 / k2, -k7))


def quadratic_roots(b: float, c: float) -> tuple[complex, complex]:
    """Roots of the monic quadratic s^2 + b s + c."""
    disc = cmath.sqrt(b * b - 4.0 * c)
    return ((-b + disc) / 2.0, (-b - disc) / 2.0)


def cubic_roots(a2: float, a1: float, a0: float) -> tuple[complex, complex, complex]:
    """Roots of the monic cubic s^3 + a2 s^2 + a1 s + a0 (Cardano)."""
    p = a1 - a2 * a2 / 3.0
    q = 2.0 * a2 ** 3 / 27.0 - a2 * a1 / 3.0 + a0
    shift = -a2 / 3.0
    if p == 0.0 and q == 0.0:
        return (complex(shift), complex(shift), complex(shift))
    disc = cmath.sqrt(q * q / 4.0 + p ** 3 / 27.0)
    # Pick the larger-magnitude cube to avoid cancellation in -q/2 +- disc.
    plus, minus = -q / 2.0 + disc, -q / 2.0 - disc
    u_cubed = plus if abs(plus) >= abs(minus) else minus
    u = u_cubed ** (1.0 / 3.0)
    v = -p / (3.0 * u)
    omega = complex(-0.5, math.sqrt(3.0) / 2.0)
    roots = []
    for k in range(3):
        rot = omega ** k
        roots.append(u * rot + v / rot + shift)
    return tuple(roots)


def longitudinal_eigenvalues(k1: float, k4: float, k6: float) -> tuple[complex, complex]:
    """Eigenvalues of the longitudinal closed-loop matrix."""
    return quadratic_roots(k1 + k6, k1 * k6 + k4)


def lateral_eigenvalues(k2: float, kappa3: float, kappa5: float, kappa7: float,
                        speed: float) -> tuple[complex, complex, complex]:
    """Eigenvalues of the lateral closed-loop matrix at a reference speed."""
    a2 = speed * (kappa3 + kappa7)
    a1 = speed * speed * (kappa3 * kappa7 + kappa5 / k2 + k2)
    a0 = speed ** 3 * k2 * kappa7
    return cubic_roots(a2, a1, a0)


def lateral_pole_scaling_report(k2: float, kappa3: float, kappa5: float,
                                kappa7: float, poles: tuple[float, float, float],
                                speed: float) -> dict[str, tuple[float, ...]]:
    """Observed lateral poles at a speed versus the two candidate scalings.

    The coefficient structure of the characteristic polynomial implies the
    poles scale linearly with the reference speed; a quadratic scaling is
    sometimes quoted instead. This helper reports the numerically observed
    eigenvalues (sorted real parts) next to speed*poles and
    speed^2*poles so callers can see which claim holds.
    """
    observed = lateral_eigenvalues(k2, kappa3, kappa5, kappa7, speed)
    obs = tuple(sorted(z.real for z in observed))
    linear = tuple(sorted(speed * p for p in poles))
    quadratic = tuple(sorted(speed * speed * p for p in poles))
    return {
        "observed": obs,
        "linear_scaling": linear,
        "quadratic_scaling": quadratic,
        "residual_linear": tuple(o - c for o, c in zip(obs, linear)),
        "residual_quadratic": tuple(o - c for o, c in zip(obs, quadratic)),
    }
