"""Closed-form predictions: Luttinger parameter, exponents, c_eff and the dilogarithm."""

import math

from config import POLE_TOL
from errors import DomainError, PoleError

PI2_6 = math.pi ** 2 / 6
_SERIES_TERMS = 120


def luttinger_k(delta: float) -> float:
    """K = pi / (2 (pi - arccos delta)) of the XXZ chain; K = 1 at the free point."""
    if not -1.0 < delta < 1.0:
        raise DomainError(f"Luttinger formula needs |delta| < 1, got {delta}")
    return math.pi / (2.0 * (math.pi - math.acos(delta)))


def power_law_exponent(k: float) -> float:
    """Decay power 2/K - 2 of the subleading entropy term in the K < 1 phase."""
    if not 0.0 < k < 1.0:
        raise DomainError(f"power law applies for 0 < K < 1, got {k}")
    return 2.0 / k - 2.0


def f_of_k(k: float) -> float:
    """Prefactor f(K) of the x^(2 - 2/K) correction to the area-law entropy."""
    if not 0.0 < k < 1.0:
        raise DomainError(f"f(K) is defined for 0 < K < 1, got {k}")
    r = 1.0 / math.sqrt(k)
    if abs(r - round(r)) < POLE_TOL:
        raise PoleError(f"cot(pi/sqrt(K)) has a pole at K = {k} (1/sqrt(K) = {round(r)})")
    prefactor = 1.0 / (1.0 - 2.0 / k) - 1.0 / (2.0 - 2.0 / k)
    return prefactor * (math.pi * r / math.tan(math.pi * r) - 1.0)


def _dilog_series(z: float) -> float:
    total = 0.0
    power = 1.0
    for n in range(1, _SERIES_TERMS):
        power *= z
        term = power / (n * n)
        total += term
        if abs(term) < 1e-18:
            break
    return total


def dilog(z: float) -> float:
    """Li2(z) on [-1, 1]: power series for |z| <= 1/2, reflection above, Landen below."""
    z = float(z)
    if not -1.0 <= z <= 1.0:
        raise DomainError(f"dilog is implemented on [-1, 1], got {z}")
    if z == 1.0:
        return PI2_6
    if z > 0.5:
        return PI2_6 - math.log(z) * math.log1p(-z) - _dilog_series(1.0 - z)
    if z < -0.5:
        return -_dilog_series(z / (z - 1.0)) - 0.5 * math.log1p(-z) ** 2
    return _dilog_series(z)


def ceff_parameter(w: float, variant: str = "staggered") -> float:
    """s = 1/cosh(2W) for the staggered measurement, 1/cosh(W) for odd sites only."""
    if variant == "staggered":
        arg = 2.0 * w
    elif variant == "odd_sites":
        arg = w
    else:
        raise DomainError(f"unknown c_eff variant {variant!r}")
    if arg > 700.0:
        return 0.0
    return 1.0 / math.cosh(arg)


def c_eff_theory(w: float, variant: str = "staggered") -> float:
    """Effective central charge after a weak measurement of strength W at K = 1."""
    if w < 0:
        raise DomainError(f"measurement strength must be >= 0, got {w}")
    s = ceff_parameter(w, variant)
    if s == 0.0:
        return 0.0
    eps = 1.0 - s
    if eps < 1e-8:
        # bracket -> -pi^2/6 + (pi^2/4) eps + O(eps^2 log eps)
        return 1.0 - 1.5 * eps
    bracket = ((1 + s) * math.log1p(s) + (1 - s) * math.log1p(-s)) * math.log(s)
    bracket += (1 + s) * dilog(-s) + (1 - s) * dilog(s)
    return min(1.0, max(0.0, -6.0 / math.pi ** 2 * bracket))
