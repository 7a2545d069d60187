"""Closed-form spectral constants shared by the chain and analytics modules."""

from __future__ import annotations

import math


def check_degree(d: int) -> int:
    if int(d) != d or d < 3:
        raise ValueError(f"degree must be an integer >= 3, got {d}")
    return int(d)


def p_of(d: int) -> float:
    return (d - 1) / d


def rho_of(d: int) -> float:
    return 2.0 * math.sqrt(d - 1) / d


def sigma_of(d: int) -> float:
    """Defined for d >= 9 (the inner root hits 0 at d = 9); NaN below."""
    if d < 9:
        return math.nan
    return (3.0 * math.sqrt(d - 1) - math.sqrt(d - 9)) * math.sqrt(d - 1) / (4.0 * d)


def gamma_of(d: int) -> float:
    """Exponential decay base of the return coefficients; branches at d = 10."""
    check_degree(d)
    return rho_of(d) if d <= 10 else sigma_of(d)


def beta_of(d: int) -> float:
    """Polynomial exponent of the return coefficients by regime."""
    check_degree(d)
    if d <= 9:
        return -1.5
    if d == 10:
        return -0.5
    return 0.0


def z_pair(d: int) -> tuple[complex, complex]:
    """Roots z1, z2 = 3/2 -/+ sqrt((9p-8)/(4p)); complex conjugate for d < 9."""
    p = p_of(check_degree(d))
    disc = (9.0 * p - 8.0) / (4.0 * p)
    if disc >= 0.0:
        r = math.sqrt(disc)
        return complex(1.5 - r, 0.0), complex(1.5 + r, 0.0)
    r = math.sqrt(-disc)
    return complex(1.5, -r), complex(1.5, r)


def regime_of(d: int) -> str:
    check_degree(d)
    if d <= 9:
        return "subcritical"
    if d == 10:
        return "critical"
    return "supercritical"
