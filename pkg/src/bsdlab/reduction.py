#!/usr/bin/env python3
"""
Reduction mod p: point counts, reduction types and local L-factors.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
from enum import Enum
from fractions import Fraction
from typing import NamedTuple

import numpy as np
from sympy import isprime, primerange

from bsdlab.ec_core import WeierstrassCurve, invariants
from bsdlab.errors import ConfigError, DataError

POINT_COUNT_BOUND = 10_000

log = logging.getLogger(__name__)


class DataInconsistencyError(DataError):
    """Conductor and discriminant disagree at a prime"""

    def __init__(self, p: int, message: str) -> None:
        super().__init__(f"p={p}: {message}")
        self.p = p


class Reduction(str, Enum):
    GOOD = "good"
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"


class PointCount(NamedTuple):
    count: int  # projective points of the reduced equation, infinity included
    reduction: Reduction
    smooth_count: int  # points on the smooth locus (== count for good p)


class LocalFactor(NamedTuple):
    p: int
    reduction: Reduction
    a_p: int

    def euler_polynomial(self) -> tuple[int, int, int]:
        """coefficients (1, -a_p, p) or (1, -a_p, 0) of L_p in T = p^-s"""
        if self.reduction is Reduction.GOOD:
            return (1, -self.a_p, self.p)
        return (1, -self.a_p, 0)


def _check_prime(p: int, bound: int) -> None:
    if p < 2 or not isprime(p):
        raise ConfigError(f"{p} is not prime")
    if p > bound:
        raise ConfigError(f"p={p} is beyond the point count bound {bound}")


def _reduce(value: int | Fraction, p: int) -> int:
    value = Fraction(value)
    if value.denominator % p == 0:
        raise DataInconsistencyError(p, "model is not integral at p")
    return value.numerator * pow(value.denominator, -1, p) % p


def _count_affine(curve: WeierstrassCurve, p: int) -> int:
    a1, a2, a3, a4, a6 = (_reduce(a, p) for a in curve.ainvs)
    xs = np.arange(p, dtype=np.int64)

    if p == 2:
        # no square completion in characteristic 2
        total = 0
        for x in range(2):
            for y in range(2):
                lhs = y * y + a1 * x * y + a3 * y
                rhs = x**3 + a2 * x * x + a4 * x + a6
                total += (lhs - rhs) % 2 == 0
        return total

    # (2y + a1 x + a3)^2 = 4x^3 + b2 x^2 + 2 b4 x + b6
    b2 = (a1 * a1 + 4 * a2) % p
    b4 = (2 * a4 + a1 * a3) % p
    b6 = (a3 * a3 + 4 * a6) % p
    f = (((4 * xs + b2) % p * xs + 2 * b4) % p * xs + b6) % p

    squares = np.zeros(p, dtype=np.int64)
    np.add.at(squares, (xs * xs) % p, 1)  # number of roots of y^2 = v
    return int(squares[f].sum())


def count_points_mod_p(
    curve: WeierstrassCurve, p: int, bound: int = POINT_COUNT_BOUND
) -> PointCount:
    """count points of the reduction mod p and classify the reduction"""
    _check_prime(p, bound)

    count = _count_affine(curve, p) + 1
    inv = invariants(curve)
    if _reduce(inv.delta, p) != 0:
        return PointCount(count, Reduction.GOOD, count)

    # singular reduction: node iff c4 is a unit, cusp otherwise
    reduction = Reduction.MULTIPLICATIVE if _reduce(inv.c4, p) else Reduction.ADDITIVE
    return PointCount(count, reduction, count - 1)


def local_factor(
    curve: WeierstrassCurve, p: int, N: int, bound: int = POINT_COUNT_BOUND
) -> LocalFactor:
    """local factor data at p given the conductor N"""
    _check_prime(p, bound)
    result = count_points_mod_p(curve, p, bound)

    if N % p:
        if result.reduction is not Reduction.GOOD:
            raise DataInconsistencyError(p, f"p does not divide N={N} but divides the discriminant")
        a_p = p + 1 - result.count
        if a_p * a_p > 4 * p:
            raise DataInconsistencyError(p, f"a_p={a_p} violates the Hasse bound")
        return LocalFactor(p, Reduction.GOOD, a_p)

    if result.reduction is Reduction.GOOD:
        raise DataInconsistencyError(p, f"p divides N={N} but not the discriminant")

    # on a minimal model p^2 | N iff p divides c4 as well as the discriminant
    additive = N % (p * p) == 0
    if additive != (result.reduction is Reduction.ADDITIVE):
        exponent = "p^2 divides" if additive else "p exactly divides"
        raise DataInconsistencyError(p, f"{exponent} N={N} but the reduction is {result.reduction.value}")
    if additive:
        return LocalFactor(p, Reduction.ADDITIVE, 0)
    a_p = p - result.smooth_count
    if a_p not in (-1, 1):
        raise DataInconsistencyError(p, f"multiplicative reduction with a_p={a_p}")
    return LocalFactor(p, Reduction.MULTIPLICATIVE, a_p)


def aplist(
    curve: WeierstrassCurve, pmax: int, N: int, bound: int = POINT_COUNT_BOUND
) -> list[LocalFactor]:
    """local factors for all primes p <= pmax"""
    if pmax > bound:
        raise ConfigError(f"pmax={pmax} is beyond the point count bound {bound}")
    factors = [local_factor(curve, int(p), N, bound) for p in primerange(2, pmax + 1)]
    log.debug(f"computed {len(factors)} local factors up to {pmax}")
    return factors

