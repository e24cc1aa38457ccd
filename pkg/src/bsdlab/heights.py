#!/usr/bin/env python3
"""
Canonical heights, the height pairing and the regulator.

The canonical height is the limit of 4^-k h(2^k P). Two evaluators are
provided:

* ``local`` (default) follows the doubling sequence through the homogeneous
  duplication map (A, B) -> (W(A, B), F(A, B)) on x = A/B. The limit splits into
  an archimedean escape-rate series, computed in high precision, and a finite
  series of log gcd(W, F), computed exactly modulo a power of 6*disc. Both series
  converge geometrically, so the number of steps follows from `tol`.
  The estimate is flagged unconverged when the exact modulus would outgrow the
  digit budget or `tol` is below what a float result can resolve.
* ``naive`` iterates exact point doubling and stops when successive estimates
  agree within `tol` or the coordinates outgrow the digit budget.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
import math
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from mpmath.ctx_mp import MPContext

from bsdlab.ec_core import (
    IsogenyChange,
    PointNotOnCurveError,
    RationalPoint,
    WeierstrassCurve,
    add,
    invariants,
    inverse_transform_point,
    naive_height,
    transform,
)

HEIGHT_DIGIT_BUDGET = 100_000
DEFAULT_TOL = 1e-10
MAX_NAIVE_STEPS = 64

log = logging.getLogger(__name__)


class HeightEstimate(NamedTuple):
    value: float
    converged: bool
    steps: int


def _integral_model(
    curve: WeierstrassCurve, P: RationalPoint
) -> tuple[WeierstrassCurve, RationalPoint]:
    if curve.is_integral:
        return curve, P
    m = math.lcm(*(Fraction(a).denominator for a in curve.ainvs))
    change = IsogenyChange(u=Fraction(1, m))
    return transform(curve, change), inverse_transform_point(P, change)


def _local_height(
    curve: WeierstrassCurve, P: RationalPoint, tol: float, digit_budget: int
) -> HeightEstimate:
    inv = invariants(curve)
    b2, b4, b6, b8 = (int(b) for b in (inv.b2, inv.b4, inv.b6, inv.b8))
    delta = int(inv.delta)

    assert P.x is not None
    a0, d0 = P.x.numerator, P.x.denominator

    # bound on |log m_k| and log g_k, fixes the number of terms
    coeff_size = 5 + abs(b2) + 3 * abs(b4) + 3 * abs(b6) + abs(b8)
    bound = 2 * math.log(6 * abs(delta)) + 8 * math.log(coeff_size) + 10
    steps = max(1, math.ceil(math.log(3 * bound / tol, 4)))

    # the finite series works modulo (6 delta)^(2 steps + 2)
    step_digits = 2 * math.log10(6 * abs(delta))
    max_steps = max(1, math.floor(digit_budget / step_digits) - 1)
    if steps > max_steps:
        log.warning(
            f"height of {P} on {curve}: {steps} steps needed for tol {tol:g}, "
            f"digit budget {digit_budget} allows {max_steps}"
        )
        steps = max_steps

    # archimedean escape rate of the normalized duplication map
    ctx = MPContext()
    ctx.dps = max(30, math.ceil(-math.log10(tol)) + 10) + len(str(coeff_size))
    A, B = ctx.mpf(a0), ctx.mpf(d0)
    scale = max(abs(A), abs(B))
    A, B = A / scale, B / scale
    arch = ctx.mpf(0)
    weight = ctx.mpf(1)
    for _ in range(steps):
        A2, B2 = A * A, B * B
        W = A2 * A2 - b4 * A2 * B2 - 2 * b6 * A * B2 * B - b8 * B2 * B2
        F = 4 * A2 * A * B + b2 * A2 * B2 + 2 * b4 * A * B2 * B + b6 * B2 * B2
        m = max(abs(W), abs(F))
        weight /= 4
        arch += weight * ctx.log(m)
        A, B = W / m, F / m

    # finite places: exact gcds, tracked modulo a shrinking power of 6*delta
    modulus = (6 * abs(delta)) ** (2 * steps + 2)
    a, d = a0 % modulus, d0 % modulus
    finite = 0.0
    fweight = 1.0
    for _ in range(steps):
        a2, d2 = a * a, d * d
        W_ = (a2 * a2 - b4 * a2 * d2 - 2 * b6 * a * d2 * d - b8 * d2 * d2) % modulus
        F_ = (4 * a2 * a * d + b2 * a2 * d2 + 2 * b4 * a * d2 * d + b6 * d2 * d2) % modulus
        g = math.gcd(math.gcd(W_, F_), modulus)
        fweight /= 4
        if g > 1:
            finite -= fweight * math.log(g)
        modulus //= g
        a, d = (W_ // g) % modulus, (F_ // g) % modulus

    value = math.log(max(abs(a0), d0)) + float(arch) + finite

    # both series have terms below bound * 4^-k
    tail = bound * 4.0**-steps / 3
    resolution = 8 * math.ulp(abs(value) + bound)
    converged = tail + resolution <= tol
    if not converged:
        log.debug(f"height of {P}: tail {tail:.3g}, float resolution {resolution:.3g}, tol {tol:g}")
    return HeightEstimate(max(value, 0.0), converged, steps)


def _naive_height(
    curve: WeierstrassCurve, P: RationalPoint, tol: float, digit_budget: int
) -> HeightEstimate:
    Q = P
    estimate = naive_height(Q)
    for k in range(1, MAX_NAIVE_STEPS + 1):
        Q = add(curve, Q, Q)
        if Q.is_infinity:
            return HeightEstimate(0.0, True, k)
        assert Q.x is not None
        digits = max(len(str(abs(Q.x.numerator))), len(str(Q.x.denominator)))
        if digits > digit_budget:
            log.warning(
                f"height of {P} on {curve}: digit budget {digit_budget} exceeded "
                f"after {k} doublings, returning best estimate"
            )
            return HeightEstimate(estimate, False, k - 1)
        previous, estimate = estimate, naive_height(Q) / 4**k
        if abs(estimate - previous) < tol:
            return HeightEstimate(estimate, True, k)

    log.warning(f"height of {P} on {curve} did not settle in {MAX_NAIVE_STEPS} doublings")
    return HeightEstimate(estimate, False, MAX_NAIVE_STEPS)


def canonical_height(
    curve: WeierstrassCurve,
    P: RationalPoint,
    tol: float = DEFAULT_TOL,
    method: str = "local",
    digit_budget: int = HEIGHT_DIGIT_BUDGET,
) -> HeightEstimate:
    """canonical height of P, normalized as lim h(x(nP)) / n^2"""
    if tol <= 0:
        raise ValueError("tol must be positive")
    if not curve.contains(P):
        raise PointNotOnCurveError(f"{P} is not on {curve}")
    if P.is_infinity:
        return HeightEstimate(0.0, True, 0)

    if method == "local":
        return _local_height(*_integral_model(curve, P), tol, digit_budget)
    if method == "naive":
        return _naive_height(curve, P, tol, digit_budget)
    raise ValueError(f"unknown height method {method!r}")


def height_pairing(
    curve: WeierstrassCurve,
    P: RationalPoint,
    Q: RationalPoint,
    tol: float = DEFAULT_TOL,
    method: str = "local",
) -> HeightEstimate:
    """<P, Q> = (h(P+Q) - h(P) - h(Q)) / 2"""
    hpq = canonical_height(curve, add(curve, P, Q), tol, method)
    hp = canonical_height(curve, P, tol, method)
    hq = canonical_height(curve, Q, tol, method)
    return HeightEstimate(
        (hpq.value - hp.value - hq.value) / 2,
        hpq.converged and hp.converged and hq.converged,
        max(hpq.steps, hp.steps, hq.steps),
    )


def height_matrix(
    curve: WeierstrassCurve,
    points: Sequence[RationalPoint],
    tol: float = DEFAULT_TOL,
    method: str = "local",
) -> tuple[np.ndarray, bool]:
    """Gram matrix of the height pairing and a joint convergence flag"""
    n = len(points)
    gram = np.zeros((n, n))
    converged = True
    for i in range(n):
        for j in range(i, n):
            if i == j:
                est = canonical_height(curve, points[i], tol, method)
            else:
                est = height_pairing(curve, points[i], points[j], tol, method)
            gram[i, j] = gram[j, i] = est.value
            converged &= est.converged
    return gram, converged


def regulator(
    curve: WeierstrassCurve,
    generators: Sequence[RationalPoint],
    tol: float = DEFAULT_TOL,
    method: str = "local",
) -> HeightEstimate:
    """det of the height pairing matrix, 1 for an empty generator list"""
    if not generators:
        return HeightEstimate(1.0, True, 0)
    gram, converged = height_matrix(curve, generators, tol, method)
    return HeightEstimate(float(np.linalg.det(gram)), converged, len(generators))
