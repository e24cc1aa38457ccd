#!/usr/bin/env python3
"""
Real period of an elliptic curve.

With y1 = 2y + a1 x + a3 the curve becomes y1^2 = f(x) = 4x^3 + b2 x^2 + 2 b4 x + b6
and the invariant differential is dx / y1. Over the unbounded component
x >= e1 (e1 the largest real root of f) the substitution x = e1 + u^2 removes
the branch point singularity, a rescaling u = C^(1/4) v turns the integrand into
1 / sqrt(v^4 + beta v^2 + 1), and the symmetry v -> 1/v folds [0, inf) onto [0, 1].

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
from fractions import Fraction

import numpy as np
from mpmath.ctx_mp import MPContext
from mpmath import NoConvergence
from scipy import integrate

from bsdlab.ec_core import SingularCurveError, WeierstrassCurve, invariants
from bsdlab.errors import NumericError

ROOT_TIE_TOL = 1e-12
QUAD_LIMIT = 200
MIN_QUAD_TOL = 1e-13

log = logging.getLogger(__name__)


class PrecisionError(NumericError):
    """Numerical routine did not reach the requested accuracy"""


def _mpf(ctx: MPContext, value: int | Fraction):
    value = Fraction(value)
    return ctx.mpf(value.numerator) / value.denominator


def _branch_points(curve: WeierstrassCurve) -> tuple[MPContext, list, int]:
    """high precision real roots of 4x^3 + b2 x^2 + 2 b4 x + b6 and the component count"""
    inv = invariants(curve)
    if inv.delta == 0:
        raise SingularCurveError(f"curve {curve} is singular")

    ctx = MPContext()
    ctx.dps = 40 + max(len(str(abs(Fraction(b).numerator))) for b in (inv.b2, inv.b4, inv.b6))
    b2, b4, b6 = (_mpf(ctx, b) for b in (inv.b2, inv.b4, inv.b6))
    try:
        roots = ctx.polyroots([4, b2, 2 * b4, b6], maxsteps=200, extraprec=2 * ctx.prec)
    except NoConvergence as err:
        raise PrecisionError(f"root finding for {curve} did not converge") from err

    components = 2 if inv.delta > 0 else 1
    n_real = 3 if components == 2 else 1
    by_imag = sorted(roots, key=lambda z: abs(ctx.im(z)))
    reals = sorted(ctx.re(z) for z in by_imag[:n_real])

    scale = max(1, *(abs(r) for r in reals))
    for lo, hi in zip(reals, reals[1:]):
        if hi - lo < ROOT_TIE_TOL * scale:
            raise SingularCurveError(f"cubic of {curve} has a double root near {float(lo)}")
    return ctx, reals, components


def real_roots(curve: WeierstrassCurve) -> list[float]:
    """real roots of 4x^3 + b2 x^2 + 2 b4 x + b6, ascending"""
    _, reals, _ = _branch_points(curve)
    return [float(r) for r in reals]


def real_period(curve: WeierstrassCurve, tol: float = 1e-10) -> float:
    """integral of |dx / (2y + a1 x + a3)| over the real points"""
    if tol <= 0:
        raise ValueError("tol must be positive")
    ctx, reals, components = _branch_points(curve)
    inv = invariants(curve)
    b2, b4 = _mpf(ctx, inv.b2), _mpf(ctx, inv.b4)
    e1 = reals[-1]

    B = 3 * e1 + b2 / 4
    C = 3 * e1 * e1 + b2 * e1 / 2 + b4 / 2  # f'(e1) / 4
    if C <= 0:
        raise SingularCurveError(f"cubic of {curve} has a double root near {float(e1)}")
    beta = float(B / ctx.sqrt(C))

    rel = max(tol, MIN_QUAD_TOL)
    value, abserr = integrate.quad(
        lambda v: 1.0 / np.sqrt(v**4 + beta * v * v + 1.0),
        0.0,
        1.0,
        epsabs=0.0,
        epsrel=rel,
        limit=QUAD_LIMIT,
    )
    if not np.isfinite(value) or abserr > rel * abs(value):
        raise PrecisionError(f"period quadrature for {curve} stopped at error {abserr:.3g}")

    omega = 4 * float(C ** ctx.mpf(-0.25)) * value * components
    log.debug(f"period of {curve}: {omega} ({components} component(s))")
    return omega
