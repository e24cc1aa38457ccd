#!/usr/bin/env python3
"""
Maximum likelihood fits and AIC model selection.

The scaled Beta family K (x/s)^(a-1) (1 - x/s)^(b-1) on [0, s] is fitted with
a multi-start Nelder-Mead search over log-transformed parameters. The other
families go through `scipy.stats` fitting; location is fixed at 0 for
families living on the positive half line.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np
from scipy import optimize, special, stats

from bsdlab.errors import ConfigError, NumericError
from bsdlab.utils import parallel_map, rng_for

BETA_RESTARTS = 50
BETA_FATOL = 1e-8
BETA_XATOL = 1e-8
BETA_MAXITER = 4000
SUPPORT_MARGIN = 1e-9

log = logging.getLogger(__name__)


class DegenerateFitError(NumericError):
    """Samples carry no spread to fit"""


class FitResult(NamedTuple):
    family: str
    params: tuple[float, ...]  # shapes first, scale last
    loglik: float
    aic: float
    n: int
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


def aic(loglik: float, k: int) -> float:
    return 2 * k - 2 * loglik


# ----------------------------scaled Beta----------------------------


def _beta_loglik(theta: np.ndarray, x: np.ndarray, xmax: float) -> tuple[float, float, float, float]:
    a, b = math.exp(theta[0]), math.exp(theta[1])
    s = xmax * (1 + SUPPORT_MARGIN + math.exp(theta[2]))
    y = x / s
    ll = (
        (a - 1) * np.log(y).sum()
        + (b - 1) * np.log1p(-y).sum()
        - x.size * (special.betaln(a, b) + math.log(s))
    )
    return float(ll), a, b, s


def _moment_start(x: np.ndarray, xmax: float) -> np.ndarray:
    s0 = 1.1 * xmax
    y = x / s0
    mu, var = y.mean(), y.var()
    common = mu * (1 - mu) / var - 1 if var > 0 else -1
    a0, b0 = (mu * common, (1 - mu) * common) if common > 0 else (1.0, 1.0)
    return np.array([math.log(a0), math.log(b0), math.log(s0 / xmax - 1 - SUPPORT_MARGIN)])


def _check_samples(samples: Iterable[float], positive: bool) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateFitError("no samples to fit")
    if not np.all(np.isfinite(x)):
        raise DegenerateFitError("samples contain non-finite values")
    if positive and np.any(x <= 0):
        raise DegenerateFitError("samples must be positive")
    if np.ptp(x) == 0:
        raise DegenerateFitError(f"all {x.size} samples equal {x[0]}")
    return x


def fit_beta_scaled(
    samples: Iterable[float], restarts: int = BETA_RESTARTS, seed: int = 0
) -> FitResult:
    """MLE of (a, b, s) for the Beta family scaled to [0, s], s >= max(samples)"""
    x = _check_samples(samples, positive=True)
    xmax = float(x.max())

    def objective(theta: np.ndarray) -> float:
        ll = _beta_loglik(theta, x, xmax)[0]
        return -ll if math.isfinite(ll) else math.inf

    start = _moment_start(x, xmax)
    rng = rng_for(seed, 0)
    starts = [start] + [start + rng.normal(0.0, 0.5, size=3) for _ in range(max(restarts, 1) - 1)]

    def run(theta0: np.ndarray) -> optimize.OptimizeResult:
        return optimize.minimize(
            objective,
            theta0,
            method="Nelder-Mead",
            options={"xatol": BETA_XATOL, "fatol": BETA_FATOL, "maxiter": BETA_MAXITER},
        )

    results = parallel_map(run, starts)
    best = min(results, key=lambda r: (r.fun, tuple(r.x)))
    if not math.isfinite(best.fun):
        raise NumericError("scaled Beta fit found no finite likelihood")

    ll, a, b, s = _beta_loglik(best.x, x, xmax)
    log.debug(f"scaled beta fit: a={a:.4g} b={b:.4g} s={s:.4g} ll={ll:.6g} ({len(starts)} starts)")
    return FitResult("beta", (a, b, s), ll, aic(ll, 3), int(x.size))


# ----------------------------registry----------------------------


@dataclass(frozen=True)
class Family:
    """a scipy.stats family with fixed arguments"""

    dist: Any
    fixed: dict[str, float] = field(default_factory=dict)
    positive: bool = False
    note: str = ""

    def n_free(self) -> int:
        return self.dist.numargs + 2 - len(self.fixed)

    def fit(self, x: np.ndarray) -> tuple[tuple[float, ...], float]:
        full = self.dist.fit(x, **self.fixed)
        ll = float(np.sum(self.dist.logpdf(x, *full)))
        *shapes, loc, scale = full
        free = list(shapes)
        if "floc" not in self.fixed:
            free.append(loc)
        free.append(scale)
        return tuple(float(v) for v in free), ll


FAMILIES: dict[str, Family | None] = {
    "beta": None,  # fit_beta_scaled
    "exponweib": Family(stats.exponweib, {"floc": 0}, True, "shapes (a, c), loc 0, scale"),
    "johnsonsb": Family(stats.johnsonsb, {"floc": 0}, True, "shapes (gamma, delta), xi 0, lambda"),
    "gamma": Family(stats.gamma, {"floc": 0}, True, "shape a, loc 0, scale"),
    "weibull": Family(stats.weibull_min, {"floc": 0}, True, "shape c, loc 0, scale"),
    "lognorm": Family(stats.lognorm, {"floc": 0}, True, "shape s, loc 0, scale"),
    "norm": Family(stats.norm, {}, False, "loc, scale"),
    "expon": Family(stats.expon, {"floc": 0}, True, "loc 0, scale"),
}
FAMILY_NOTES = {"beta": "shapes (a, b), support [0, scale]"} | {
    name: fam.note for name, fam in FAMILIES.items() if fam is not None
}
DEFAULT_FAMILIES = tuple(FAMILIES)


def register_family(name: str, family: Family) -> None:
    FAMILIES[name] = family
    FAMILY_NOTES[name] = family.note


def fit_family(
    name: str, samples: Iterable[float], restarts: int = BETA_RESTARTS, seed: int = 0
) -> FitResult:
    if name not in FAMILIES:
        raise ConfigError(f"unknown family {name!r}, known: {', '.join(FAMILIES)}")
    if name == "beta":
        return fit_beta_scaled(samples, restarts, seed)

    family = FAMILIES[name]
    assert family is not None
    x = _check_samples(samples, positive=family.positive)
    with np.errstate(all="ignore"):
        params, ll = family.fit(x)
    if not math.isfinite(ll):
        raise NumericError(f"{name} fit has non-finite log-likelihood")
    return FitResult(name, params, ll, aic(ll, family.n_free()), int(x.size))


def fit_select_aic(
    samples: Iterable[float],
    families: Sequence[str] = DEFAULT_FAMILIES,
    restarts: int = BETA_RESTARTS,
    seed: int = 0,
) -> list[FitResult]:
    """fit every family, ranked by ascending AIC; failed fits rank last"""
    x = np.asarray(samples, dtype=float).ravel()
    unknown = [f for f in families if f not in FAMILIES]
    if unknown:
        raise ConfigError(f"unknown families {unknown}, known: {', '.join(FAMILIES)}")

    def attempt(name: str) -> FitResult:
        try:
            return fit_family(name, x, restarts, seed)
        except Exception as err:  # pylint: disable=broad-except
            log.warning(f"{name} fit failed: {err}")
            return FitResult(name, (), -math.inf, math.inf, int(x.size), str(err))

    results = parallel_map(attempt, families)
    return sorted(results, key=lambda r: (r.aic, r.family))


def pdf_points(result: FitResult, xs: np.ndarray) -> np.ndarray:
    """density of a fitted family on a grid, for plot data"""
    if not result.ok:
        raise ConfigError(f"{result.family} fit failed, no density")
    if result.family == "beta":
        a, b, s = result.params
        return stats.beta.pdf(xs, a, b, loc=0, scale=s)
    family = FAMILIES[result.family]
    assert family is not None
    *shapes, scale = result.params
    loc = family.fixed.get("floc")
    if loc is None:
        *shapes, loc = shapes
    return family.dist.pdf(xs, *shapes, loc=loc, scale=scale)
