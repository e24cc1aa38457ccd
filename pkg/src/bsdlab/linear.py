#!/usr/bin/env python3
"""
Linear baselines: OLS with inference statistics, multinomial logistic
regression and constant (dummy) predictors.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy import linalg, special
from sklearn.dummy import DummyClassifier, DummyRegressor

from bsdlab.errors import ConfigError, DataError, NumericError

COLLINEAR_RTOL = 1e-10
RIDGE = 1e-6
GRAD_TOL = 1e-8
MAX_ITER = 200
ARMIJO_C = 1e-4
MIN_STEP = 1e-12
CONFIDENCE = 0.95

log = logging.getLogger(__name__)


class RankDeficientError(NumericError):
    """design matrix has linearly dependent columns"""

    def __init__(self, column: str, depends_on: Sequence[str]) -> None:
        self.column = column
        self.depends_on = tuple(depends_on)
        super().__init__(f"column {column!r} is collinear with {', '.join(self.depends_on) or 'nothing'}")


class ConvergenceError(NumericError):
    """iteration budget exhausted"""

    def __init__(self, iterations: int, grad_norm: float) -> None:
        self.iterations = iterations
        self.grad_norm = grad_norm
        super().__init__(f"no convergence after {iterations} iterations, gradient norm {grad_norm:.3e}")


class SingularHessianError(NumericError):
    """Newton system not positive definite"""

    def __init__(self, iteration: int, reason: str) -> None:
        self.iteration = iteration
        super().__init__(f"Newton step {iteration} failed: {reason}")


class SingleClassError(DataError):
    """classification target holds one class only"""


# ----------------------------ordinary least squares----------------------------


class Coefficient(NamedTuple):
    name: str
    coef: float
    std_err: float
    t: float
    p_value: float
    ci_low: float
    ci_high: float


@dataclass(frozen=True)
class OLSResult:
    coefficients: tuple[Coefficient, ...]  # intercept first
    r2: float
    r2_adj: float
    f_stat: float
    f_pvalue: float
    n: int
    df_resid: int
    residual_zero: bool

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.coefficients)

    @property
    def params(self) -> np.ndarray:
        return np.array([c.coef for c in self.coefficients])

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        beta = self.params
        return beta[0] + X @ beta[1:]

    def model_stats(self) -> dict[str, float]:
        return {"r2": self.r2, "r2_adj": self.r2_adj, "f_stat": self.f_stat, "f_pvalue": self.f_pvalue}


def _check_rank(design: np.ndarray, names: Sequence[str]) -> None:
    """raise on the first column spanned by the columns before it"""
    kept: list[int] = []
    for j in range(design.shape[1]):
        col = design[:, j]
        scale = float(np.linalg.norm(col))
        if kept:
            basis = design[:, kept]
            coef, *_ = np.linalg.lstsq(basis, col, rcond=None)
            resid = float(np.linalg.norm(col - basis @ coef))
        else:
            coef, resid = np.zeros(0), scale
        if resid <= COLLINEAR_RTOL * max(scale, 1.0):
            depends = [names[kept[i]] for i in np.flatnonzero(np.abs(coef) > COLLINEAR_RTOL)]
            raise RankDeficientError(names[j], depends)
        kept.append(j)


def ols_fit(X: np.ndarray, y: np.ndarray, names: Sequence[str] | None = None) -> OLSResult:
    """least squares with intercept via QR, plus t/F inference"""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y, dtype=float).ravel()
    n, m = X.shape
    if y.size != n:
        raise ConfigError(f"X has {n} rows, y has {y.size}")
    if names is None:
        names = [f"x{j + 1}" for j in range(m)]
    if len(names) != m:
        raise ConfigError(f"{len(names)} names for {m} columns")
    if n <= m + 1:
        raise DataError(f"need more than {m + 1} rows for {m} features, got {n}")

    all_names = ["const", *names]
    design = np.column_stack([np.ones(n), X])
    _check_rank(design, all_names)

    q, r = np.linalg.qr(design)
    beta = linalg.solve_triangular(r, q.T @ y)
    resid = y - design @ beta
    ssr = float(resid @ resid)
    sst = float(np.sum((y - y.mean()) ** 2))
    p = m + 1
    df_resid = n - p
    residual_zero = ssr <= 1e-24 * max(float(y @ y), 1.0)
    if residual_zero:
        ssr = 0.0

    sigma2 = ssr / df_resid
    r_inv = linalg.solve_triangular(r, np.eye(p))
    std_err = np.sqrt(sigma2 * np.sum(r_inv**2, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(std_err > 0, beta / np.where(std_err > 0, std_err, 1.0), np.sign(beta) * np.inf)
    p_values = 2 * special.stdtr(df_resid, -np.abs(t))
    half = special.stdtrit(df_resid, 0.5 + CONFIDENCE / 2) * std_err

    if sst > 0:
        r2 = 1 - ssr / sst
        r2_adj = 1 - (1 - r2) * (n - 1) / df_resid
    else:
        r2 = r2_adj = 0.0

    if m == 0 or sst == 0:
        f_stat, f_pvalue = math.nan, math.nan
    elif ssr == 0:
        f_stat, f_pvalue = math.inf, 0.0
    else:
        f_stat = ((sst - ssr) / m) / (ssr / df_resid)
        f_pvalue = float(special.fdtrc(m, df_resid, f_stat))

    coefs = tuple(
        Coefficient(name, float(b), float(se), float(tv), float(pv), float(b - h), float(b + h))
        for name, b, se, tv, pv, h in zip(all_names, beta, std_err, t, p_values, half)
    )
    log.debug(f"ols n={n} m={m} r2={r2:.4f}")
    return OLSResult(coefs, float(r2), float(r2_adj), float(f_stat), float(f_pvalue), n, df_resid, residual_zero)


# ----------------------------logistic regression----------------------------


@dataclass
class LogisticModel:
    classes: np.ndarray
    mean: np.ndarray
    scale: np.ndarray
    weights: np.ndarray  # (1 + m) x K on z-scored inputs, intercept row first
    iterations: int
    grad_norm: float

    def decision(self, X: np.ndarray) -> np.ndarray:
        Z = (np.atleast_2d(np.asarray(X, dtype=float)) - self.mean) / self.scale
        return self.weights[0] + Z @ self.weights[1:]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return special.softmax(self.decision(X), axis=1)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.classes[np.argmax(self.decision(X), axis=1)]


def _zscore(X: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    return (X - mean) / scale, mean, scale


def _objective(W: np.ndarray, A: np.ndarray, Y: np.ndarray) -> float:
    logits = A @ W
    ll = np.sum(Y * logits) - np.sum(special.logsumexp(logits, axis=1))
    return float(-ll / A.shape[0] + 0.5 * RIDGE * np.sum(W * W))


def _grad_hess(W: np.ndarray, A: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n, d = A.shape
    k = W.shape[1]
    P = special.softmax(A @ W, axis=1)
    grad = A.T @ (P - Y) / n + RIDGE * W
    hess = np.zeros((d * k, d * k))
    for a in range(k):
        for b in range(a, k):
            w = P[:, a] * ((a == b) - P[:, b])
            block = (A * w[:, None]).T @ A / n
            hess[a * d : (a + 1) * d, b * d : (b + 1) * d] = block
            hess[b * d : (b + 1) * d, a * d : (a + 1) * d] = block.T
    hess += RIDGE * np.eye(d * k)
    return grad, hess


def logistic_fit(
    X: np.ndarray,
    y: np.ndarray,
    classes: Sequence[int] | None = None,
    max_iter: int = MAX_ITER,
    tol: float = GRAD_TOL,
) -> LogisticModel:
    """multinomial logistic regression, Newton steps with Armijo backtracking"""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    y = np.asarray(y).ravel()
    present = np.unique(y)
    if present.size < 2:
        raise SingleClassError(f"need at least two classes, got {present.tolist()}")
    labels = np.asarray(sorted(set(present.tolist()) | set(classes or ())))

    Z, mean, scale = _zscore(X)
    A = np.column_stack([np.ones(len(Z)), Z])
    Y = (y[:, None] == labels[None, :]).astype(float)
    d, k = A.shape[1], labels.size
    W = np.zeros((d, k))

    f = _objective(W, A, Y)
    grad_norm = math.inf
    for it in range(1, max_iter + 1):
        grad, hess = _grad_hess(W, A, Y)
        g = grad.T.ravel()  # class-major, matching the Hessian blocks
        grad_norm = float(np.linalg.norm(g))
        if grad_norm < tol:
            log.debug(f"logistic converged in {it - 1} iterations")
            return LogisticModel(labels, mean, scale, W, it - 1, grad_norm)
        try:
            step = linalg.solve(hess, g, assume_a="pos")
        except np.linalg.LinAlgError as err:
            raise SingularHessianError(it, str(err)) from err
        direction = step.reshape(k, d).T
        slope = float(g @ step)
        t = 1.0
        while t >= MIN_STEP:
            candidate = W - t * direction
            f_new = _objective(candidate, A, Y)
            if f_new <= f - ARMIJO_C * t * slope:
                break
            t *= 0.5
        else:
            # no decrease possible at float resolution
            break
        W, f = candidate, f_new

    grad, _ = _grad_hess(W, A, Y)
    grad_norm = float(np.linalg.norm(grad))
    if grad_norm < tol:
        return LogisticModel(labels, mean, scale, W, max_iter, grad_norm)
    raise ConvergenceError(max_iter, grad_norm)


# ----------------------------dummies----------------------------


def dummy_regressor() -> DummyRegressor:
    """predicts the training mean"""
    return DummyRegressor(strategy="mean")


def dummy_classifier() -> DummyClassifier:
    """predicts the most frequent training class, smallest label on ties"""
    return DummyClassifier(strategy="most_frequent")
