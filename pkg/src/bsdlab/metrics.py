#!/usr/bin/env python3
"""
Regression and classification metrics.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

from typing import Literal, Sequence

import numpy as np
from sklearn import metrics as skm

from bsdlab.errors import ConfigError, NumericError

REGRESSION_METRICS = ("nmae", "rmse")
CLASSIFICATION_METRICS = ("f1_micro", "f1_macro", "mcc")


class UndefinedRangeError(NumericError):
    """test targets are constant, NMAE has no normalizer"""


def _pair(y: Sequence, y_hat: Sequence) -> tuple[np.ndarray, np.ndarray]:
    y_arr, p_arr = np.asarray(y), np.asarray(y_hat)
    if y_arr.shape != p_arr.shape:
        raise ConfigError(f"length mismatch: {y_arr.shape} vs {p_arr.shape}")
    if y_arr.size == 0:
        raise ConfigError("empty target vector")
    return y_arr, p_arr


def nmae(y: Sequence[float], y_hat: Sequence[float]) -> float:
    """median absolute error over the range of the targets"""
    y_arr, p_arr = _pair(y, y_hat)
    span = float(np.max(y_arr) - np.min(y_arr))
    if span == 0:
        raise UndefinedRangeError(f"all {y_arr.size} targets equal {y_arr[0]}")
    return float(skm.median_absolute_error(y_arr, p_arr)) / span


def rmse(y: Sequence[float], y_hat: Sequence[float]) -> float:
    y_arr, p_arr = _pair(y, y_hat)
    return float(np.sqrt(skm.mean_squared_error(y_arr, p_arr)))


def f1(y: Sequence[int], y_hat: Sequence[int], average: Literal["micro", "macro"] = "macro") -> float:
    """F1 score; macro averages over classes seen in y or y_hat, absent ones count 0"""
    if average not in ("micro", "macro"):
        raise ConfigError(f"average must be micro or macro, got {average!r}")
    y_arr, p_arr = _pair(y, y_hat)
    return float(skm.f1_score(y_arr, p_arr, average=average, zero_division=0))


def mcc(y: Sequence[int], y_hat: Sequence[int]) -> float:
    """multiclass Matthews correlation, 0 when either side is constant"""
    y_arr, p_arr = _pair(y, y_hat)
    if np.unique(y_arr).size < 2 or np.unique(p_arr).size < 2:
        return 0.0
    return float(skm.matthews_corrcoef(y_arr, p_arr))


def confusion(
    y: Sequence[int],
    y_hat: Sequence[int],
    labels: Sequence[int] | None = None,
    normalize: Literal["column", "row"] | None = "column",
) -> np.ndarray:
    """confusion matrix, rows true class and columns predicted class

    Column normalization divides by the number of predictions per class;
    columns with no predictions stay zero.
    """
    y_arr, p_arr = _pair(y, y_hat)
    if labels is None:
        labels = np.union1d(y_arr, p_arr)
    counts = skm.confusion_matrix(y_arr, p_arr, labels=labels).astype(float)
    if normalize is None:
        return counts
    axis = {"column": 0, "row": 1}.get(normalize)
    if axis is None:
        raise ConfigError(f"normalize must be column, row or None, got {normalize!r}")
    totals = counts.sum(axis=axis, keepdims=True)
    return np.divide(counts, totals, out=np.zeros_like(counts), where=totals > 0)


def regression_scores(y: Sequence[float], y_hat: Sequence[float]) -> dict[str, float]:
    return {"nmae": nmae(y, y_hat), "rmse": rmse(y, y_hat)}


def classification_scores(y: Sequence[int], y_hat: Sequence[int]) -> dict[str, float]:
    return {
        "f1_micro": f1(y, y_hat, "micro"),
        "f1_macro": f1(y, y_hat, "macro"),
        "mcc": mcc(y, y_hat),
    }
