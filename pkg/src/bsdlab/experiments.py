#!/usr/bin/env python3
"""
Cross-validated prediction experiments on curve records.

An experiment predicts one record quantity from the Weierstrass coefficients
(`coeffs`) or from every other quantity (`mixed`), with boosted trees, a
linear baseline or a dummy, and reports per-fold metrics.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Any, NamedTuple, Protocol, Sequence

import numpy as np

from bsdlab import metrics
from bsdlab.errors import BsdlabError, ConfigError
from bsdlab.gbt import GBTModel, GBTParams
from bsdlab.ingest import DatasetView, SampleSizeError, make_view, sample
from bsdlab.linear import OLSResult, dummy_classifier, dummy_regressor, logistic_fit, ols_fit
from bsdlab.records import AINV_FIELDS, BSD_FIELDS, CurveRecord
from bsdlab.stats import slog
from bsdlab.utils import derive_seed, parallel_map, rng_for

FEATURE_SETS = {
    "coeffs": AINV_FIELDS,
    "mixed": AINV_FIELDS + BSD_FIELDS,
}
CLASS_TARGETS = ("rank", "torsion_order")
REGRESSION_TARGETS = ("conductor", "tamagawa_product", "regulator", "sha_order", "omega")
MODELS = ("gbt", "linear", "logistic", "dummy")
SLOG_FEATURES = ("a4", "a6")
LEARNING_FRACTIONS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8)

log = logging.getLogger(__name__)


class Model(Protocol):
    def fit(self, X: np.ndarray, y: np.ndarray) -> Any: ...

    def predict(self, X: np.ndarray) -> np.ndarray: ...


# ----------------------------folds and features----------------------------


def kfold(n: int, k: int = 5, seed: int = 0) -> list[tuple[np.ndarray, np.ndarray]]:
    """shuffled k-fold split; test folds partition range(n)"""
    if k < 2:
        raise ConfigError(f"k must be >= 2, got {k}")
    if n < k:
        raise SampleSizeError(k, n)
    order = rng_for(seed, n, k).permutation(n)
    tests = np.array_split(order, k)
    return [
        (np.sort(np.concatenate(tests[:i] + tests[i + 1 :])), np.sort(test))
        for i, test in enumerate(tests)
    ]


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    y: np.ndarray
    features: tuple[str, ...]
    target: str
    kind: str  # real | class
    transforms: dict[str, str]
    labels: tuple[str, ...]


def target_kind(target: str) -> str:
    if target in CLASS_TARGETS:
        return "class"
    if target in REGRESSION_TARGETS or target in BSD_FIELDS or target == "rhs":
        return "real"
    raise ConfigError(f"unknown target {target!r}")


def resolve_features(features: str | Sequence[str], target: str) -> tuple[str, ...]:
    if isinstance(features, str):
        if features not in FEATURE_SETS:
            raise ConfigError(f"unknown feature set {features!r}, use one of {tuple(FEATURE_SETS)}")
        names = FEATURE_SETS[features]
    else:
        names = tuple(features)
        if target in names:
            raise ConfigError(f"target {target!r} is also a feature")
    return tuple(n for n in names if n != target)


def feature_matrix(
    records: Sequence[CurveRecord],
    features: str | Sequence[str],
    target: str,
    transform: str = "slog",
) -> FeatureMatrix:
    """records as a numeric design; `transform` applies to a4 and a6 (slog or raw)"""
    if transform not in ("slog", "raw"):
        raise ConfigError(f"transform must be slog or raw, got {transform!r}")
    kind = target_kind(target)
    names = resolve_features(features, target)
    cols = []
    transforms = {}
    for name in names:
        values = np.array([float(r.value(name)) for r in records])
        if transform == "slog" and name in SLOG_FEATURES:
            values = np.asarray(slog(values))
            transforms[name] = "slog"
        cols.append(values)
    X = np.column_stack(cols) if cols else np.empty((len(records), 0))
    y = np.array([r.value(target) for r in records])
    y = y.astype(int) if kind == "class" else y.astype(float)
    if not np.all(np.isfinite(X)) or (kind == "real" and not np.all(np.isfinite(y))):
        raise ConfigError("non-finite feature or target values")
    return FeatureMatrix(X, y, names, target, kind, transforms, tuple(r.label for r in records))


# ----------------------------models----------------------------


class LinearRegressor:
    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearRegressor":
        self.result = ols_fit(X, y)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.result.predict(X)


class LogisticClassifier:
    def fit(self, X: np.ndarray, y: np.ndarray) -> "LogisticClassifier":
        self.model = logistic_fit(X, y)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.model.predict(X)


def make_model(name: str, kind: str, params: GBTParams | None = None) -> Model:
    if name == "gbt":
        return GBTModel(params or GBTParams(), "softmax" if kind == "class" else "squared")
    if name == "dummy":
        return dummy_classifier() if kind == "class" else dummy_regressor()
    if name == "linear" and kind == "real":
        return LinearRegressor()
    if name == "logistic" and kind == "class":
        return LogisticClassifier()
    raise ConfigError(f"model {name!r} does not fit a {kind} target, use one of {MODELS}")


def importances(model: Model, n_features: int) -> np.ndarray:
    """normalized gain importances for trees, zeros for other models"""
    if isinstance(model, GBTModel):
        return model.feature_importances
    return np.zeros(n_features)


# ----------------------------experiments----------------------------


@dataclass(frozen=True)
class ExperimentSpec:
    target: str
    features: str | tuple[str, ...] = "coeffs"
    model: str = "gbt"
    params: GBTParams = field(default_factory=GBTParams)
    k: int = 5
    seed: int = 0
    transform: str = "slog"
    n_sample: int | None = None

    def settings(self) -> dict[str, Any]:
        out = asdict(self)
        out["features"] = self.features if isinstance(self.features, str) else list(self.features)
        return out


class Fold(NamedTuple):
    index: int
    scores: dict[str, float]
    importances: np.ndarray
    predictions: np.ndarray
    dummy_predictions: np.ndarray | None


@dataclass
class ModelReport:
    settings: dict[str, Any]
    kind: str
    features: tuple[str, ...]
    fold_scores: list[dict[str, float]]
    mean: dict[str, float]
    std: dict[str, float]
    importances: dict[str, float]
    labels: tuple[str, ...] = ()
    y_true: np.ndarray = field(default_factory=lambda: np.zeros(0))
    y_pred: np.ndarray = field(default_factory=lambda: np.zeros(0))
    classes: tuple[int, ...] = ()
    confusion: np.ndarray | None = None
    confusion_diff: np.ndarray | None = None

    def to_dict(self) -> dict[str, Any]:
        out: dict[str, Any] = {
            "settings": self.settings,
            "kind": self.kind,
            "features": list(self.features),
            "folds": self.fold_scores,
            "mean": self.mean,
            "std": self.std,
            "importances": self.importances,
        }
        if self.kind == "class":
            out["classes"] = list(self.classes)
            out["confusion"] = self.confusion
            out["confusion_minus_dummy"] = self.confusion_diff
        return out

    def true_vs_predicted(self) -> list[tuple[str, float, float]]:
        """out-of-fold prediction per record"""
        return [(lab, float(t), float(p)) for lab, t, p in zip(self.labels, self.y_true, self.y_pred)]


def _records(data: Sequence[CurveRecord] | DatasetView, n_sample: int | None, seed: int) -> list[CurveRecord]:
    view = data if isinstance(data, DatasetView) else make_view(data)
    if n_sample is None:
        return view.records
    return sample(view, n_sample, seed)


def _scores(kind: str, y: np.ndarray, y_hat: np.ndarray) -> dict[str, float]:
    if kind == "class":
        return metrics.classification_scores(y, y_hat)
    return metrics.regression_scores(y, y_hat)


def _mean_std(fold_scores: Sequence[dict[str, float]]) -> tuple[dict[str, float], dict[str, float]]:
    names = fold_scores[0].keys()
    mean = {m: float(np.mean([f[m] for f in fold_scores])) for m in names}
    std = {m: float(np.std([f[m] for f in fold_scores], ddof=1)) if len(fold_scores) > 1 else 0.0 for m in names}
    return mean, std


def run_experiment(data: Sequence[CurveRecord] | DatasetView, spec: ExperimentSpec) -> ModelReport:
    """k-fold cross validation of one model on one target"""
    if spec.model not in MODELS:
        raise ConfigError(f"unknown model {spec.model!r}, use one of {MODELS}")
    records = _records(data, spec.n_sample, spec.seed)
    fm = feature_matrix(records, spec.features, spec.target, spec.transform)
    folds = kfold(len(fm.y), spec.k, spec.seed)
    log.info(f"{spec.model} on {spec.target} from {list(fm.features)}: {len(fm.y)} rows, {spec.k} folds")

    def run_fold(item: tuple[int, tuple[np.ndarray, np.ndarray]]) -> Fold:
        i, (train, test) = item
        params = GBTParams(**{**asdict(spec.params), "seed": derive_seed(spec.seed, i)})
        model = make_model(spec.model, fm.kind, params)
        model.fit(fm.X[train], fm.y[train])
        pred = model.predict(fm.X[test])
        dummy_pred = None
        if fm.kind == "class":
            dummy = make_model("dummy", fm.kind)
            dummy.fit(fm.X[train], fm.y[train])
            dummy_pred = dummy.predict(fm.X[test])
        return Fold(i, _scores(fm.kind, fm.y[test], pred), importances(model, fm.X.shape[1]), pred, dummy_pred)

    results = parallel_map(run_fold, list(enumerate(folds)))

    y_pred = np.zeros(len(fm.y), dtype=fm.y.dtype)
    dummy_pred = np.zeros(len(fm.y), dtype=fm.y.dtype)
    for (_, test), fold in zip(folds, results):
        y_pred[test] = fold.predictions
        if fold.dummy_predictions is not None:
            dummy_pred[test] = fold.dummy_predictions

    fold_scores = [fold.scores for fold in results]
    mean, std = _mean_std(fold_scores)
    imp = np.mean([fold.importances for fold in results], axis=0)
    if imp.sum() > 0:
        imp = imp / imp.sum()

    report = ModelReport(
        settings={**spec.settings(), "transforms": fm.transforms, "n_rows": len(fm.y)},
        kind=fm.kind,
        features=fm.features,
        fold_scores=fold_scores,
        mean=mean,
        std=std,
        importances=dict(zip(fm.features, (float(v) for v in imp))),
        labels=fm.labels,
        y_true=fm.y,
        y_pred=y_pred,
    )
    if fm.kind == "class":
        classes = np.union1d(np.union1d(fm.y, y_pred), dummy_pred)
        report.classes = tuple(int(c) for c in classes)
        report.confusion = metrics.confusion(fm.y, y_pred, classes)
        report.confusion_diff = report.confusion - metrics.confusion(fm.y, dummy_pred, classes)
    log.info(f"{spec.model} {spec.target}: " + ", ".join(f"{m}={v:.4f}+-{std[m]:.4f}" for m, v in mean.items()))
    return report


# ----------------------------learning curves----------------------------


class CurvePoint(NamedTuple):
    fraction: float
    n_train: int
    metric: str
    mean: float
    std: float
    error: str | None = None


def learning_curve(
    data: Sequence[CurveRecord] | DatasetView,
    spec: ExperimentSpec,
    fractions: Sequence[float] = LEARNING_FRACTIONS,
) -> list[CurvePoint]:
    """metric against training size; sizes are fractions of the whole data

    Test folds stay fixed, training folds are subsampled. MCC for class
    targets, NMAE otherwise. A failing point is reported and skipped.
    """
    bad = [f for f in fractions if not 0 < f < 1]
    if bad:
        raise ConfigError(f"fractions must lie in (0, 1), got {bad}")
    records = _records(data, spec.n_sample, spec.seed)
    fm = feature_matrix(records, spec.features, spec.target, spec.transform)
    folds = kfold(len(fm.y), spec.k, spec.seed)
    metric = "mcc" if fm.kind == "class" else "nmae"

    def point(item: tuple[int, float]) -> CurvePoint:
        p, frac = item
        size = int(round(frac * len(fm.y)))
        values = []
        try:
            for i, (train, test) in enumerate(folds):
                if size > len(train):
                    raise SampleSizeError(size, len(train))
                picked = np.sort(rng_for(spec.seed, p, i).choice(train, size=size, replace=False))
                params = GBTParams(**{**asdict(spec.params), "seed": derive_seed(spec.seed, p, i)})
                model = make_model(spec.model, fm.kind, params)
                model.fit(fm.X[picked], fm.y[picked])
                values.append(_scores(fm.kind, fm.y[test], model.predict(fm.X[test]))[metric])
        except (BsdlabError, ValueError) as err:
            log.warning(f"learning curve point {frac}: {err}")
            return CurvePoint(frac, size, metric, float("nan"), float("nan"), str(err))
        return CurvePoint(frac, size, metric, float(np.mean(values)), float(np.std(values, ddof=1)))

    return parallel_map(point, list(enumerate(fractions)))


# ----------------------------linear tables----------------------------


def ols_table(
    data: Sequence[CurveRecord] | DatasetView,
    target: str,
    features: str | Sequence[str] = "coeffs",
    transform: str = "raw",
    standardize: bool = False,
) -> OLSResult:
    """OLS of a target on the full data; `standardize` z-scores the features"""
    records = _records(data, None, 0)
    fm = feature_matrix(records, features, target, transform)
    X = fm.X
    if standardize:
        scale = X.std(axis=0)
        scale[scale == 0] = 1.0
        X = (X - X.mean(axis=0)) / scale
    return ols_fit(X, fm.y, fm.features)


def hyperplanes(
    data: Sequence[CurveRecord] | DatasetView,
    target: str,
    features: str | Sequence[str] = "mixed",
) -> dict[str, OLSResult]:
    """the same regression in raw and z-scored feature space"""
    return {
        "raw": ols_table(data, target, features, "raw"),
        "zscored": ols_table(data, target, features, "raw", standardize=True),
    }


def hyperplane_equation(result: OLSResult, target: str, digits: int = 4) -> str:
    terms = [f"{result.coefficients[0].coef:.{digits}f}"]
    for c in result.coefficients[1:]:
        sign = "-" if c.coef < 0 else "+"
        terms.append(f"{sign} {abs(c.coef):.{digits}f} {c.name}")
    return f"{target} ~ " + " ".join(terms)
