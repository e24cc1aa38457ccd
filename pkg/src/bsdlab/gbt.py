#!/usr/bin/env python3
"""
Gradient boosted regression trees.

Second order boosting with exact greedy split search: every feature is sorted
once, a node keeps one sorted index array per feature and a split partitions
those arrays stably. Split gain is

    G_L^2 / (H_L + lambda) + G_R^2 / (H_R + lambda) - G^2 / (H + lambda)

and leaf weights are -G / (H + lambda).

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field
from typing import Literal, NamedTuple, Sequence

import numpy as np
from scipy import special

from bsdlab.errors import ConfigError
from bsdlab.utils import parallel_map, rng_for

PARALLEL_MIN_ROWS = 20_000
HESS_FLOOR = 1e-16

Loss = Literal["squared", "softmax"]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GBTParams:
    n_trees: int = 200
    max_depth: int = 6
    learning_rate: float = 0.1
    min_child_weight: float = 1.0
    subsample: float = 1.0
    reg_lambda: float = 1.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ConfigError(f"n_trees must be >= 1, got {self.n_trees}")
        if not 0 <= self.max_depth <= 32:
            raise ConfigError(f"max_depth must be in 0..32, got {self.max_depth}")
        if not 0 < self.learning_rate <= 1:
            raise ConfigError(f"learning_rate must be in (0, 1], got {self.learning_rate}")
        if self.min_child_weight < 0:
            raise ConfigError(f"min_child_weight must be >= 0, got {self.min_child_weight}")
        if not 0 < self.subsample <= 1:
            raise ConfigError(f"subsample must be in (0, 1], got {self.subsample}")
        if self.reg_lambda < 0:
            raise ConfigError(f"reg_lambda must be >= 0, got {self.reg_lambda}")

    def as_dict(self) -> dict:
        return asdict(self)


class Split(NamedTuple):
    gain: float
    feature: int
    threshold: float
    position: int  # last index of the left child in the sorted order


@dataclass
class Tree:
    """flat node arrays, node 0 is the root, feature -1 marks a leaf"""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def depth(self) -> int:
        depths = np.zeros(len(self.feature), dtype=int)
        for node in range(len(self.feature)):
            if self.feature[node] >= 0:
                depths[self.left[node]] = depths[self.right[node]] = depths[node] + 1
        return int(depths.max())

    def predict(self, X: np.ndarray) -> np.ndarray:
        node = np.zeros(len(X), dtype=int)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[node]
            inner = feat >= 0
            if not inner.any():
                return self.value[node]
            go_left = X[rows, np.where(inner, feat, 0)] <= self.threshold[node]
            node = np.where(inner, np.where(go_left, self.left[node], self.right[node]), node)


def _best_split_feature(
    x_sorted: np.ndarray, g_sorted: np.ndarray, h_sorted: np.ndarray, lam: float, min_child_weight: float
) -> tuple[float, int]:
    """best gain and split position along one presorted feature"""
    if x_sorted.size < 2:
        return 0.0, -1
    gl = np.cumsum(g_sorted)[:-1]
    hl = np.cumsum(h_sorted)[:-1]
    g_tot = gl[-1] + g_sorted[-1]
    h_tot = hl[-1] + h_sorted[-1]
    gr, hr = g_tot - gl, h_tot - hl
    gain = gl**2 / (hl + lam) + gr**2 / (hr + lam) - g_tot**2 / (h_tot + lam)
    valid = (x_sorted[:-1] < x_sorted[1:]) & (hl >= min_child_weight) & (hr >= min_child_weight)
    if not valid.any():
        return 0.0, -1
    gain = np.where(valid, gain, -np.inf)
    pos = int(np.argmax(gain))
    return float(gain[pos]), pos


class TreeBuilder:
    """grows one tree on fixed gradients and hessians"""

    def __init__(self, X: np.ndarray, g: np.ndarray, h: np.ndarray, params: GBTParams) -> None:
        self.X = X
        self.g = g
        self.h = h
        self.params = params
        self.gains = np.zeros(X.shape[1])
        self._nodes: list[list[float]] = []  # feature, threshold, left, right, value

    def _find_split(self, orders: Sequence[np.ndarray]) -> Split | None:
        lam, mcw = self.params.reg_lambda, self.params.min_child_weight

        def search(j: int) -> tuple[float, int]:
            idx = orders[j]
            return _best_split_feature(self.X[idx, j], self.g[idx], self.h[idx], lam, mcw)

        features = range(self.X.shape[1])
        if len(orders[0]) >= PARALLEL_MIN_ROWS:
            found = parallel_map(search, features)
        else:
            found = [search(j) for j in features]

        best: Split | None = None
        for j, (gain, pos) in enumerate(found):
            if pos >= 0 and gain > 0 and (best is None or gain > best.gain):
                idx = orders[j]
                threshold = 0.5 * (self.X[idx[pos], j] + self.X[idx[pos + 1], j])
                best = Split(gain, j, float(threshold), pos)
        return best

    def _grow(self, orders: list[np.ndarray], depth: int) -> int:
        node = len(self._nodes)
        rows = orders[0]
        weight = -self.g[rows].sum() / (self.h[rows].sum() + self.params.reg_lambda)
        self._nodes.append([-1, 0.0, -1, -1, float(weight)])

        split = self._find_split(orders) if depth < self.params.max_depth else None
        if split is None:
            return node

        self.gains[split.feature] += split.gain
        goes_left = np.zeros(len(self.X), dtype=bool)
        goes_left[orders[split.feature][: split.position + 1]] = True
        left_orders = [o[goes_left[o]] for o in orders]
        right_orders = [o[~goes_left[o]] for o in orders]

        left = self._grow(left_orders, depth + 1)
        right = self._grow(right_orders, depth + 1)
        self._nodes[node][:4] = [split.feature, split.threshold, left, right]
        return node

    def build(self, orders: list[np.ndarray]) -> Tree:
        self._grow(orders, 0)
        nodes = np.array(self._nodes, dtype=float)
        return Tree(
            feature=nodes[:, 0].astype(int),
            threshold=nodes[:, 1],
            left=nodes[:, 2].astype(int),
            right=nodes[:, 3].astype(int),
            value=nodes[:, 4],
        )


@dataclass
class GBTModel:
    """boosted trees; for softmax every round holds one tree per class"""

    params: GBTParams = field(default_factory=GBTParams)
    loss: Loss = "squared"
    classes: np.ndarray | None = None
    base_score: np.ndarray = field(default_factory=lambda: np.zeros(1))
    rounds: list[list[Tree]] = field(default_factory=list)
    gain_ledger: np.ndarray = field(default_factory=lambda: np.zeros(0))
    train_loss: list[float] = field(default_factory=list)

    def __post_init__(self) -> None:
        if self.loss not in ("squared", "softmax"):
            raise ConfigError(f"loss must be squared or softmax, got {self.loss!r}")
        self._log = logging.getLogger(self.__class__.__name__)

    @property
    def n_outputs(self) -> int:
        return 1 if self.loss == "squared" else len(self.classes)  # type: ignore[arg-type]

    def _targets(self, y: np.ndarray) -> np.ndarray:
        if self.loss == "squared":
            return y.astype(float)[:, None]
        self.classes = np.unique(y)
        return (y[:, None] == self.classes[None, :]).astype(float)

    def _loss(self, raw: np.ndarray, Y: np.ndarray) -> float:
        if self.loss == "squared":
            return float(np.mean((raw - Y) ** 2) / 2)
        return float(np.mean(special.logsumexp(raw, axis=1) - np.sum(raw * Y, axis=1)))

    def _gradients(self, raw: np.ndarray, Y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        if self.loss == "squared":
            return raw - Y, np.ones_like(raw)
        P = special.softmax(raw, axis=1)
        return P - Y, np.maximum(P * (1 - P), HESS_FLOOR)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "GBTModel":
        X = np.asarray(X, dtype=float)
        y = np.asarray(y).ravel()
        if X.ndim != 2 or len(X) != len(y) or len(y) == 0:
            raise ConfigError(f"bad training shapes X{X.shape} y{y.shape}")
        if not np.all(np.isfinite(X)):
            raise ConfigError("training features contain non-finite values")

        p = self.params
        Y = self._targets(y)
        n, k = Y.shape
        if self.loss == "squared":
            self.base_score = Y.mean(axis=0)
        else:
            self.base_score = np.zeros(k)
        raw = np.tile(self.base_score, (n, 1))
        self.gain_ledger = np.zeros(X.shape[1])
        self.rounds = []
        self.train_loss = [self._loss(raw, Y)]
        full_orders = [np.argsort(X[:, j], kind="stable") for j in range(X.shape[1])]

        for r in range(p.n_trees):
            if p.subsample < 1:
                keep = np.zeros(n, dtype=bool)
                m = max(1, int(round(p.subsample * n)))
                keep[rng_for(p.seed, r).choice(n, size=m, replace=False)] = True
                orders = [o[keep[o]] for o in full_orders]
            else:
                orders = full_orders
            G, H = self._gradients(raw, Y)
            trees = []
            for c in range(k):
                builder = TreeBuilder(X, G[:, c], H[:, c], p)
                tree = builder.build(list(orders))
                self.gain_ledger += builder.gains
                raw[:, c] += p.learning_rate * tree.predict(X)
                trees.append(tree)
            self.rounds.append(trees)
            self.train_loss.append(self._loss(raw, Y))

        self._log.debug(
            f"{self.loss} boosting: {p.n_trees} rounds, loss {self.train_loss[0]:.4g} -> {self.train_loss[-1]:.4g}"
        )
        return self

    def predict_raw(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        raw = np.tile(self.base_score, (len(X), 1))
        for trees in self.rounds:
            for c, tree in enumerate(trees):
                raw[:, c] += self.params.learning_rate * tree.predict(X)
        return raw

    def predict(self, X: np.ndarray) -> np.ndarray:
        raw = self.predict_raw(X)
        if self.loss == "squared":
            return raw[:, 0]
        return self.classes[np.argmax(raw, axis=1)]  # type: ignore[index]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        if self.loss != "softmax":
            raise ConfigError("predict_proba needs the softmax loss")
        return special.softmax(self.predict_raw(X), axis=1)

    @property
    def feature_importances(self) -> np.ndarray:
        """total gain per feature, normalized to sum 1 (all zero without splits)"""
        total = self.gain_ledger.sum()
        if total <= 0:
            return np.zeros_like(self.gain_ledger)
        return self.gain_ledger / total


def gbt_fit(X: np.ndarray, y: np.ndarray, params: GBTParams | None = None, loss: Loss = "squared") -> GBTModel:
    return GBTModel(params or GBTParams(), loss).fit(X, y)
