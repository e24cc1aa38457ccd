#!/usr/bin/env python3
"""
Vietoris-Rips persistent homology over the two-element field.

build_rips enumerates cliques with the lower-neighbour expansion, ordered by
(diameter, dimension, vertices). persistence reduces the boundary matrix column
by column, highest dimension first, skipping columns cleared by a pivot of the
dimension above.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
import math
import threading
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import pdist, squareform

from bsdlab.errors import ConfigError, DataError, NumericError
from bsdlab.ingest import DatasetView, ViewFilter, make_view, sample
from bsdlab.outputs import json_float
from bsdlab.records import CurveRecord
from bsdlab.stats import slog
from bsdlab.utils import chunk_ranges, derive_seed, parallel_map

SIMPLEX_BUDGET = 5_000_000
VERTEX_CHUNK = 64
FLUSH_EVERY = 256  # simplices counted locally before updating the shared tally

COEFF_COLUMNS = ("a1", "a2", "a3", "a4", "a6")
PAIR_COLUMNS = ("a4", "a6")
BSD_COLUMNS = ("conductor", "torsion_order", "tamagawa_product", "omega", "regulator", "sha_order")
NRF_COLUMNS = ("conductor", "rank", "rhs")
DEFAULT_TRANSFORMS = {"a4": "slog", "a6": "slog"}
TRANSFORMS = ("identity", "slog", "log")
SPLITS = ("rank", "parity", "mod3")

log = logging.getLogger(__name__)


class SimplexBudgetError(NumericError):
    def __init__(self, count: int, budget: int, eps: float) -> None:
        super().__init__(f"Rips complex at eps={eps:.6g} has more than {budget} simplices ({count}+)")
        self.count = count
        self.budget = budget


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        pts = np.atleast_2d(np.asarray(self.points, dtype=float))
        if pts.shape[0] < 1:
            raise DataError("point cloud needs at least one point")
        if not np.all(np.isfinite(pts)):
            raise DataError("point cloud has non-finite entries")
        object.__setattr__(self, "points", pts)

    def __len__(self) -> int:
        return self.points.shape[0]

    def distances(self) -> np.ndarray:
        return squareform(pdist(self.points))


Simplex = tuple[int, ...]


@dataclass
class Filtration:
    simplices: list[tuple[Simplex, float]]
    max_dim: int
    max_eps: float

    def __len__(self) -> int:
        return len(self.simplices)

    def count_by_dim(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for s, _ in self.simplices:
            counts[len(s) - 1] = counts.get(len(s) - 1, 0) + 1
        return counts


def enclosing_radius(D: np.ndarray) -> float:
    """smallest eps at which the Rips complex is a cone"""
    return float(np.min(np.max(D, axis=0)))


def _lower_neighbours(D: np.ndarray, eps: float) -> list[set[int]]:
    n = D.shape[0]
    return [set(np.flatnonzero(D[v, :v] <= eps).tolist()) for v in range(n)]


class _Tally:
    """simplex count shared by the chunk workers"""

    def __init__(self, limit: int) -> None:
        self.limit = limit
        self.total = 0
        self._lock = threading.Lock()

    def add(self, count: int) -> bool:
        """add to the total, False once it is over the limit"""
        with self._lock:
            self.total += count
            return self.total <= self.limit

    @property
    def exceeded(self) -> bool:
        return self.total > self.limit


def _expand(
    D: np.ndarray,
    nbrs: list[set[int]],
    vertices: range,
    top_dim: int,
    tally: _Tally,
    collect: bool,
) -> list[tuple[Simplex, float]]:
    """cofaces of each vertex built from lower neighbours, stops once `tally` is over its limit"""
    out: list[tuple[Simplex, float]] = []
    pending = 0
    for v in vertices:
        if tally.exceeded:
            return out
        stack: list[tuple[Simplex, float, set[int]]] = [((v,), 0.0, nbrs[v])]
        while stack:
            simplex, diam, candidates = stack.pop()
            pending += 1
            if collect:
                out.append((simplex, diam))
            if pending >= FLUSH_EVERY:
                if not tally.add(pending):
                    return out
                pending = 0
            if len(simplex) - 1 >= top_dim:
                continue
            for u in sorted(candidates, reverse=True):
                new_diam = max(diam, max(D[u, w] for w in simplex))
                stack.append(((u, *simplex), new_diam, candidates & nbrs[u]))
    tally.add(pending)
    return out


def count_simplices(D: np.ndarray, eps: float, max_dim: int, limit: int = SIMPLEX_BUDGET) -> int:
    """number of Rips simplices up to dimension max_dim + 1, exact up to `limit`"""
    tally = _Tally(limit)
    _expand(D, _lower_neighbours(D, eps), range(D.shape[0]), max_dim + 1, tally, collect=False)
    return tally.total


def auto_eps(D: np.ndarray, max_dim: int, budget: int = SIMPLEX_BUDGET) -> float:
    """largest pairwise distance up to the enclosing radius whose Rips complex fits the budget"""
    levels = np.unique(squareform(D, checks=False)) if D.shape[0] > 1 else np.array([])
    levels = levels[levels <= enclosing_radius(D)] if levels.size else levels
    if levels.size == 0:
        return 0.0
    if count_simplices(D, float(levels[-1]), max_dim, budget) <= budget:
        return float(levels[-1])

    lo, hi = -1, levels.size - 1  # levels[hi] is over budget
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if count_simplices(D, float(levels[mid]), max_dim, budget) <= budget:
            lo = mid
        else:
            hi = mid
    if lo < 0:
        return 0.0
    return float(levels[lo])


def build_rips(
    cloud: PointCloud | np.ndarray,
    max_dim: int = 1,
    max_eps: float | str | None = None,
    budget: int = SIMPLEX_BUDGET,
) -> Filtration:
    """Rips filtration with simplices up to dimension max_dim + 1

    max_eps None uses the enclosing radius, "auto" the largest distance below it
    that keeps the complex within `budget`. The budget bounds the simplex count
    summed over all vertex chunks.
    """
    if not isinstance(cloud, PointCloud):
        cloud = PointCloud(cloud)
    if max_dim < 0:
        raise ConfigError(f"max_dim must be >= 0, got {max_dim}")
    D = cloud.distances()

    if max_eps is None:
        eps = enclosing_radius(D) if len(cloud) > 1 else math.inf
    elif max_eps == "auto":
        eps = auto_eps(D, max_dim, budget)
    elif isinstance(max_eps, str):
        raise ConfigError(f"max_eps must be a number or 'auto', got {max_eps!r}")
    else:
        eps = float(max_eps)
        if eps <= 0:
            raise ConfigError(f"max_eps must be positive, got {eps}")

    nbrs = _lower_neighbours(D, eps)
    n = len(cloud)
    tally = _Tally(budget)

    def run(span: tuple[int, int]) -> list[tuple[Simplex, float]]:
        return _expand(D, nbrs, range(*span), max_dim + 1, tally, collect=True)

    parts = parallel_map(run, chunk_ranges(n, VERTEX_CHUNK))
    if tally.exceeded:
        raise SimplexBudgetError(tally.total, budget, eps)

    simplices = [item for chunk in parts for item in chunk]
    simplices.sort(key=lambda item: (item[1], len(item[0]), item[0]))
    log.debug(f"rips: {n} points, eps={eps:.6g}, {len(simplices)} simplices")
    return Filtration(simplices, max_dim, eps)


# ----------------------------persistence----------------------------


@dataclass
class Barcode:
    bars: dict[int, list[tuple[float, float]]] = field(default_factory=dict)
    max_dim: int = 0

    def intervals(self, dim: int) -> list[tuple[float, float]]:
        return self.bars.get(dim, [])

    def to_records(self) -> list[dict[str, Any]]:
        return [
            {"dim": dim, "birth": birth, "death": json_float(death)}
            for dim in sorted(self.bars)
            for birth, death in self.bars[dim]
        ]


def persistence(filtration: Filtration, keep_zero: bool = False) -> Barcode:
    """barcode of a filtration, zero-length bars dropped unless `keep_zero`"""
    simplices = filtration.simplices
    index = {s: i for i, (s, _) in enumerate(simplices)}
    dims = [len(s) - 1 for s, _ in simplices]
    top = max(dims, default=0)

    pivots: dict[int, int] = {}  # low row -> reducing column
    reduced: dict[int, set[int]] = {}
    cleared: set[int] = set()
    for dim in range(top, 0, -1):
        for j, (simplex, _) in enumerate(simplices):
            if dims[j] != dim or j in cleared:
                continue
            col = {index[simplex[:k] + simplex[k + 1 :]] for k in range(len(simplex))}
            while col:
                low = max(col)
                other = pivots.get(low)
                if other is None:
                    break
                col ^= reduced[other]
            if col:
                low = max(col)
                pivots[low] = j
                reduced[j] = col
                cleared.add(low)
    reduced.clear()

    bars: dict[int, list[tuple[float, float]]] = {d: [] for d in range(filtration.max_dim + 1)}
    killed = set(pivots.values())
    for low, j in pivots.items():
        d = dims[low]
        if d > filtration.max_dim:
            continue
        birth, death = simplices[low][1], simplices[j][1]
        if death > birth or keep_zero:
            bars[d].append((birth, death))
    for i, (_, diam) in enumerate(simplices):
        d = dims[i]
        if d > filtration.max_dim or i in pivots or i in killed:
            continue
        bars[d].append((diam, math.inf))

    for d in bars:
        bars[d].sort()
    return Barcode(bars, filtration.max_dim)


def betti_at(barcode: Barcode, eps: float) -> list[int]:
    """number of bars [birth, death) containing eps, per dimension"""
    if eps < 0:
        raise ConfigError(f"eps must be >= 0, got {eps}")
    return [
        sum(1 for birth, death in barcode.intervals(d) if birth <= eps < death)
        for d in range(barcode.max_dim + 1)
    ]


def betti_grid(barcode: Barcode, grid: Iterable[float]) -> list[dict[str, Any]]:
    return [{"eps": float(eps), "betti": betti_at(barcode, eps)} for eps in grid]


# ----------------------------pipelines----------------------------


class BarcodeReport(NamedTuple):
    barcode: Barcode
    settings: dict[str, Any]
    eps: float
    n_simplices: int


def _transform(values: np.ndarray, kind: str, name: str) -> np.ndarray:
    if kind == "identity":
        return values
    if kind == "slog":
        return np.asarray(slog(values))
    if kind == "log":
        if np.any(values <= 0):
            raise DataError(f"log transform of non-positive values in column {name!r}")
        return np.log(values)
    raise ConfigError(f"unknown transform {kind!r} for column {name!r}, use one of {TRANSFORMS}")


def cloud_from_records(
    records: Sequence[CurveRecord],
    columns: Sequence[str],
    transforms: Mapping[str, str] | None = None,
) -> PointCloud:
    """point cloud of record columns, a4 and a6 slog-transformed unless overridden"""
    transforms = {**DEFAULT_TRANSFORMS, **(transforms or {})}
    unknown = set(transforms) - set(columns) - set(DEFAULT_TRANSFORMS)
    if unknown:
        raise ConfigError(f"transforms given for columns not in the cloud: {sorted(unknown)}")
    cols = []
    for name in columns:
        try:
            raw = np.array([float(r.value(name)) for r in records])
        except KeyError:
            raise ConfigError(f"unknown column {name!r}")
        cols.append(_transform(raw, transforms.get(name, "identity"), name))
    return PointCloud(np.column_stack(cols) if cols else np.empty((0, 0)), tuple(columns))


def barcode_pipeline(
    records: Sequence[CurveRecord] | DatasetView,
    columns: Sequence[str] = COEFF_COLUMNS,
    transforms: Mapping[str, str] | None = None,
    n_sample: int = 100,
    seed: int = 0,
    max_dim: int = 1,
    max_eps: float | str | None = "auto",
    budget: int = SIMPLEX_BUDGET,
) -> BarcodeReport:
    """sample records, build the cloud and its barcode"""
    view = records if isinstance(records, DatasetView) else make_view(records)
    effective = {**DEFAULT_TRANSFORMS, **(transforms or {})}
    picked = sample(view, n_sample, seed)
    cloud = cloud_from_records(picked, columns, effective)
    filtration = build_rips(cloud, max_dim, max_eps, budget)
    barcode = persistence(filtration)
    settings = {
        "columns": list(columns),
        "transforms": {c: effective.get(c, "identity") for c in columns},
        "n_sample": n_sample,
        "seed": seed,
        "max_dim": max_dim,
        "max_eps": max_eps,
        "budget": budget,
        "filters": view.filters.describe(),
        "source": view.source,
    }
    log.info(
        f"barcode of {n_sample} points in {list(columns)}: eps={filtration.max_eps:.6g}, "
        f"{len(filtration)} simplices"
    )
    return BarcodeReport(barcode, settings, filtration.max_eps, len(filtration))


def split_filters(records: Sequence[CurveRecord], split: str) -> dict[str, ViewFilter]:
    """view filters of a rank, conductor parity or conductor mod 3 split"""
    if split == "rank":
        return {f"rank={r}": ViewFilter(rank=r) for r in sorted({r.rank for r in records})}
    if split == "parity":
        return {"N even": ViewFilter(modulus=2, residue=0), "N odd": ViewFilter(modulus=2, residue=1)}
    if split == "mod3":
        return {f"N={k} mod 3": ViewFilter(modulus=3, residue=k) for k in range(3)}
    raise ConfigError(f"unknown split {split!r}, use one of {SPLITS}")


def split_barcodes(
    records: Sequence[CurveRecord],
    split: str,
    columns: Sequence[str] = BSD_COLUMNS,
    transforms: Mapping[str, str] | None = None,
    n_sample: int = 100,
    seed: int = 0,
    max_dim: int = 1,
    max_eps: float | str | None = "auto",
    budget: int = SIMPLEX_BUDGET,
    source: str = "",
) -> dict[str, BarcodeReport]:
    """one barcode per split group, each with its own derived seed"""
    groups = list(split_filters(records, split).items())

    def run(item: tuple[int, tuple[str, ViewFilter]]) -> BarcodeReport:
        i, (name, filt) = item
        view = make_view(records, source, filt)
        n = min(n_sample, len(view))
        if n < n_sample:
            log.warning(f"split group {name!r} holds {n} records, fewer than {n_sample}")
        return barcode_pipeline(
            view, columns, transforms, n, derive_seed(seed, i), max_dim, max_eps, budget
        )

    reports = parallel_map(run, list(enumerate(groups)))
    return {name: report for (name, _), report in zip(groups, reports)}
