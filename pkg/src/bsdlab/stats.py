#!/usr/bin/env python3
"""
Descriptive statistics over curve records: signed logs, tallies, histograms,
permutation tests, correlations and grouped summaries.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import itertools
import logging
import math
from typing import Callable, Iterable, Mapping, NamedTuple, Sequence

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform
from scipy.stats import rankdata

from bsdlab.errors import ConfigError, DataError
from bsdlab.fitting import BETA_RESTARTS, FitResult, fit_family, fit_select_aic
from bsdlab.records import CurveRecord
from bsdlab.utils import chunk_ranges, derive_seed, parallel_map, rng_for

TRIPLES = tuple(
    (a1, a2, a3) for a1 in (0, 1) for a2 in (-1, 0, 1) for a3 in (0, 1)
)  # normalized (a1, a2, a3), lexicographic
RANKS = (0, 1, 2, 3, 4)

N_PERM = 999
MIN_PERM = 99
PERM_CHUNK = 100
PAIR_SAMPLE = 500
TIE_RTOL = 1e-12

log = logging.getLogger(__name__)


class EmptyHistogramError(DataError):
    """No values to bin"""


# ----------------------------transforms----------------------------


def slog(x: float | np.ndarray) -> float | np.ndarray:
    """signed natural log: 0 at 0, sign(x) * log|x| elsewhere"""
    arr = np.asarray(x, dtype=float)
    small = (arr != 0) & (np.abs(arr) < 1)
    if np.any(small):
        log.warning(f"slog of {int(np.count_nonzero(small))} values with 0 < |x| < 1")
    with np.errstate(divide="ignore"):
        out = np.where(arr == 0, 0.0, np.sign(arr) * np.log(np.abs(np.where(arr == 0, 1, arr))))
    if np.ndim(x) == 0:
        return float(out)
    return out


def column(records: Iterable[CurveRecord], name: str) -> np.ndarray:
    """a numeric record field as float array; `slog_a4` style names apply slog"""
    if name.startswith("slog_"):
        return np.asarray(slog(column(records, name[5:])))
    if name.startswith("log_"):
        return np.log(column(records, name[4:]))
    return np.array([float(r.value(name)) for r in records])


def log_d(records: Iterable[CurveRecord]) -> np.ndarray:
    """log10 sqrt(a4^2 + a6^2)"""
    pairs = np.array([(float(r.a4), float(r.a6)) for r in records]).reshape(-1, 2)
    return np.log10(np.hypot(pairs[:, 0], pairs[:, 1]))


# ----------------------------tally----------------------------


class RankTally(NamedTuple):
    triples: tuple[tuple[int, int, int], ...]
    ranks: tuple[int, ...]
    counts: np.ndarray  # len(triples) x len(ranks)

    def rows(self) -> list[tuple[int, ...]]:
        return [(*t, *map(int, row)) for t, row in zip(self.triples, self.counts)]


def tally_rank_by_triple(records: Iterable[CurveRecord]) -> RankTally:
    """count records per normalized (a1, a2, a3) and rank"""
    row = {t: i for i, t in enumerate(TRIPLES)}
    counts = np.zeros((len(TRIPLES), len(RANKS)), dtype=np.int64)
    for r in records:
        if r.triple not in row:
            raise DataError(f"{r.label}: (a1, a2, a3) = {r.triple} is not normalized")
        if r.rank not in RANKS:
            raise DataError(f"{r.label}: rank {r.rank} outside {RANKS}")
        counts[row[r.triple], r.rank] += 1
    return RankTally(TRIPLES, RANKS, counts)


# ----------------------------histograms----------------------------


class Histogram(NamedTuple):
    edges: np.ndarray
    masses: np.ndarray


class JointHistogram(NamedTuple):
    xedges: np.ndarray
    yedges: np.ndarray
    masses: np.ndarray  # len(xedges)-1 x len(yedges)-1


def symlog_forward(x: np.ndarray) -> np.ndarray:
    """linear on [-1, 1], sign * (1 + log10|x|) outside"""
    x = np.asarray(x, dtype=float)
    ax = np.abs(x)
    with np.errstate(divide="ignore"):
        return np.where(ax <= 1, x, np.sign(x) * (1 + np.log10(np.maximum(ax, 1))))


def symlog_inverse(t: np.ndarray) -> np.ndarray:
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    return np.where(at <= 1, t, np.sign(t) * 10 ** (np.maximum(at, 1) - 1))


def _edges(
    values: np.ndarray, binning: str, nbins: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """edges in data space, edges in the binning scale and the transformed values"""
    if binning == "linear":
        t = values
    elif binning == "log":
        if np.any(values <= 0):
            raise DataError("log binning needs positive values")
        t = np.log10(values)
    elif binning == "symlog":
        t = symlog_forward(values)
    else:
        raise ConfigError(f"unknown binning {binning!r}")

    lo, hi = float(t.min()), float(t.max())
    if lo == hi:
        lo, hi = lo - 0.5, hi + 0.5
    tedges = np.linspace(lo, hi, nbins + 1)

    if binning == "log":
        return 10**tedges, tedges, t
    if binning == "symlog":
        return symlog_inverse(tedges), tedges, t
    return tedges, tedges, t


def histogram(values: Iterable[float], binning: str = "linear", nbins: int = 50) -> Histogram:
    """normalized histogram, bins uniform in the chosen scale"""
    if nbins < 1:
        raise ConfigError("nbins must be at least 1")
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptyHistogramError("cannot bin an empty sample")
    edges, tedges, t = _edges(x, binning, nbins)
    counts, _ = np.histogram(t, bins=tedges)
    return Histogram(edges, counts / x.size)


def joint_histogram(
    x: Iterable[float], y: Iterable[float], nbins: int = 50, binning: str = "symlog"
) -> JointHistogram:
    xs = np.asarray(x, dtype=float).ravel()
    ys = np.asarray(y, dtype=float).ravel()
    if xs.size == 0:
        raise EmptyHistogramError("cannot bin an empty sample")
    if xs.size != ys.size:
        raise DataError(f"x and y differ in length: {xs.size} vs {ys.size}")
    xedges, txedges, tx = _edges(xs, binning, nbins)
    yedges, tyedges, ty = _edges(ys, binning, nbins)
    counts, _, _ = np.histogram2d(tx, ty, bins=[txedges, tyedges])
    return JointHistogram(xedges, yedges, counts / xs.size)


def pmf(values: Iterable[float]) -> tuple[np.ndarray, np.ndarray]:
    """support and probability mass of a discrete sample"""
    x = np.asarray(values).ravel()
    if x.size == 0:
        raise EmptyHistogramError("cannot tabulate an empty sample")
    support, counts = np.unique(x, return_counts=True)
    return support, counts / x.size


# ----------------------------permutation tests----------------------------


class PermutationResult(NamedTuple):
    statistic: float
    p_value: float
    n_perm: int


def _as_2d(sample: Iterable) -> np.ndarray:
    arr = np.asarray(sample, dtype=float)
    return arr.reshape(-1, 1) if arr.ndim == 1 else arr


def energy_distance(a: Iterable, b: Iterable) -> float:
    """2 E|X-Y| - E|X-X'| - E|Y-Y'|"""
    A, B = _as_2d(a), _as_2d(b)
    return float(2 * cdist(A, B).mean() - cdist(A, A).mean() - cdist(B, B).mean())


def _energy_from_matrix(D: np.ndarray, mask: np.ndarray) -> float:
    ia, ib = np.flatnonzero(mask), np.flatnonzero(~mask)
    return float(
        2 * D[np.ix_(ia, ib)].mean() - D[np.ix_(ia, ia)].mean() - D[np.ix_(ib, ib)].mean()
    )


def permutation_test(
    a: Iterable,
    b: Iterable,
    statistic: Callable[[np.ndarray, np.ndarray], float] | None = None,
    n_perm: int = N_PERM,
    seed: int = 0,
) -> PermutationResult:
    """two-sample permutation test, energy distance unless `statistic` is given

    p = (1 + #{permuted >= observed}) / (1 + n_perm)
    """
    A, B = _as_2d(a), _as_2d(b)
    if len(A) == 0 or len(B) == 0:
        raise DataError("permutation test needs two non-empty samples")
    if A.shape[1] != B.shape[1]:
        raise DataError(f"samples differ in dimension: {A.shape[1]} vs {B.shape[1]}")
    if n_perm < MIN_PERM:
        log.warning(f"n_perm={n_perm} < {MIN_PERM}: p-values are coarse")

    pooled = np.vstack([A, B])
    labels = np.zeros(len(pooled), dtype=bool)
    labels[: len(A)] = True

    if statistic is None:
        D = squareform(pdist(pooled))

        def stat(mask: np.ndarray) -> float:
            return _energy_from_matrix(D, mask)

    else:

        def stat(mask: np.ndarray) -> float:
            return float(statistic(pooled[mask], pooled[~mask]))

    observed = stat(labels)
    threshold = observed - TIE_RTOL * abs(observed)

    def run_chunk(item: tuple[int, tuple[int, int]]) -> int:
        idx, (start, stop) = item
        rng = rng_for(seed, idx)
        hits = 0
        for _ in range(start, stop):
            hits += stat(rng.permutation(labels)) >= threshold
        return hits

    chunks = list(enumerate(chunk_ranges(n_perm, PERM_CHUNK)))
    hits = sum(parallel_map(run_chunk, chunks))
    return PermutationResult(observed, (1 + hits) / (1 + n_perm), n_perm)


def rank_pair_tests(
    records: Sequence[CurveRecord],
    n_perm: int = N_PERM,
    seed: int = 0,
    per_rank: int = PAIR_SAMPLE,
) -> dict[tuple[int, int], PermutationResult]:
    """permutation tests between the (slog a4, slog a6) joints of every rank pair

    Each rank contributes at most `per_rank` records, drawn with a seed derived
    from the rank.
    """
    clouds: dict[int, np.ndarray] = {}
    for rank in sorted({r.rank for r in records}):
        group = [r for r in records if r.rank == rank]
        if len(group) > per_rank:
            pick = np.sort(rng_for(seed, 1000 + rank).choice(len(group), per_rank, replace=False))
            group = [group[i] for i in pick]
        if len(group) >= 2:
            clouds[rank] = np.column_stack([column(group, "slog_a4"), column(group, "slog_a6")])

    out = {}
    for i, (r0, r1) in enumerate(itertools.combinations(sorted(clouds), 2)):
        out[(r0, r1)] = permutation_test(
            clouds[r0], clouds[r1], n_perm=n_perm, seed=derive_seed(seed, i)
        )
        log.info(f"rank {r0} vs {r1}: p = {out[(r0, r1)].p_value:.4g}")
    return out


# ----------------------------correlation----------------------------


class Correlation(NamedTuple):
    names: tuple[str, ...]
    matrix: np.ndarray
    method: str
    undefined: tuple[str, ...]  # zero-variance columns, their entries are nan


def correlation_matrix(
    columns: Mapping[str, Sequence[float]], method: str = "pearson"
) -> Correlation:
    if method not in ("pearson", "spearman"):
        raise ConfigError(f"unknown correlation method {method!r}")
    if len(columns) < 2:
        raise ConfigError("correlation needs at least two columns")
    names = tuple(columns)
    data = [np.asarray(columns[n], dtype=float) for n in names]
    if len({d.size for d in data}) != 1:
        raise DataError("columns differ in length")

    if method == "spearman":
        data = [rankdata(d, method="average") for d in data]
    X = np.vstack(data)

    flat = tuple(n for n, d in zip(names, X) if np.ptp(d) == 0)
    with np.errstate(invalid="ignore", divide="ignore"):
        matrix = np.clip(np.corrcoef(X), -1.0, 1.0)
    np.fill_diagonal(matrix, 1.0)
    for i, name in enumerate(names):
        if name in flat:
            matrix[i, :] = matrix[:, i] = np.nan
            matrix[i, i] = 1.0
    if flat:
        log.warning(f"zero variance columns {flat}: correlations undefined")
    return Correlation(names, matrix, method, flat)


# ----------------------------grouped summaries----------------------------


class SummaryRow(NamedTuple):
    a1: int
    a2: int
    a3: int
    rank: int
    size: int
    mean: float
    std: float  # nan when size == 1
    median: float
    zero_count: int

    @property
    def std_defined(self) -> bool:
        return self.size > 1


def group_stats(records: Iterable[CurveRecord], value: str = "a4") -> list[SummaryRow]:
    """one row per occupied (a1, a2, a3, rank) cell"""
    if value not in ("a4", "a6"):
        raise ConfigError(f"group_stats works on a4 or a6, not {value!r}")
    groups: dict[tuple[int, int, int, int], list[int]] = {}
    for r in records:
        groups.setdefault((*r.triple, r.rank), []).append(getattr(r, value))

    rows = []
    for key in sorted(groups, key=lambda k: (k[3], k[:3])):
        ints = groups[key]
        x = np.array([float(v) for v in ints])
        std = float(np.std(x, ddof=1)) if x.size > 1 else math.nan
        rows.append(
            SummaryRow(
                *key,
                size=x.size,
                mean=float(x.mean()),
                std=std,
                median=float(np.median(x)),
                zero_count=sum(1 for v in ints if v == 0),
            )
        )
    return rows


class BoxplotSummary(NamedTuple):
    median: float
    q25: float
    q75: float
    p2_5: float
    p97_5: float


def boxplot_summary(values: Iterable[float]) -> BoxplotSummary:
    """quartiles and the central 95% whiskers, linear interpolation"""
    x = np.asarray(values, dtype=float).ravel()
    if x.size == 0:
        raise EmptyHistogramError("no values to summarize")
    p = np.percentile(x, [50, 25, 75, 2.5, 97.5], method="linear")
    return BoxplotSummary(*(float(v) for v in p))


def boxplots_by_rank(records: Sequence[CurveRecord], name: str) -> dict[int, BoxplotSummary]:
    out = {}
    for rank in sorted({r.rank for r in records}):
        out[rank] = boxplot_summary(column([r for r in records if r.rank == rank], name))
    return out


# ----------------------------coefficient size and RHS studies----------------------------


def fit_log_d_by_rank(
    records: Sequence[CurveRecord], restarts: int = BETA_RESTARTS, seed: int = 0
) -> dict[int, dict[str, object]]:
    """scaled Beta and Gamma fits of log10 d per rank, on the a4 > 0, a6 > 0 subset"""
    positive = [r for r in records if r.a4 > 0 and r.a6 > 0]
    out: dict[int, dict[str, object]] = {}
    for rank in sorted({r.rank for r in positive}):
        x = log_d([r for r in positive if r.rank == rank])
        entry: dict[str, object] = {"n": int(x.size), "median": float(np.median(x))}
        for family in ("beta", "gamma"):
            try:
                entry[family] = fit_family(family, x, restarts, derive_seed(seed, rank))
            except Exception as err:  # pylint: disable=broad-except
                log.warning(f"rank {rank}: {family} fit of log d failed: {err}")
                entry[family] = None
        out[rank] = entry
    return out


def rhs_values(records: Iterable[CurveRecord]) -> np.ndarray:
    return np.array([r.rhs for r in records])


def rhs_fits_by_rank(
    records: Sequence[CurveRecord],
    families: Sequence[str],
    restarts: int = BETA_RESTARTS,
    seed: int = 0,
) -> dict[int, list[FitResult]]:
    return {
        rank: fit_select_aic(
            rhs_values([r for r in records if r.rank == rank]),
            families,
            restarts,
            derive_seed(seed, rank),
        )
        for rank in sorted({r.rank for r in records})
    }


def rhs_medians_by_rank(records: Sequence[CurveRecord]) -> dict[int, float]:
    return {
        rank: float(np.median(rhs_values([r for r in records if r.rank == rank])))
        for rank in sorted({r.rank for r in records})
    }


def rhs_medians_by_conductor(
    records: Sequence[CurveRecord], n_bins: int = 10
) -> list[tuple[int, int, int, float]]:
    """(lo, hi, count, median RHS) over equal-width conductor bins [lo, hi)"""
    if not records:
        return []
    N = np.array([r.conductor for r in records])
    rhs = rhs_values(records)
    edges = np.linspace(N.min(), N.max() + 1, n_bins + 1).astype(np.int64)
    rows = []
    for lo, hi in zip(edges[:-1], edges[1:]):
        mask = (N >= lo) & (N < hi)
        if mask.any():
            rows.append((int(lo), int(hi), int(mask.sum()), float(np.median(rhs[mask]))))
    return rows
