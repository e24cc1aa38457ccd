#!/usr/bin/env python3
"""
Job configs, the reproduce registry and run manifests.

A job config is a TOML file::

    version = 1
    name = "desk"
    seed = 7
    cache = "curves.bsdc"
    output_dir = "out"
    jobs = ["validate", "stats", "reproduce"]
    reproduce = ["fig1", "table-tally"]

    [stats]
    n_perm = 999

Relative paths resolve against the config file. Every run writes
`manifest.json` into the output directory.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import hashlib
import logging
import tomllib
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Callable, Mapping, NamedTuple, Sequence

import numpy as np

from bsdlab import experiments, stats, tda
from bsdlab.errors import BsdlabError, ConfigError
from bsdlab.fitting import BETA_RESTARTS, DEFAULT_FAMILIES, FAMILY_NOTES, FitResult, fit_family, pdf_points
from bsdlab.gbt import GBTParams
from bsdlab.ingest import Issue, read_cache, validate_all
from bsdlab.outputs import json_float, read_json, write_csv, write_json
from bsdlab.records import CurveRecord
from bsdlab.version import __version__

JOB_CONFIG_VERSION = 1
JOBS = ("validate", "stats", "tda", "ml", "reproduce")
MANIFEST = "manifest.json"

STATS_DEFAULTS: dict[str, Any] = {
    "n_perm": stats.N_PERM,
    "per_rank": stats.PAIR_SAMPLE,
    "nbins": 50,
    "families": list(DEFAULT_FAMILIES),
    "restarts": BETA_RESTARTS,
    "conductor_bins": 10,
    "curve_points": 200,
}
TDA_DEFAULTS: dict[str, Any] = {
    "n_sample": 1000,
    "split_sample": 100,
    "parity_sample": 200,
    "max_dim": 1,
    "max_eps": "auto",
    "budget": tda.SIMPLEX_BUDGET,
    "grid_points": 20,
}
ML_DEFAULTS: dict[str, Any] = {
    "k": 5,
    "n_sample": 0,  # 0 uses every record
    "transform": "slog",
    "n_trees": 200,
    "max_depth": 6,
    "learning_rate": 0.1,
    "min_child_weight": 1.0,
    "subsample": 1.0,
    "fractions": list(experiments.LEARNING_FRACTIONS),
}
EC_DEFAULTS: dict[str, Any] = {
    "recompute": False,
    "expected_ranks": [],  # [a1, a2, a3, a4, a6, rank] rows
}
SECTION_DEFAULTS = {"stats": STATS_DEFAULTS, "tda": TDA_DEFAULTS, "ml": ML_DEFAULTS, "ec": EC_DEFAULTS}
TOP_LEVEL_KEYS = {"version", "name", "seed", "cache", "output_dir", "jobs", "reproduce", *SECTION_DEFAULTS}

log = logging.getLogger(__name__)


# ----------------------------configuration----------------------------


def _section(raw: Mapping[str, Any], name: str) -> dict[str, Any]:
    given = raw.get(name, {})
    if not isinstance(given, dict):
        raise ConfigError(f"[{name}] must be a table")
    defaults = SECTION_DEFAULTS[name]
    unknown = set(given) - set(defaults)
    if unknown:
        raise ConfigError(f"unknown keys in [{name}]: {sorted(unknown)}")
    return {**defaults, **given}


@dataclass(frozen=True)
class JobConfig:
    name: str
    cache: Path
    output_dir: Path
    seed: int = 0
    jobs: tuple[str, ...] = ()
    reproduce: tuple[str, ...] = ()
    stats: dict[str, Any] = field(default_factory=lambda: dict(STATS_DEFAULTS))
    tda: dict[str, Any] = field(default_factory=lambda: dict(TDA_DEFAULTS))
    ml: dict[str, Any] = field(default_factory=lambda: dict(ML_DEFAULTS))
    ec: dict[str, Any] = field(default_factory=lambda: dict(EC_DEFAULTS))
    digest: str = ""

    @classmethod
    def from_dict(cls, raw: Mapping[str, Any], base: Path = Path("."), digest: str = "") -> JobConfig:
        version = raw.get("version")
        if version != JOB_CONFIG_VERSION:
            raise ConfigError(f"job config version {version!r} not supported, expected {JOB_CONFIG_VERSION}")
        unknown = set(raw) - TOP_LEVEL_KEYS
        if unknown:
            raise ConfigError(f"unknown job config keys: {sorted(unknown)}")
        for key in ("cache", "output_dir"):
            if key not in raw:
                raise ConfigError(f"job config is missing {key!r}")

        jobs = tuple(raw.get("jobs", ()))
        bad_jobs = [j for j in jobs if j not in JOBS]
        if bad_jobs:
            raise ConfigError(f"unknown jobs {bad_jobs}, known: {', '.join(JOBS)}")
        reproduce = tuple(raw.get("reproduce", ()))
        bad_ids = [r for r in reproduce if r not in REPRODUCE]
        if bad_ids:
            raise ConfigError(f"unknown reproduce ids {bad_ids}, known: {', '.join(REPRODUCE)}")
        if reproduce and "reproduce" not in jobs:
            jobs = (*jobs, "reproduce")

        seed = raw.get("seed", 0)
        if not isinstance(seed, int) or seed < 0:
            raise ConfigError(f"seed must be a non-negative integer, got {seed!r}")

        return cls(
            name=str(raw.get("name", "job")),
            cache=(base / raw["cache"]).resolve(),
            output_dir=(base / raw["output_dir"]).resolve(),
            seed=seed,
            jobs=jobs,
            reproduce=reproduce,
            stats=_section(raw, "stats"),
            tda=_section(raw, "tda"),
            ml=_section(raw, "ml"),
            ec=_section(raw, "ec"),
            digest=digest,
        )

    def as_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "cache": str(self.cache),
            "output_dir": str(self.output_dir),
            "seed": self.seed,
            "jobs": list(self.jobs),
            "reproduce": list(self.reproduce),
            "stats": self.stats,
            "tda": self.tda,
            "ml": self.ml,
            "ec": self.ec,
        }


def load_job_config(path: str | Path) -> JobConfig:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as err:
        raise ConfigError(f"cannot read job config {path}: {err}") from err
    try:
        raw = tomllib.loads(data.decode())
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as err:
        raise ConfigError(f"malformed job config {path}: {err}") from err
    return JobConfig.from_dict(raw, path.parent, hashlib.sha256(data).hexdigest())


# ----------------------------artifacts----------------------------


class Artifact(NamedTuple):
    """report data, JSON payload or documented CSV table"""

    kind: str
    payload: dict[str, Any] | None = None
    columns: Sequence[tuple[str, str]] = ()
    rows: Sequence[Sequence[Any]] = ()

    @property
    def suffix(self) -> str:
        return ".json" if self.payload is not None else ".csv"

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        if self.payload is not None:
            return write_json(path, self.kind, self.payload)
        return write_csv(path, self.kind, self.columns, self.rows)


@dataclass
class Context:
    """records plus the parameter sections a reproducer reads"""

    records: list[CurveRecord]
    source: str = ""
    seed: int = 0
    stats: dict[str, Any] = field(default_factory=lambda: dict(STATS_DEFAULTS))
    tda: dict[str, Any] = field(default_factory=lambda: dict(TDA_DEFAULTS))
    ml: dict[str, Any] = field(default_factory=lambda: dict(ML_DEFAULTS))
    ec: dict[str, Any] = field(default_factory=lambda: dict(EC_DEFAULTS))

    @classmethod
    def from_config(cls, config: JobConfig, records: list[CurveRecord]) -> Context:
        return cls(records, str(config.cache), config.seed, config.stats, config.tda, config.ml, config.ec)

    def gbt_params(self) -> GBTParams:
        keys = ("n_trees", "max_depth", "learning_rate", "min_child_weight", "subsample")
        return GBTParams(**{k: self.ml[k] for k in keys}, seed=self.seed)

    def experiment(self, target: str, features: str, model: str = "gbt") -> experiments.ExperimentSpec:
        return experiments.ExperimentSpec(
            target=target,
            features=features,
            model=model,
            params=self.gbt_params(),
            k=self.ml["k"],
            seed=self.seed,
            transform=self.ml["transform"],
            n_sample=self.ml["n_sample"] or None,
        )


def _keyed(mapping: Mapping[Any, Any]) -> dict[str, Any]:
    return {str(k): v for k, v in mapping.items()}


def _fit(result: FitResult | None) -> dict[str, Any] | None:
    if result is None:
        return None
    return {
        "family": result.family,
        "params": list(result.params),
        "loglik": json_float(result.loglik),
        "aic": json_float(result.aic),
        "n": result.n,
        "error": result.error,
        "parameterization": FAMILY_NOTES.get(result.family, ""),
    }


def _curve(result: FitResult, samples: np.ndarray, points: int) -> list[list[float]]:
    if not result.ok or samples.size == 0:
        return []
    hi = result.params[-1] if result.family == "beta" else float(samples.max())
    xs = np.linspace(0.0, hi, points)[1:]
    return [[float(x), float(y)] for x, y in zip(xs, pdf_points(result, xs))]


def _hist_payload(h: stats.Histogram) -> dict[str, Any]:
    return {"edges": h.edges, "masses": h.masses}


def _joint_payload(h: stats.JointHistogram) -> dict[str, Any]:
    return {"xedges": h.xedges, "yedges": h.yedges, "masses": h.masses}


# ----------------------------statistics reproducers----------------------------


def fig1(ctx: Context) -> Artifact:
    """(slog a4, slog a6, rank) scatter"""
    a4 = stats.column(ctx.records, "slog_a4")
    a6 = stats.column(ctx.records, "slog_a6")
    rows = [(r.label, x, y, r.rank) for r, x, y in zip(ctx.records, a4, a6)]
    columns = (
        ("label", "curve label"),
        ("slog_a4", "signed natural log of a4"),
        ("slog_a6", "signed natural log of a6"),
        ("rank", "rank r"),
    )
    return Artifact("figure", columns=columns, rows=rows)


def table_tally(ctx: Context) -> Artifact:
    """record counts by normalized (a1, a2, a3) and rank"""
    tally = stats.tally_rank_by_triple(ctx.records)
    columns = (
        ("a1", "normalized a1"),
        ("a2", "normalized a2"),
        ("a3", "normalized a3"),
        *((f"r{r}", f"curves of rank {r}") for r in tally.ranks),
    )
    return Artifact("stats", columns=columns, rows=tally.rows())


def fig2a(ctx: Context) -> Artifact:
    """probability mass of a4 and a6"""
    rows = []
    for name in ("a4", "a6"):
        support, mass = stats.pmf([getattr(r, name) for r in ctx.records])
        rows.extend((name, int(v), float(m)) for v, m in zip(support, mass))
    columns = (("coefficient", "a4 or a6"), ("value", "coefficient value"), ("probability", "mass"))
    return Artifact("figure", columns=columns, rows=rows)


def fig2b(ctx: Context) -> Artifact:
    """joint symlog density of (a4, a6)"""
    nbins = ctx.stats["nbins"]
    joint = stats.joint_histogram(stats.column(ctx.records, "a4"), stats.column(ctx.records, "a6"), nbins)
    return Artifact("figure", {"binning": "symlog", "nbins": nbins, **_joint_payload(joint)})


def fig2c(ctx: Context) -> Artifact:
    """log10 d on a4 > 0, a6 > 0 with its scaled Beta fit"""
    positive = [r for r in ctx.records if r.a4 > 0 and r.a6 > 0]
    x = stats.log_d(positive)
    fit = fit_family("beta", x, ctx.stats["restarts"], ctx.seed)
    hist = stats.histogram(x, "linear", ctx.stats["nbins"])
    return Artifact(
        "fit",
        {
            "quantity": "log10 sqrt(a4^2 + a6^2), a4 > 0 and a6 > 0",
            "histogram": _hist_payload(hist),
            "fit": _fit(fit),
            "curve": _curve(fit, x, ctx.stats["curve_points"]),
            "restarts": ctx.stats["restarts"],
            "seed": ctx.seed,
        },
    )


def fig3(ctx: Context) -> Artifact:
    """per-rank joint densities and rank pair permutation tests"""
    nbins = ctx.stats["nbins"]
    joints = {}
    for rank in sorted({r.rank for r in ctx.records}):
        group = [r for r in ctx.records if r.rank == rank]
        joints[str(rank)] = _joint_payload(
            stats.joint_histogram(stats.column(group, "a4"), stats.column(group, "a6"), nbins)
        )
    tests = stats.rank_pair_tests(ctx.records, ctx.stats["n_perm"], ctx.seed, ctx.stats["per_rank"])
    return Artifact(
        "perm",
        {
            "joints": joints,
            "statistic": "energy distance on (slog a4, slog a6)",
            "n_perm": ctx.stats["n_perm"],
            "per_rank": ctx.stats["per_rank"],
            "seed": ctx.seed,
            "tests": [
                {"ranks": [r0, r1], "statistic": t.statistic, "p_value": t.p_value}
                for (r0, r1), t in tests.items()
            ],
        },
    )


def fig3e(ctx: Context) -> Artifact:
    """per-rank Beta and Gamma fits of log10 d"""
    fits = stats.fit_log_d_by_rank(ctx.records, ctx.stats["restarts"], ctx.seed)
    payload = {
        str(rank): {**entry, "beta": _fit(entry["beta"]), "gamma": _fit(entry["gamma"])}  # type: ignore[arg-type]
        for rank, entry in fits.items()
    }
    return Artifact("fit", {"by_rank": payload, "restarts": ctx.stats["restarts"], "seed": ctx.seed})


def fig4(ctx: Context) -> Artifact:
    """boxplot summaries per rank"""
    names = ("a1", "a2", "a3", "slog_a4", "slog_a6", "conductor", "torsion_order",
             "tamagawa_product", "omega", "regulator", "sha_order")  # fmt: skip
    return Artifact(
        "figure",
        {name: _keyed({r: s._asdict() for r, s in stats.boxplots_by_rank(ctx.records, name).items()}) for name in names},
    )


def rhs_fit(ctx: Context) -> Artifact:
    """RHS samples with the scaled Beta fit and its density"""
    x = stats.rhs_values(ctx.records)
    fit = fit_family("beta", x, ctx.stats["restarts"], ctx.seed)
    return Artifact(
        "fit",
        {
            "samples": x,
            "histogram": _hist_payload(stats.histogram(x, "linear", ctx.stats["nbins"])),
            "fit": _fit(fit),
            "curve": _curve(fit, x, ctx.stats["curve_points"]),
            "seed": ctx.seed,
        },
    )


def rhs_rank(ctx: Context) -> Artifact:
    """AIC-ranked family fits of the RHS per rank"""
    families = ctx.stats["families"]
    fits = stats.rhs_fits_by_rank(ctx.records, families, ctx.stats["restarts"], ctx.seed)
    return Artifact(
        "fit",
        {
            "families": {f: FAMILY_NOTES.get(f, "") for f in families},
            "by_rank": {str(rank): [_fit(r) for r in ranked] for rank, ranked in fits.items()},
            "restarts": ctx.stats["restarts"],
            "seed": ctx.seed,
        },
    )


def rhs_conductor(ctx: Context) -> Artifact:
    """RHS medians by rank and by conductor bin"""
    rows = [("rank", rank, rank + 1, sum(1 for r in ctx.records if r.rank == rank), median)
            for rank, median in stats.rhs_medians_by_rank(ctx.records).items()]  # fmt: skip
    rows += [("conductor", *row) for row in stats.rhs_medians_by_conductor(ctx.records, ctx.stats["conductor_bins"])]
    columns = (
        ("group", "rank or conductor"),
        ("lo", "lower bound, inclusive"),
        ("hi", "upper bound, exclusive"),
        ("count", "curves in the group"),
        ("median_rhs", "median of |Sha| Omega R prod(c_p) / |T|^2"),
    )
    return Artifact("stats", columns=columns, rows=rows)


def fig8(ctx: Context) -> Artifact:
    """Pearson and Spearman correlation of the curve quantities"""
    names = ("a1", "a2", "a3", "slog_a4", "slog_a6", "conductor", "rank", "torsion_order",
             "tamagawa_product", "omega", "regulator", "sha_order")  # fmt: skip
    columns = {n: stats.column(ctx.records, n) for n in names}
    out = {}
    for method in ("pearson", "spearman"):
        corr = stats.correlation_matrix(columns, method)
        out[method] = {"names": list(corr.names), "matrix": corr.matrix, "undefined": list(corr.undefined)}
    return Artifact("stats", out)


def _group_table(ctx: Context, value: str) -> Artifact:
    rows = [
        (row.a1, row.a2, row.a3, row.rank, row.size, row.mean, row.std, row.median, row.zero_count)
        for row in stats.group_stats(ctx.records, value)
    ]
    columns = (
        ("a1", "normalized a1"),
        ("a2", "normalized a2"),
        ("a3", "normalized a3"),
        ("rank", "rank r"),
        ("size", "curves in the cell"),
        ("mean", f"mean of {value}"),
        ("std", f"sample standard deviation of {value}, nan for one curve"),
        ("median", f"median of {value}"),
        ("zero_entries", f"curves with {value} = 0"),
    )
    return Artifact("groupstats", columns=columns, rows=rows)


def table1(ctx: Context) -> Artifact:
    """a4 statistics per (a1, a2, a3, rank)"""
    return _group_table(ctx, "a4")


def table2(ctx: Context) -> Artifact:
    """a6 statistics per (a1, a2, a3, rank)"""
    return _group_table(ctx, "a6")


# ----------------------------topology reproducers----------------------------


def _grid(ctx: Context, report: tda.BarcodeReport) -> np.ndarray:
    return np.linspace(0.0, report.eps, ctx.tda["grid_points"])


def _barcode_payload(ctx: Context, report: tda.BarcodeReport) -> dict[str, Any]:
    return {
        "settings": report.settings,
        "eps": report.eps,
        "n_simplices": report.n_simplices,
        "bars": report.barcode.to_records(),
        "betti": tda.betti_grid(report.barcode, _grid(ctx, report)),
    }


def barcode_artifact(ctx: Context, columns: Sequence[str]) -> Artifact:
    n = min(ctx.tda["n_sample"], len(ctx.records))
    report = tda.barcode_pipeline(
        ctx.records, columns, None, n, ctx.seed, ctx.tda["max_dim"], ctx.tda["max_eps"], ctx.tda["budget"]
    )
    return Artifact("barcode", _barcode_payload(ctx, report))


def fig10a(ctx: Context) -> Artifact:
    """barcode of the five coefficient cloud"""
    return barcode_artifact(ctx, tda.COEFF_COLUMNS)


def fig10b(ctx: Context) -> Artifact:
    """barcode of the (slog a4, slog a6) cloud"""
    return barcode_artifact(ctx, tda.PAIR_COLUMNS)


def split_artifact(ctx: Context, split: str, columns: Sequence[str], size_key: str) -> Artifact:
    reports = tda.split_barcodes(
        ctx.records,
        split,
        columns,
        None,
        ctx.tda[size_key],
        ctx.seed,
        ctx.tda["max_dim"],
        ctx.tda["max_eps"],
        ctx.tda["budget"],
        ctx.source,
    )
    return Artifact("barcode", {"split": split, "groups": {k: _barcode_payload(ctx, r) for k, r in reports.items()}})


def barcodes_rank(ctx: Context) -> Artifact:
    """(N, |T|, prod c_p, Omega, R, |Sha|) barcodes per rank"""
    return split_artifact(ctx, "rank", tda.BSD_COLUMNS, "split_sample")


def barcodes_parity(ctx: Context) -> Artifact:
    """(N, r, RHS) barcodes for even and odd conductors"""
    return split_artifact(ctx, "parity", tda.NRF_COLUMNS, "parity_sample")


def barcodes_mod3(ctx: Context) -> Artifact:
    """(N, r, RHS) barcodes by conductor mod 3"""
    return split_artifact(ctx, "mod3", tda.NRF_COLUMNS, "split_sample")


# ----------------------------learning reproducers----------------------------


def _performance(ctx: Context, features: str, targets: Sequence[str], models: Sequence[str]) -> Artifact:
    table: dict[str, dict[str, Any]] = {}
    for target in targets:
        table[target] = {}
        for model in models:
            report = experiments.run_experiment(ctx.records, ctx.experiment(target, features, model))
            table[target][model] = {"mean": report.mean, "std": report.std, "importances": report.importances}
    return Artifact("ml", {"features": features, "settings": ctx.gbt_params().as_dict(), "k": ctx.ml["k"], "table": table})


def table3(ctx: Context) -> Artifact:
    """regression from the coefficients: GBT, dummy, linear"""
    return _performance(ctx, "coeffs", experiments.REGRESSION_TARGETS, ("gbt", "dummy", "linear"))


def table5(ctx: Context) -> Artifact:
    """classification from the coefficients: GBT, dummy, logistic"""
    return _performance(ctx, "coeffs", experiments.CLASS_TARGETS, ("gbt", "dummy", "logistic"))


def table7(ctx: Context) -> Artifact:
    """regression from all other quantities"""
    return _performance(ctx, "mixed", experiments.REGRESSION_TARGETS, ("gbt", "dummy", "linear"))


def table9(ctx: Context) -> Artifact:
    """classification from all other quantities"""
    return _performance(ctx, "mixed", experiments.CLASS_TARGETS, ("gbt", "dummy", "logistic"))


def _ols_rows(result: Any) -> list[dict[str, Any]]:
    return [c._asdict() for c in result.coefficients]


def table4(ctx: Context) -> Artifact:
    """OLS coefficients for |Sha| from the coefficients, plus model statistics"""
    result = experiments.ols_table(ctx.records, "sha_order", "coeffs")
    models = {
        target: experiments.ols_table(ctx.records, target, "coeffs").model_stats()
        for target in experiments.REGRESSION_TARGETS
    }
    return Artifact("ml", {"target": "sha_order", "coefficients": _ols_rows(result), "model_stats": models})


def _confusions(ctx: Context, features: str) -> Artifact:
    out = {}
    for target in experiments.CLASS_TARGETS:
        report = experiments.run_experiment(ctx.records, ctx.experiment(target, features))
        out[target] = {
            "classes": list(report.classes),
            "confusion": report.confusion,
            "confusion_minus_dummy": report.confusion_diff,
            "importances": report.importances,
        }
    return Artifact("ml", {"features": features, "normalize": "column", "targets": out})


def fig11(ctx: Context) -> Artifact:
    """importances and column-normalized confusion matrices, coefficients only"""
    return _confusions(ctx, "coeffs")


def fig12(ctx: Context) -> Artifact:
    """out-of-fold true vs predicted values, mixed features"""
    rows = []
    for target in experiments.REGRESSION_TARGETS:
        for model in ("gbt", "linear"):
            report = experiments.run_experiment(ctx.records, ctx.experiment(target, "mixed", model))
            rows.extend((target, model, *row) for row in report.true_vs_predicted())
    columns = (
        ("target", "predicted quantity"),
        ("model", "gbt or linear"),
        ("label", "curve label"),
        ("true", "database value"),
        ("predicted", "out-of-fold prediction"),
    )
    return Artifact("ml", columns=columns, rows=rows)


def fig13(ctx: Context) -> Artifact:
    """mixed-prediction hyperplanes in raw and z-scored feature space"""
    out = {}
    for target in experiments.REGRESSION_TARGETS:
        planes = experiments.hyperplanes(ctx.records, target, "mixed")
        out[target] = {
            space: {
                "equation": experiments.hyperplane_equation(result, target),
                "coefficients": _ols_rows(result),
                "model_stats": result.model_stats(),
            }
            for space, result in planes.items()
        }
    return Artifact("ml", {"features": "mixed", "hyperplanes": out})


def learning_curves(ctx: Context) -> Artifact:
    """GBT metric against training size for every target"""
    out = {}
    for target in (*experiments.REGRESSION_TARGETS, *experiments.CLASS_TARGETS):
        points = experiments.learning_curve(ctx.records, ctx.experiment(target, "coeffs"), ctx.ml["fractions"])
        out[target] = [
            {**p._asdict(), "mean": json_float(p.mean), "std": json_float(p.std)} for p in points
        ]
    return Artifact("ml", {"features": "coeffs", "settings": ctx.gbt_params().as_dict(), "curves": out})


# ----------------------------registry----------------------------


class Reproducer(NamedTuple):
    func: Callable[[Context], Artifact]
    job: str  # stats | tda | ml

    @property
    def description(self) -> str:
        return (self.func.__doc__ or "").strip()


REPRODUCE: dict[str, Reproducer] = {
    "fig1": Reproducer(fig1, "stats"),
    "table-tally": Reproducer(table_tally, "stats"),
    "fig2a": Reproducer(fig2a, "stats"),
    "fig2b": Reproducer(fig2b, "stats"),
    "fig2c": Reproducer(fig2c, "stats"),
    "fig3": Reproducer(fig3, "stats"),
    "fig3e": Reproducer(fig3e, "stats"),
    "fig4": Reproducer(fig4, "stats"),
    "rhs-fit": Reproducer(rhs_fit, "stats"),
    "rhs-rank": Reproducer(rhs_rank, "stats"),
    "rhs-conductor": Reproducer(rhs_conductor, "stats"),
    "fig8": Reproducer(fig8, "stats"),
    "table1": Reproducer(table1, "stats"),
    "table2": Reproducer(table2, "stats"),
    "fig10a": Reproducer(fig10a, "tda"),
    "fig10b": Reproducer(fig10b, "tda"),
    "barcodes-rank": Reproducer(barcodes_rank, "tda"),
    "barcodes-parity": Reproducer(barcodes_parity, "tda"),
    "barcodes-mod3": Reproducer(barcodes_mod3, "tda"),
    "table3": Reproducer(table3, "ml"),
    "table4": Reproducer(table4, "ml"),
    "table5": Reproducer(table5, "ml"),
    "table7": Reproducer(table7, "ml"),
    "table9": Reproducer(table9, "ml"),
    "fig11": Reproducer(fig11, "ml"),
    "fig12": Reproducer(fig12, "ml"),
    "fig13": Reproducer(fig13, "ml"),
    "learning-curves": Reproducer(learning_curves, "ml"),
}

# the `bsdlab stats --job` names
STATS_JOBS = {
    "tally": "table-tally",
    "pmf": "fig2a",
    "fit-d": "fig3e",
    "fit-rhs": "rhs-rank",
    "perm": "fig3",
    "corr": "fig8",
    "groupstats": "table1",
}


def reproduce(target_id: str, ctx: Context, out_dir: str | Path) -> Path:
    """write the data behind one figure or table into out_dir"""
    if target_id not in REPRODUCE:
        raise ConfigError(f"unknown id {target_id!r}, valid ids: {', '.join(REPRODUCE)}")
    artifact = REPRODUCE[target_id].func(ctx)
    path = artifact.write(Path(out_dir) / f"{target_id}{artifact.suffix}")
    log.info(f"{target_id}: wrote {path}")
    return path


# ----------------------------running----------------------------


def expected_rank_issues(records: Sequence[CurveRecord], expected: Sequence[Sequence[int]]) -> list[Issue]:
    """check that curves with given a-invariants carry the given ranks"""
    by_ainvs = {r.ainvs: r for r in records}
    issues = []
    for row in expected:
        if len(row) != 6:
            raise ConfigError(f"expected_ranks rows are [a1, a2, a3, a4, a6, rank], got {row}")
        *ainvs, rank = (int(v) for v in row)
        record = by_ainvs.get(tuple(ainvs))
        if record is None:
            issues.append(Issue(None, None, "ainvs", f"no record with a-invariants {ainvs}"))
        elif record.rank != rank:
            issues.append(Issue(None, record.label, "rank", f"expected rank {rank}, found {record.rank}"))
    return issues


def validation_report(ctx: Context, recompute: bool) -> Artifact:
    issues = validate_all(ctx.records, recompute)
    issues += expected_rank_issues(ctx.records, ctx.ec["expected_ranks"])
    return Artifact(
        "validation",
        {
            "source": ctx.source,
            "n_records": len(ctx.records),
            "recompute": recompute,
            "issues": [i.as_dict() for i in issues],
        },
    )


def _job_ids(config: JobConfig, job: str) -> list[str]:
    if job == "reproduce":
        return list(config.reproduce)
    return [rid for rid, rep in REPRODUCE.items() if rep.job == job]


def _run_job(config: JobConfig, ctx: Context, job: str) -> dict[str, Any]:
    artifacts: list[str] = []
    try:
        if job == "validate":
            path = validation_report(ctx, bool(config.ec["recompute"])).write(config.output_dir / "validation.json")
            artifacts.append(path.name)
        else:
            for rid in _job_ids(config, job):
                artifacts.append(str(reproduce(rid, ctx, config.output_dir).relative_to(config.output_dir)))
    except BsdlabError as err:
        log.error(f"job {job} failed: {err}")
        return _failed(config, job, err, artifacts)
    except Exception as err:  # pylint: disable=broad-exception-caught
        log.exception(f"job {job} crashed")
        return _failed(config, job, err, artifacts)
    return {"status": "ok", "artifacts": artifacts}


def _failed(config: JobConfig, job: str, err: Exception, artifacts: list[str]) -> dict[str, Any]:
    error = f"{type(err).__name__}: {err}"
    marker = write_json(config.output_dir / f"{job}.failed.json", "manifest", {"job": job, "error": error})
    return {"status": "failed", "error": error, "artifacts": artifacts, "marker": marker.name}


def run(config: JobConfig) -> tuple[int, Path]:
    """run every configured job; exit status 0 iff all succeed"""
    if not config.cache.exists():
        raise ConfigError(f"cache {config.cache} does not exist")
    started = datetime.now(timezone.utc)
    records = read_cache(config.cache)
    ctx = Context.from_config(config, records)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    log.info(f"running {config.name}: {len(records)} records, jobs {list(config.jobs)}")

    # jobs run one after another; each fans out internally
    results = {job: _run_job(config, ctx, job) for job in config.jobs}
    failed = sorted(job for job, res in results.items() if res["status"] != "ok")

    manifest = write_json(
        config.output_dir / MANIFEST,
        "manifest",
        {
            "name": config.name,
            "version": __version__,
            "config_sha256": config.digest,
            "config": config.as_dict(),
            "seed": config.seed,
            "records": len(records),
            "started": started.isoformat(),
            "finished": datetime.now(timezone.utc).isoformat(),
            "jobs": results,
            "failed": failed,
        },
    )
    return (1 if failed else 0), manifest


def report(path: str | Path) -> list[str]:
    """one line per job of a run manifest (or of the manifest in a directory)"""
    path = Path(path)
    if path.is_dir():
        path = path / MANIFEST
    if not path.exists():
        raise ConfigError(f"no manifest at {path}")
    data = read_json(path)
    if not str(data.get("schema", "")).startswith("bsdlab.manifest/"):
        raise ConfigError(f"{path} is not a run manifest")
    lines = [
        f"{data['name']}: bsdlab {data['version']}, seed {data['seed']}, "
        f"{data['records']} records, config {data['config_sha256'][:12]}"
    ]
    for job, res in data["jobs"].items():
        status = res["status"]
        detail = f"{len(res['artifacts'])} artifacts" if status == "ok" else res.get("error", "")
        lines.append(f"  {job:<10} {status:<7} {detail}")
    return lines


def load_context(cache: str | Path, seed: int = 0, **sections: Mapping[str, Any]) -> Context:
    """context for single commands: cache records plus section overrides"""
    cache = Path(cache)
    if not cache.exists():
        raise ConfigError(f"cache {cache} does not exist")
    ctx = Context(read_cache(cache), str(cache), seed)
    for name, overrides in sections.items():
        unknown = set(overrides) - set(SECTION_DEFAULTS[name])
        if unknown:
            raise ConfigError(f"unknown {name} settings {sorted(unknown)}")
        setattr(ctx, name, {**SECTION_DEFAULTS[name], **overrides})
    return ctx
