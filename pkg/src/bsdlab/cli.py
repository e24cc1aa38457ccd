#!/usr/bin/env python3
"""
bsdlab CLI
"""
from pathlib import Path

import click

from bsdlab import __version__
from bsdlab.utils import run_main

FEATURE_CHOICES = ("coeffs", "mixed")
MODEL_CHOICES = ("gbt", "linear", "logistic", "dummy")
CLOUD_CHOICES = ("coeffs", "pair", "bsd", "nrf")
STATS_CHOICES = ("tally", "pmf", "fit-d", "fit-rhs", "perm", "corr", "groupstats")

# short target names accepted next to record field names
TARGET_ALIASES = {
    "r": "rank",
    "N": "conductor",
    "T": "torsion_order",
    "cp": "tamagawa_product",
    "R": "regulator",
    "sha": "sha_order",
    "omega": "omega",
}


@click.group()
@click.version_option(version=__version__)
def cli() -> None:
    pass  # pragma: no cover


@cli.command()
def info() -> None:
    """Print package info"""
    print(__version__)


@cli.command()
@click.option("--input", "input_path", required=True, type=click.Path(exists=True), help="curve table")
@click.option("--map", "map_name", default=None, help="column map file or shipped name (allbsd, curves_csv)")
@click.option("--gens", default=None, type=click.Path(exists=True), help="allgens-style generator file")
@click.option("--out", required=True, help="cache file to write")
@click.option("--csv", "csv_out", default=None, help="also write the CSV interchange file")
@click.option("--issues", default=None, help="JSON file for row issues")
def ingest(
    input_path: str, map_name: str | None, gens: str | None, out: str, csv_out: str | None, issues: str | None
) -> None:
    """Parse a curve table into a binary cache"""
    import logging

    from bsdlab import ingest as ing
    from bsdlab.outputs import write_json

    def main() -> int:
        cmap = ing.load_column_map(map_name)
        table = ing.parse_table(input_path, cmap)
        records, found = table.records, list(table.issues)
        if gens:
            generators, gen_issues = ing.parse_generators(gens, ing.load_column_map("allgens"))
            records = ing.merge_generators(records, generators)
            found += gen_issues
        ing.write_cache(records, out)
        if csv_out:
            ing.write_csv(records, csv_out)
        if issues:
            write_json(issues, "validation", {"source": input_path, "issues": [i.as_dict() for i in found]})
        logging.info(f"{len(records)} records cached in {out}, {len(found)} row issues")
        return 0

    run_main(main)


@cli.command()
@click.option("--cache", required=True, type=click.Path(exists=True))
@click.option("--report", "report_path", required=True, help="JSON validation report")
@click.option("--recompute", is_flag=True, help="recompute periods, regulators and local factors")
def validate(cache: str, report_path: str, recompute: bool) -> None:
    """Check cached records against the curve invariants"""
    from bsdlab import jobs

    def main() -> int:
        ctx = jobs.load_context(cache)
        artifact = jobs.validation_report(ctx, recompute)
        artifact.write(report_path)
        return 0

    run_main(main)


@cli.command()
@click.option("--cache", required=True, type=click.Path(exists=True))
@click.option("--job", "job_name", required=True, type=click.Choice(STATS_CHOICES))
@click.option("--out", required=True, help="output file, .json or .csv by job")
@click.option("--seed", default=0, show_default=True)
@click.option("--n-perm", default=999, show_default=True, help="permutations per test")
def stats(cache: str, job_name: str, out: str, seed: int, n_perm: int) -> None:
    """Statistics of the curve table"""
    from bsdlab import jobs

    def main() -> int:
        ctx = jobs.load_context(cache, seed, stats={"n_perm": n_perm})
        jobs.REPRODUCE[jobs.STATS_JOBS[job_name]].func(ctx).write(out)
        return 0

    run_main(main)


@cli.command()
@click.option("--cache", required=True, type=click.Path(exists=True))
@click.option(
    "--columns",
    "--cloud",
    "columns",
    default="coeffs",
    show_default=True,
    help=f"preset ({', '.join(CLOUD_CHOICES)}) or comma separated record fields",
)
@click.option("--split", default="none", type=click.Choice(("none", "rank", "parity", "mod3")), show_default=True)
@click.option("--n", "--n-sample", "n_sample", default=100, show_default=True, help="points sampled per barcode")
@click.option("--maxdim", "--max-dim", "max_dim", default=1, show_default=True)
@click.option("--max-eps", default="auto", show_default=True, help="number, 'auto' or 'enclosing'")
@click.option("--seed", default=0, show_default=True)
@click.option("--out", required=True, help="barcode JSON")
def tda(
    cache: str, columns: str, split: str, n_sample: int, max_dim: int, max_eps: str, seed: int, out: str
) -> None:
    """Persistence barcodes of a record point cloud"""
    from bsdlab import jobs
    from bsdlab import tda as topo
    from bsdlab.errors import ConfigError

    presets = {
        "coeffs": topo.COEFF_COLUMNS,
        "pair": topo.PAIR_COLUMNS,
        "bsd": topo.BSD_COLUMNS,
        "nrf": topo.NRF_COLUMNS,
    }
    cloud = presets.get(columns) or tuple(c.strip() for c in columns.split(",") if c.strip())
    if not cloud:
        raise click.BadParameter("no columns given", param_hint="--columns")

    def main() -> int:
        eps: float | str | None
        if max_eps == "auto":
            eps = "auto"
        elif max_eps == "enclosing":
            eps = None
        else:
            try:
                eps = float(max_eps)
            except ValueError as err:
                raise ConfigError(f"--max-eps must be a number, 'auto' or 'enclosing', got {max_eps!r}") from err
        ctx = jobs.load_context(
            cache,
            seed,
            tda={"n_sample": n_sample, "split_sample": n_sample, "parity_sample": n_sample,
                 "max_dim": max_dim, "max_eps": eps},  # fmt: skip
        )
        if split == "none":
            artifact = jobs.barcode_artifact(ctx, cloud)
        else:
            artifact = jobs.split_artifact(ctx, split, cloud, "split_sample")
        artifact.write(out)
        return 0

    run_main(main)


@cli.command()
@click.option("--cache", required=True, type=click.Path(exists=True))
@click.option("--target", required=True, help="record field or alias (r, N, T, cp, R, sha, omega)")
@click.option("--features", default="coeffs", type=click.Choice(FEATURE_CHOICES), show_default=True)
@click.option("--model", default="gbt", type=click.Choice(MODEL_CHOICES), show_default=True)
@click.option("--k", default=5, show_default=True, help="cross-validation folds")
@click.option("--seed", default=0, show_default=True)
@click.option("--n-sample", default=0, show_default=True, help="subsample size, 0 for all records")
@click.option("--raw", is_flag=True, help="feed a4 and a6 without slog")
@click.option("--n-trees", default=200, show_default=True)
@click.option("--max-depth", default=6, show_default=True)
@click.option("--out", required=True, help="report JSON")
def ml(
    cache: str,
    target: str,
    features: str,
    model: str,
    k: int,
    seed: int,
    n_sample: int,
    raw: bool,
    n_trees: int,
    max_depth: int,
    out: str,
) -> None:
    """Cross-validated prediction of one curve quantity"""
    from bsdlab import experiments, jobs
    from bsdlab.outputs import write_json

    def main() -> int:
        ctx = jobs.load_context(
            cache,
            seed,
            ml={"k": k, "n_sample": n_sample, "transform": "raw" if raw else "slog",
                "n_trees": n_trees, "max_depth": max_depth},  # fmt: skip
        )
        spec = ctx.experiment(TARGET_ALIASES.get(target, target), features, model)
        report = experiments.run_experiment(ctx.records, spec)
        write_json(out, "ml", report.to_dict())
        return 0

    run_main(main)


@cli.command()
@click.option("--curve", "label", required=True, help="curve label in the cache")
@click.option("--cache", required=True, type=click.Path(exists=True))
@click.option("--pmax", default=100, show_default=True, help="largest prime")
@click.option("--out", default=None, help="CSV file, stdout when omitted")
def ap(label: str, cache: str, pmax: int, out: str | None) -> None:
    """Local factors a_p of one curve"""
    from bsdlab.errors import ConfigError
    from bsdlab.ingest import read_cache
    from bsdlab.outputs import write_csv
    from bsdlab.reduction import aplist

    def main() -> int:
        record = next((r for r in read_cache(cache) if r.label == label), None)
        if record is None:
            raise ConfigError(f"no curve {label!r} in {cache}")
        factors = aplist(record.curve, pmax, record.conductor)
        if out is None:
            for f in factors:
                print(f"{f.p:>6} {f.reduction.value:<14} {f.a_p:>6}")
            return 0
        columns = (("p", "prime"), ("reduction", "reduction type at p"), ("a_p", "trace of Frobenius"))
        write_csv(out, "ap", columns, [(f.p, f.reduction.value, f.a_p) for f in factors])
        return 0

    run_main(main)


@cli.command()
@click.argument("target_id", required=False)
@click.option("--cache", type=click.Path(exists=True), help="record cache")
@click.option("--out-dir", default=".", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--list", "list_ids", is_flag=True, help="list the known ids")
def reproduce(target_id: str | None, cache: str | None, out_dir: str, seed: int, list_ids: bool) -> None:
    """Write the data behind a figure or table"""
    from bsdlab import jobs
    from bsdlab.errors import ConfigError

    def main() -> int:
        if list_ids or target_id is None:
            for rid, rep in jobs.REPRODUCE.items():
                print(f"{rid:<16} {rep.description}")
            return 0
        if target_id not in jobs.REPRODUCE:
            raise ConfigError(f"unknown id {target_id!r}, valid ids: {', '.join(jobs.REPRODUCE)}")
        if cache is None:
            raise ConfigError("--cache is required")
        ctx = jobs.load_context(cache, seed)
        jobs.reproduce(target_id, ctx, Path(out_dir))
        return 0

    run_main(main)


@cli.command()
@click.argument("config", type=click.Path())
def run(config: str) -> None:
    """Run the jobs of a TOML job config"""
    from bsdlab import jobs

    def main() -> int:
        job_config = jobs.load_job_config(config)
        code, manifest = jobs.run(job_config)
        for line in jobs.report(manifest):
            print(line)
        return code

    run_main(main)


@cli.command()
@click.argument("manifest", type=click.Path(exists=True))
def report(manifest: str) -> None:
    """Summarise a run directory or manifest"""
    from bsdlab import jobs

    def main() -> int:
        for line in jobs.report(manifest):
            print(line)
        return 0

    run_main(main)


if __name__ == "__main__":
    cli()  # pragma: no cover
