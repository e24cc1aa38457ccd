from pathlib import Path

import orjson
import pytest
from click.testing import CliRunner, Result

from bsdlab import __version__
from bsdlab.cli import cli
from bsdlab.ingest import read_cache


def invoke(*args: str) -> Result:
    return CliRunner().invoke(cli, [str(a) for a in args])


def load(path: Path) -> dict:
    return orjson.loads(path.read_bytes())


def test_info() -> None:
    result = invoke("info")
    assert result.exit_code == 0
    assert __version__ in result.stdout


def test_ingest(tmp_path: Path, allbsd_file: Path, allgens_file: Path) -> None:
    cache, table, issues = tmp_path / "c.bsdc", tmp_path / "c.csv", tmp_path / "issues.json"
    result = invoke(
        "ingest", "--input", allbsd_file, "--map", "allbsd", "--gens", allgens_file,
        "--out", cache, "--csv", table, "--issues", issues,
    )  # fmt: skip
    assert result.exit_code == 0, result.output

    records = {r.label: r for r in read_cache(cache)}
    assert sorted(records) == ["11a1", "314226b1", "37a1", "389a1"]
    assert len(records["389a1"].generators) == 2
    assert table.read_text().startswith("#")
    assert load(issues)["issues"] == []


def test_validate(tmp_path: Path, cache_file: Path) -> None:
    report = tmp_path / "validation.json"
    result = invoke("validate", "--cache", cache_file, "--report", report)
    assert result.exit_code == 0
    data = load(report)
    assert data["schema"] == "bsdlab.validation/1"
    assert data["n_records"] == 4


def test_corrupt_cache_exit_code(tmp_path: Path) -> None:
    junk = tmp_path / "junk.bsdc"
    junk.write_bytes(b"not a cache at all")
    result = invoke("validate", "--cache", junk, "--report", tmp_path / "r.json")
    assert result.exit_code == 3


def test_stats(tmp_path: Path, synthetic_cache: Path) -> None:
    out = tmp_path / "tally.csv"
    assert invoke("stats", "--cache", synthetic_cache, "--job", "tally", "--out", out).exit_code == 0
    assert out.read_text().startswith("# schema: bsdlab.stats/1")

    corr = tmp_path / "corr.json"
    assert invoke("stats", "--cache", synthetic_cache, "--job", "corr", "--out", corr).exit_code == 0
    assert set(load(corr)) == {"schema", "pearson", "spearman"}

    assert invoke("stats", "--cache", synthetic_cache, "--job", "plots", "--out", out).exit_code == 2


def test_tda(tmp_path: Path, synthetic_cache: Path) -> None:
    out = tmp_path / "bars.json"
    result = invoke("tda", "--cache", synthetic_cache, "--columns", "pair", "--n", 30, "--out", out)
    assert result.exit_code == 0, result.output
    data = load(out)
    assert sum(1 for bar in data["bars"] if bar["dim"] == 0) == 30

    split = tmp_path / "split.json"
    result = invoke(
        "tda", "--cache", synthetic_cache, "--columns", "nrf", "--split", "parity", "--n", 20, "--out", split
    )
    assert result.exit_code == 0, result.output
    assert sorted(load(split)["groups"]) == ["N even", "N odd"]

    bad = invoke("tda", "--cache", synthetic_cache, "--max-eps", "-1", "--n", 10, "--out", out)
    assert bad.exit_code == 2


def test_tda_documented_options(tmp_path: Path, synthetic_cache: Path) -> None:
    out = tmp_path / "bars.json"
    result = invoke(
        "tda", "--cache", synthetic_cache, "--columns", "a4,a6", "--split", "rank",
        "--n", 15, "--seed", 3, "--maxdim", 0, "--out", out,
    )  # fmt: skip
    assert result.exit_code == 0, result.output
    groups = load(out)["groups"]
    assert sorted(groups) == ["rank=0", "rank=1", "rank=2"]
    for group in groups.values():
        assert group["settings"]["columns"] == ["a4", "a6"]
        assert group["settings"]["n_sample"] == 15
        assert group["settings"]["max_dim"] == 0

    default = invoke("tda", "--cache", synthetic_cache, "--maxdim", 0, "--out", out)
    assert default.exit_code == 0, default.output
    assert load(out)["settings"]["n_sample"] == 100

    assert invoke("tda", "--cache", synthetic_cache, "--columns", "colour", "--out", out).exit_code == 2
    assert invoke("tda", "--cache", synthetic_cache, "--max-eps", "wide", "--out", out).exit_code == 2



def test_ml(tmp_path: Path, synthetic_cache: Path) -> None:
    out = tmp_path / "ml.json"
    result = invoke(
        "ml", "--cache", synthetic_cache, "--target", "r", "--model", "dummy", "--k", 3, "--n-sample", 60, "--out", out
    )
    assert result.exit_code == 0, result.output
    data = load(out)
    assert data["schema"] == "bsdlab.ml/1"
    assert data["settings"]["target"] == "rank"
    assert len(data["folds"]) == 3
    assert data["mean"]["mcc"] == 0

    wrong = invoke("ml", "--cache", synthetic_cache, "--target", "r", "--model", "linear", "--out", out)
    assert wrong.exit_code == 2


def test_ap(tmp_path: Path, cache_file: Path) -> None:
    result = invoke("ap", "--curve", "11a1", "--cache", cache_file, "--pmax", 13)
    assert result.exit_code == 0
    rows = [line.split() for line in result.stdout.splitlines() if len(line.split()) == 3]
    assert {int(p): int(a) for p, _, a in rows} == {2: -2, 3: -1, 5: 1, 7: -2, 11: 1, 13: 4}

    out = tmp_path / "ap.csv"
    assert invoke("ap", "--curve", "37a1", "--cache", cache_file, "--pmax", 5, "--out", out).exit_code == 0
    assert out.read_text().splitlines()[-3:] == ["2,good,-2", "3,good,-3", "5,good,-2"]

    assert invoke("ap", "--curve", "99z9", "--cache", cache_file).exit_code == 2


def test_reproduce(tmp_path: Path, synthetic_cache: Path) -> None:
    listed = invoke("reproduce", "--list")
    assert listed.exit_code == 0
    assert "table-tally" in listed.stdout and "learning-curves" in listed.stdout

    result = invoke("reproduce", "fig2a", "--cache", synthetic_cache, "--out-dir", tmp_path)
    assert result.exit_code == 0, result.output
    assert (tmp_path / "fig2a.csv").exists()

    assert invoke("reproduce", "fig99", "--cache", synthetic_cache).exit_code == 2
    assert invoke("reproduce", "fig1").exit_code == 2


@pytest.mark.parametrize("seed", [0, 5])
def test_run_and_report(tmp_path: Path, synthetic_cache: Path, seed: int) -> None:
    config = synthetic_cache.parent / "job.toml"
    config.write_text(
        f'version = 1\nseed = {seed}\ncache = "{synthetic_cache.name}"\noutput_dir = "out"\n'
        'reproduce = ["table1", "rhs-conductor"]\n'
    )
    result = invoke("run", config)
    assert result.exit_code == 0, result.output
    assert "reproduce" in result.stdout

    summary = invoke("report", tmp_path / "out")
    assert summary.exit_code == 0
    assert f"seed {seed}" in summary.stdout


def test_run_bad_config(tmp_path: Path) -> None:
    config = tmp_path / "job.toml"
    config.write_text("version = 1\n")
    assert invoke("run", config).exit_code == 2
    assert invoke("run", tmp_path / "absent.toml").exit_code == 2
