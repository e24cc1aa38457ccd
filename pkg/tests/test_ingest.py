# pylint: disable=redefined-outer-name
from dataclasses import replace
from pathlib import Path

import pytest

from bsdlab import ingest
from bsdlab.ec_core import RationalPoint
from bsdlab.errors import ConfigError
from bsdlab.ingest import Issue, SampleSizeError, ViewFilter

from tests.conftest import LARGE_A4, LARGE_A6, make_record, synthetic_records


def violations(issues: list[Issue]) -> set[str]:
    return {i.violation for i in issues}


def test_parse_allbsd(allbsd_file: Path) -> None:
    table = ingest.parse_table(allbsd_file)
    assert table.issues == []
    assert [r.label for r in table.records] == ["11a1", "37a1", "389a1", "314226b1"]

    rec = table.records[3]
    assert rec.ainvs == (1, -1, 0, -453981, 117847851)
    assert rec.conductor == 314226
    assert rec.rank == 0
    assert rec.regulator == 1
    assert rec.omega == pytest.approx(0.56262)
    assert rec.tamagawa_product == 3
    assert rec.torsion_order == 3
    assert rec.sha_order == 1
    assert rec.generators is None


def test_parse_empty(tmp_path: Path) -> None:
    path = tmp_path / "empty"
    path.write_text("")
    table = ingest.parse_table(path)
    assert table.records == [] and table.issues == []


def test_row_errors(tmp_path: Path, allbsd_file: Path) -> None:
    lines = allbsd_file.read_text().splitlines()
    lines.insert(1, "14 a 1 [1,0,1,4,-6] two 6 6 0.99 1 1 1")
    lines.append(lines[0])
    path = tmp_path / "broken"
    path.write_text("\n".join(lines))

    table = ingest.parse_table(path)
    assert len(table.records) == 4
    bad, dup = table.issues
    assert (bad.line, bad.label, bad.field) == (2, "14a1", "rank")
    assert dup.line == 6
    assert dup.violation == "duplicate label, first seen on line 1"


def test_missing_column(tmp_path: Path, allbsd_file: Path) -> None:
    cmap = tmp_path / "nomega.toml"
    cmap.write_text(
        'format_version = 1\n[columns]\nlabel = [0, 1, 2]\nainvs = 3\nconductor = 0\nrank = 4\n'
        "torsion_order = 5\ntamagawa_product = 6\nregulator = 9\nsha_order = 10\n"
    )
    with pytest.raises(ConfigError, match="omega"):
        ingest.parse_table(allbsd_file, ingest.load_column_map(cmap))


def test_column_map_errors(tmp_path: Path) -> None:
    with pytest.raises(ConfigError):
        ingest.load_column_map(tmp_path / "nope.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("format_version = 7\n")
    with pytest.raises(ConfigError, match="format_version"):
        ingest.load_column_map(bad)


def test_parse_point() -> None:
    assert ingest.parse_point("[-1:1:1]") == RationalPoint(-1, 1)
    assert ingest.parse_point("[0:1:0]").is_infinity
    with pytest.raises(ValueError):
        ingest.parse_point("(1,2)")


def test_generators(allbsd_file: Path, allgens_file: Path) -> None:
    gens, issues = ingest.parse_generators(allgens_file)
    assert issues == []
    assert gens["11a1"] == ()
    assert gens["389a1"] == (RationalPoint(-1, 1), RationalPoint(0, 0))

    records = ingest.merge_generators(ingest.parse_table(allbsd_file).records, gens)
    by_label = {r.label: r for r in records}
    assert by_label["37a1"].generators == (RationalPoint(0, 0),)
    assert by_label["314226b1"].generators is None
    assert all(ingest.validate(r) == [] for r in records)


def test_csv_round_trip(tmp_path: Path, curves) -> None:  # type: ignore[no-untyped-def]
    big = make_record("big", (1, 0, 0, LARGE_A4, LARGE_A6))
    records = [*curves.values(), big]
    path = ingest.write_csv(records, tmp_path / "curves.csv")

    table = ingest.parse_table(path, ingest.load_column_map("curves_csv"))
    assert table.issues == []
    assert table.records == records
    assert table.records[-1].a6 == LARGE_A6


def test_validate_clean(curves) -> None:  # type: ignore[no-untyped-def]
    for record in curves.values():
        assert ingest.validate(record) == []


@pytest.mark.parametrize(
    "changes,violation",
    [
        ({"torsion_order": 11}, "torsion order outside Mazur set"),
        ({"regulator": 2.0}, "rank-0 regulator must be 1"),
        ({"rank": 5}, "rank outside 0..4"),
        ({"sha_order": 1.5}, "sha order not integral"),
        ({"omega": 0.0}, "omega must be positive"),
        ({"a1": 2}, "a-invariants not normalized"),
        ({"conductor": 13}, "prime 13 of the conductor does not divide the discriminant"),
    ],
)
def test_validate_violations(curves, changes: dict, violation: str) -> None:  # type: ignore[no-untyped-def]
    record = replace(curves["11a1"], **changes)
    assert violation in violations(ingest.validate(record, line=3))
    assert all(i.line == 3 and i.label == "11a1" for i in ingest.validate(record, line=3))


def test_validate_generators(curves) -> None:  # type: ignore[no-untyped-def]
    record = replace(curves["37a1"], generators=(RationalPoint(1, 1),))
    assert "generator [1:1:1] not on curve" in violations(ingest.validate(record))

    record = replace(curves["389a1"], generators=(RationalPoint(0, 0),))
    assert "1 generators for rank 2" in violations(ingest.validate(record))


def test_singular_record() -> None:
    record = make_record("cusp", (0, 0, 0, 0, 0))
    assert "discriminant is zero" in violations(ingest.validate(record))


def test_recheck(curves) -> None:  # type: ignore[no-untyped-def]
    for label in ("11a1", "37a1", "389a1"):
        assert ingest.recheck(curves[label]) == []

    wrong = replace(curves["37a1"], omega=6.5, regulator=0.06)
    fields = {i.field for i in ingest.recheck(wrong)}
    assert fields == {"omega", "regulator"}


def test_validate_all(curves) -> None:  # type: ignore[no-untyped-def]
    records = list(curves.values())
    records[2] = replace(records[2], torsion_order=13)
    issues = ingest.validate_all(records, recompute=True)
    assert [(i.line, i.label) for i in issues] == [(3, "389a1")]


def test_views_and_sampling() -> None:
    records = synthetic_records(400, seed=3)
    view = ingest.make_view(records, "synthetic", ViewFilter(rank=2))
    assert len(view) > 100
    assert all(r.rank == 2 for r in view)

    picked = ingest.sample(view, 100, seed=11)
    assert len(picked) == 100
    assert all(r.rank == 2 for r in picked)
    assert picked == ingest.sample(view, 100, seed=11)
    assert picked != ingest.sample(view, 100, seed=12)

    everything = ingest.sample(view, len(view), seed=1)
    assert sorted(r.label for r in everything) == sorted(r.label for r in view)

    sub = ingest.sample_view(view, 10, seed=11)
    assert sub.seed == 11
    assert list(sub.row_indices) == sorted(sub.row_indices)

    with pytest.raises(SampleSizeError):
        ingest.sample(view, len(view) + 1, seed=0)


def test_view_filters() -> None:
    records = synthetic_records(200, seed=4)
    odd = ingest.make_view(records, filters=ViewFilter(modulus=2, residue=1))
    assert all(r.conductor % 2 == 1 for r in odd)
    negative = ingest.make_view(records, filters=ViewFilter(a4_sign=-1, triple=(0, 0, 0)))
    assert all(r.a4 < 0 and r.triple == (0, 0, 0) for r in negative)
    assert ViewFilter(rank=1).describe() == {"rank": 1}

    with pytest.raises(ConfigError):
        ViewFilter(modulus=3)
    with pytest.raises(ConfigError):
        ViewFilter(a6_sign=2)
