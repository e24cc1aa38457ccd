#!/usr/bin/env python3
"""
Curve tables: column maps, parsing, validation, CSV interchange and views.

Column maps are small TOML files. ``[columns]`` maps a record field to a column
index; ``label`` may list several columns to concatenate (Cremona splits labels
into conductor, isogeny class and number) and ``ainvs`` may point at a single
bracketed ``[a1,a2,a3,a4,a6]`` token instead of five separate columns.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import logging
import math
import tomllib
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any, Iterable, Iterator, NamedTuple, Sequence

from sympy import primefactors

from bsdlab.cache_codec import iter_cache, read_cache, write_cache  # noqa: F401
from bsdlab.ec_core import RationalPoint, invariants
from bsdlab.errors import ConfigError, DataError, NumericError
from bsdlab.outputs import write_csv as _write_schema_csv
from bsdlab.records import AINV_FIELDS, BSD_FIELDS, CurveRecord
from bsdlab.utils import chunk_ranges, parallel_map, rng_for

COLUMN_MAP_VERSION = 1
DEFAULT_MAP = "allbsd"
PARSE_CHUNK = 50_000

MAZUR_ORDERS = frozenset({1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 12, 16})
MAX_RANK = 4
SHA_INTEGRAL_TOL = 1e-3
REGULATOR_TOL = 1e-3
PERIOD_TOL = 1e-4
RECHECK_PMAX = 1_000

INT_FIELDS = frozenset({"conductor", "rank", "torsion_order", "tamagawa_product"})

log = logging.getLogger(__name__)


class Issue(NamedTuple):
    """one row problem, from parsing or validation"""

    line: int | None
    label: str | None
    field: str
    violation: str

    def as_dict(self) -> dict[str, Any]:
        return self._asdict()


class ParsedTable(NamedTuple):
    records: list[CurveRecord]
    issues: list[Issue]


class SampleSizeError(DataError):
    def __init__(self, n: int, size: int) -> None:
        super().__init__(f"cannot sample {n} records from a view of {size}")
        self.n = n
        self.size = size


class _RowError(Exception):
    def __init__(self, field_name: str, message: str) -> None:
        super().__init__(message)
        self.field = field_name


# ----------------------------Column maps----------------------------


@dataclass(frozen=True)
class ColumnMap:
    delimiter: str | None  # None splits on whitespace
    skip_header: int
    columns: dict[str, int | tuple[int, ...]]
    name: str = ""

    @property
    def has_generators(self) -> bool:
        return "generators" in self.columns

    def split(self, line: str) -> list[str]:
        if self.delimiter is None:
            return line.split()
        return [cell.strip() for cell in line.split(self.delimiter)]

    def require(self, fields: Iterable[str]) -> None:
        for name in fields:
            if name in AINV_FIELDS and "ainvs" in self.columns:
                continue
            if name not in self.columns:
                raise ConfigError(f"column map {self.name!r} has no column for field {name!r}")


def _map_path(path: str | Path | None) -> Any:
    if path is None:
        path = DEFAULT_MAP
    candidate = Path(path)
    if candidate.exists():
        return candidate
    shipped = resources.files("bsdlab") / "data" / f"{candidate.stem}.toml"
    if shipped.is_file():
        return shipped
    raise ConfigError(f"column map {path} not found")


def load_column_map(path: str | Path | None = None) -> ColumnMap:
    """load a mapping file, or a shipped one by name (allbsd, allgens, curves_csv)"""
    source = _map_path(path)
    try:
        data = tomllib.loads(source.read_text())
    except tomllib.TOMLDecodeError as err:
        raise ConfigError(f"column map {source}: {err}") from err

    version = data.get("format_version")
    if version != COLUMN_MAP_VERSION:
        raise ConfigError(
            f"column map {source}: format_version {version}, expected {COLUMN_MAP_VERSION}"
        )

    delimiter = data.get("delimiter", "whitespace")
    columns: dict[str, int | tuple[int, ...]] = {}
    for key, value in data.get("columns", {}).items():
        if isinstance(value, list):
            value = tuple(int(v) for v in value)
        elif not isinstance(value, int):
            raise ConfigError(f"column map {source}: column of {key!r} must be an index")
        columns[key] = value

    return ColumnMap(
        delimiter=None if delimiter == "whitespace" else delimiter,
        skip_header=int(data.get("skip_header", 0)),
        columns=columns,
        name=str(source),
    )


# ----------------------------Parsing----------------------------


def parse_point(token: str) -> RationalPoint:
    """Cremona style ``[X:Y:Z]`` token"""
    body = token.strip()
    if not (body.startswith("[") and body.endswith("]")):
        raise ValueError(f"bad point token {token!r}")
    parts = body[1:-1].split(":")
    if len(parts) != 3:
        raise ValueError(f"bad point token {token!r}")
    X, Y, Z = (int(p) for p in parts)
    return RationalPoint.from_projective(X, Y, Z)


def format_generators(generators: Sequence[RationalPoint] | None) -> str:
    if generators is None:
        return ""
    if not generators:
        return "[]"
    return ";".join(str(P) for P in generators)


def _cell(cells: list[str], index: int, name: str) -> str:
    try:
        return cells[index]
    except IndexError:
        raise _RowError(name, f"missing column {index}")


def _field(cells: list[str], cmap: ColumnMap, name: str) -> str:
    index = cmap.columns[name]
    if isinstance(index, tuple):
        return "".join(_cell(cells, i, name) for i in index)
    return _cell(cells, index, name)


def _int(text: str, name: str) -> int:
    try:
        return int(text)
    except ValueError:
        raise _RowError(name, f"not an integer: {text!r}")


def _float(text: str, name: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise _RowError(name, f"not a number: {text!r}")
    if not math.isfinite(value):
        raise _RowError(name, f"not finite: {text!r}")
    return value


def _ainvs(cells: list[str], cmap: ColumnMap) -> list[int]:
    if "ainvs" in cmap.columns:
        token = _field(cells, cmap, "ainvs")
        parts = token.strip("[]").split(",")
        if len(parts) != 5:
            raise _RowError("ainvs", f"expected 5 a-invariants in {token!r}")
        return [_int(p, "ainvs") for p in parts]
    return [_int(_field(cells, cmap, name), name) for name in AINV_FIELDS]


def _generators(cells: list[str], cmap: ColumnMap, rank: int) -> tuple[RationalPoint, ...] | None:
    index = cmap.columns["generators"]
    assert isinstance(index, int)
    try:
        if cmap.delimiter is None:
            tokens = cells[index : index + rank]
            if len(tokens) != rank:
                raise _RowError("generators", f"expected {rank} generators, found {len(tokens)}")
        else:
            text = cells[index] if index < len(cells) else ""
            if not text:
                return None
            tokens = [] if text == "[]" else text.split(";")
        return tuple(parse_point(t) for t in tokens)
    except ValueError as err:
        raise _RowError("generators", str(err))


def _parse_row(cells: list[str], cmap: ColumnMap) -> CurveRecord:
    label = _field(cells, cmap, "label")
    ainvs = _ainvs(cells, cmap)
    values: dict[str, int | float] = {}
    for name in BSD_FIELDS:
        text = _field(cells, cmap, name)
        values[name] = _int(text, name) if name in INT_FIELDS else _float(text, name)
    gens = _generators(cells, cmap, int(values["rank"])) if cmap.has_generators else None
    return CurveRecord(label, *ainvs, **values, generators=gens)  # type: ignore[arg-type]


def _data_lines(path: Path, cmap: ColumnMap) -> list[tuple[int, str]]:
    numbered = []
    skipped = 0
    with path.open() as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if skipped < cmap.skip_header:
                skipped += 1
                continue
            numbered.append((lineno, line))
    return numbered


def _parse_chunk(
    lines: Sequence[tuple[int, str]], cmap: ColumnMap, fields: Sequence[str]
) -> tuple[list[tuple[int, Any]], list[Issue]]:
    parsed: list[tuple[int, Any]] = []
    issues: list[Issue] = []
    for lineno, line in lines:
        cells = cmap.split(line)
        try:
            if "omega" in fields:
                parsed.append((lineno, _parse_row(cells, cmap)))
            else:
                label = _field(cells, cmap, "label")
                rank = _int(_field(cells, cmap, "rank"), "rank")
                parsed.append((lineno, (label, _generators(cells, cmap, rank))))
        except _RowError as err:
            label = None
            if "label" in cmap.columns:
                try:
                    label = _field(cells, cmap, "label")
                except _RowError:
                    pass
            issues.append(Issue(lineno, label, err.field, str(err)))
    return parsed, issues


def _parse_lines(path: str | Path, cmap: ColumnMap, fields: Sequence[str]):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"input file {path} does not exist")
    cmap.require(fields)

    lines = _data_lines(path, cmap)
    chunks = parallel_map(
        lambda rng: _parse_chunk(lines[rng[0] : rng[1]], cmap, fields),
        chunk_ranges(len(lines), PARSE_CHUNK),
    )

    items: list[tuple[int, Any]] = []
    issues: list[Issue] = []
    for parsed, chunk_issues in chunks:
        items.extend(parsed)
        issues.extend(chunk_issues)
    return items, issues


def parse_table(path: str | Path, column_map: ColumnMap | None = None) -> ParsedTable:
    """parse a curve table into records, collecting row issues instead of failing"""
    cmap = column_map or load_column_map()
    items, issues = _parse_lines(path, cmap, ("label", *AINV_FIELDS, *BSD_FIELDS))

    records: list[CurveRecord] = []
    seen: dict[str, int] = {}
    for lineno, record in items:
        first = seen.get(record.label)
        if first is not None:
            issues.append(
                Issue(lineno, record.label, "label", f"duplicate label, first seen on line {first}")
            )
            continue
        seen[record.label] = lineno
        records.append(record)

    issues.sort(key=lambda i: i.line or 0)
    log.info(f"parsed {len(records)} records from {path}, {len(issues)} row issues")
    return ParsedTable(records, issues)


def parse_generators(
    path: str | Path, column_map: ColumnMap | None = None
) -> tuple[dict[str, tuple[RationalPoint, ...]], list[Issue]]:
    """read an allgens style table into {label: generators}"""
    cmap = column_map or load_column_map("allgens")
    items, issues = _parse_lines(path, cmap, ("label", "rank", "generators"))
    gens = {label: points for _, (label, points) in items if points is not None}
    return gens, issues


def merge_generators(
    records: Iterable[CurveRecord], generators: dict[str, tuple[RationalPoint, ...]]
) -> list[CurveRecord]:
    """attach generators by label, records without an entry are kept as they are"""
    merged = []
    attached = 0
    for record in records:
        gens = generators.get(record.label)
        if gens is not None:
            record = replace(record, generators=gens)
            attached += 1
        merged.append(record)
    log.info(f"attached generators to {attached} records")
    return merged


CSV_COLUMNS = (
    ("label", "Cremona label"),
    ("a1", "Weierstrass coefficient a1"),
    ("a2", "Weierstrass coefficient a2"),
    ("a3", "Weierstrass coefficient a3"),
    ("a4", "Weierstrass coefficient a4, exact decimal"),
    ("a6", "Weierstrass coefficient a6, exact decimal"),
    ("conductor", "conductor N"),
    ("rank", "rank r"),
    ("torsion_order", "torsion order |T|"),
    ("tamagawa_product", "product of Tamagawa numbers"),
    ("omega", "real period"),
    ("regulator", "regulator"),
    ("sha_order", "analytic order of Sha"),
    ("generators", "[X:Y:Z] tokens joined by ';', empty when unknown"),
)


def write_csv(records: Iterable[CurveRecord], path: str | Path) -> Path:
    """headered CSV readable with the shipped curves_csv map"""
    rows = (
        (
            r.label,
            *(str(a) for a in r.ainvs),
            r.conductor,
            r.rank,
            r.torsion_order,
            r.tamagawa_product,
            r.omega,
            r.regulator,
            r.sha_order,
            format_generators(r.generators),
        )
        for r in records
    )
    return _write_schema_csv(path, "curves", CSV_COLUMNS, rows)


# ----------------------------Validation----------------------------


def validate(record: CurveRecord, line: int | None = None) -> list[Issue]:
    """violated record invariants, empty when the record is consistent"""
    issues: list[Issue] = []

    def fail(name: str, message: str) -> None:
        issues.append(Issue(line, record.label, name, message))

    if record.a1 not in (0, 1) or record.a3 not in (0, 1) or record.a2 not in (-1, 0, 1):
        fail("ainvs", "a-invariants not normalized")

    delta = int(invariants(record.curve).delta)
    if delta == 0:
        fail("ainvs", "discriminant is zero")

    if record.torsion_order not in MAZUR_ORDERS:
        fail("torsion_order", "torsion order outside Mazur set")
    if not 0 <= record.rank <= MAX_RANK:
        fail("rank", f"rank outside 0..{MAX_RANK}")

    for name in ("conductor", "tamagawa_product", "omega", "regulator", "sha_order"):
        if getattr(record, name) <= 0:
            fail(name, f"{name} must be positive")

    if record.rank == 0 and not math.isclose(record.regulator, 1.0, rel_tol=1e-12):
        fail("regulator", "rank-0 regulator must be 1")
    if record.sha_order > 0 and abs(record.sha_order - round(record.sha_order)) > SHA_INTEGRAL_TOL:
        fail("sha_order", "sha order not integral")

    if delta != 0 and record.conductor > 0:
        for p in primefactors(record.conductor):
            if delta % p:
                fail("conductor", f"prime {p} of the conductor does not divide the discriminant")

    if record.generators is not None:
        if len(record.generators) != record.rank:
            fail("generators", f"{len(record.generators)} generators for rank {record.rank}")
        for P in record.generators:
            if not record.curve.contains(P):
                fail("generators", f"generator {P} not on curve")

    return issues


def recheck(record: CurveRecord, tol: float = PERIOD_TOL, line: int | None = None) -> list[Issue]:
    """recompute period, regulator and small local factors and compare with the record"""
    from bsdlab.heights import regulator
    from bsdlab.periods import real_period
    from bsdlab.reduction import local_factor

    issues: list[Issue] = []

    def fail(name: str, message: str) -> None:
        issues.append(Issue(line, record.label, name, message))

    curve = record.curve
    inv = invariants(curve)
    if inv.delta == 0:
        return [Issue(line, record.label, "ainvs", "discriminant is zero")]
    if 4 * inv.b8 != inv.b2 * inv.b6 - inv.b4**2:
        fail("ainvs", "4*b8 != b2*b6 - b4^2")

    try:
        omega = real_period(curve)
        if abs(omega - record.omega) > tol * record.omega:
            fail("omega", f"recomputed period {omega:.10g} differs from {record.omega:.10g}")
    except NumericError as err:
        fail("omega", f"period not recomputed: {err}")

    if record.generators and len(record.generators) == record.rank:
        try:
            est = regulator(curve, record.generators)
            if not est.converged:
                fail("regulator", "recomputed regulator did not converge")
            elif abs(est.value - record.regulator) > REGULATOR_TOL:
                fail(
                    "regulator",
                    f"recomputed regulator {est.value:.10g} differs from {record.regulator:.10g}",
                )
        except DataError as err:
            fail("generators", str(err))

    for p in primefactors(record.conductor):
        if p > RECHECK_PMAX:
            break
        try:
            local_factor(curve, p, record.conductor)
        except DataError as err:
            fail("conductor", str(err))

    return issues


def validate_all(
    records: Sequence[CurveRecord], recompute: bool = False
) -> list[Issue]:
    """validation issues for many records, in record order"""

    def check(item: tuple[int, CurveRecord]) -> list[Issue]:
        idx, record = item
        found = validate(record, idx)
        if recompute and not found:
            found.extend(recheck(record, line=idx))
        return found

    issues = [i for found in parallel_map(check, enumerate(records, start=1)) for i in found]
    log.info(f"validated {len(records)} records: {len(issues)} issues")
    return issues


# ----------------------------Views and sampling----------------------------


@dataclass(frozen=True)
class ViewFilter:
    rank: int | None = None
    modulus: int | None = None  # conductor residue class
    residue: int | None = None
    a4_sign: int | None = None  # -1, 0 or 1
    a6_sign: int | None = None
    triple: tuple[int, int, int] | None = None

    def __post_init__(self) -> None:
        if (self.modulus is None) != (self.residue is None):
            raise ConfigError("modulus and residue must be given together")
        if self.modulus is not None and self.modulus < 1:
            raise ConfigError(f"modulus must be positive, got {self.modulus}")
        for sign in (self.a4_sign, self.a6_sign):
            if sign not in (None, -1, 0, 1):
                raise ConfigError(f"sign filter must be -1, 0 or 1, got {sign}")

    def matches(self, record: CurveRecord) -> bool:
        if self.rank is not None and record.rank != self.rank:
            return False
        if self.modulus is not None and record.conductor % self.modulus != self.residue:
            return False
        if self.a4_sign is not None and _sign(record.a4) != self.a4_sign:
            return False
        if self.a6_sign is not None and _sign(record.a6) != self.a6_sign:
            return False
        if self.triple is not None and record.triple != tuple(self.triple):
            return False
        return True

    def describe(self) -> dict[str, Any]:
        return {k: v for k, v in self.__dict__.items() if v is not None}


def _sign(value: int) -> int:
    return (value > 0) - (value < 0)


@dataclass(frozen=True)
class DatasetView:
    source: str
    row_indices: tuple[int, ...]
    seed: int | None
    filters: ViewFilter
    data: Sequence[CurveRecord] = field(repr=False, compare=False, default=())

    def __len__(self) -> int:
        return len(self.row_indices)

    def __iter__(self) -> Iterator[CurveRecord]:
        return (self.data[i] for i in self.row_indices)

    @property
    def records(self) -> list[CurveRecord]:
        return list(self)


def make_view(
    records: Sequence[CurveRecord], source: str = "", filters: ViewFilter | None = None
) -> DatasetView:
    filters = filters or ViewFilter()
    indices = tuple(i for i, r in enumerate(records) if filters.matches(r))
    return DatasetView(str(source), indices, None, filters, records)


def _sample_indices(view: DatasetView, n: int, seed: int) -> list[int]:
    if n > len(view) or n < 0:
        raise SampleSizeError(n, len(view))
    order = rng_for(seed, n).permutation(len(view))[:n]
    return [view.row_indices[int(i)] for i in order]


def sample(view: DatasetView, n: int, seed: int) -> list[CurveRecord]:
    """n records drawn uniformly without replacement, in draw order"""
    return [view.data[i] for i in _sample_indices(view, n, seed)]


def sample_view(view: DatasetView, n: int, seed: int) -> DatasetView:
    """the same draw as `sample`, as a view with sorted indices"""
    indices = tuple(sorted(_sample_indices(view, n, seed)))
    return DatasetView(view.source, indices, seed, view.filters, view.data)
