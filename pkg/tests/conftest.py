""" shared fixtures: a handful of real curves and synthetic record tables """
# pylint: disable=redefined-outer-name
from __future__ import annotations

import os
from dataclasses import replace
from pathlib import Path

import numpy as np
import pytest

from bsdlab.ec_core import RationalPoint
from bsdlab.records import CurveRecord

# Cremona allbsd rows, columns as in the shipped `allbsd` map
ALLBSD_LINES = (
    "11 a 1 [0,-1,1,-10,-20] 0 5 5 1.26920930427955 0.253841860855911 1 1",
    "37 a 1 [0,0,1,-1,0] 1 1 1 5.98691729246392 0.305999773834052 0.0511114082399688 1",
    "389 a 1 [0,1,1,-2,0] 2 1 1 4.98042512171011 0.759316500288427 0.152460177943144 1",
    "314226 b 1 [1,-1,0,-453981,117847851] 0 3 3 0.56262 0.18754 1 1",
)

ALLGENS_LINES = (
    "11 a 1 [0,-1,1,-10,-20] 0 [5] [5:5:1]",
    "37 a 1 [0,0,1,-1,0] 1 [] [0:0:1]",
    "389 a 1 [0,1,1,-2,0] 2 [] [-1:1:1] [0:0:1]",
)

GENERATORS = {
    "37a1": (RationalPoint(0, 0),),
    "389a1": (RationalPoint(-1, 1), RationalPoint(0, 0)),
}

# largest coefficients in the full database
LARGE_A4 = -40101356069987968
LARGE_A6 = -3090912440687373254444800


def pytest_collection_modifyitems(config, items):  # type: ignore[no-untyped-def]
    """integration tests need the full database, pointed to by BSDLAB_DATA"""
    if os.environ.get("BSDLAB_DATA"):
        return
    skip = pytest.mark.skip(reason="BSDLAB_DATA not set")
    for item in items:
        if "integration" in item.keywords:
            item.add_marker(skip)


def make_record(label: str, ainvs: tuple[int, ...], **values: object) -> CurveRecord:
    defaults: dict[str, object] = {
        "conductor": 11,
        "rank": 0,
        "torsion_order": 1,
        "tamagawa_product": 1,
        "omega": 1.0,
        "regulator": 1.0,
        "sha_order": 1.0,
    }
    defaults.update(values)
    return CurveRecord(label, *ainvs, **defaults)  # type: ignore[arg-type]


def synthetic_records(n: int, seed: int = 0) -> list[CurveRecord]:
    """random table with the shape of the database, not real curves"""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        a1, a3 = (int(v) for v in rng.integers(0, 2, size=2))
        a2 = int(rng.integers(-1, 2))
        a4 = int(rng.integers(-10_000, 10_000))
        a6 = int(rng.integers(-1_000_000, 1_000_000))
        rank = int(rng.integers(0, 3))
        records.append(
            make_record(
                f"{1000 + i}a1",
                (a1, a2, a3, a4, a6),
                conductor=int(rng.integers(11, 500_000)),
                rank=rank,
                torsion_order=int(rng.choice([1, 2, 3, 4])),
                tamagawa_product=int(rng.integers(1, 9)),
                omega=float(rng.uniform(0.1, 5.0)),
                regulator=1.0 if rank == 0 else float(rng.uniform(0.05, 20.0)),
                sha_order=float(rng.choice([1, 1, 1, 4, 9])),
            )
        )
    return records


@pytest.fixture
def allbsd_file(tmp_path: Path) -> Path:
    path = tmp_path / "allbsd.00000-09999"
    path.write_text("\n".join(ALLBSD_LINES) + "\n")
    return path


@pytest.fixture
def allgens_file(tmp_path: Path) -> Path:
    path = tmp_path / "allgens.00000-09999"
    path.write_text("\n".join(ALLGENS_LINES) + "\n")
    return path


@pytest.fixture
def curves() -> dict[str, CurveRecord]:
    """the four fixture curves by label, generators attached where known"""
    records = {
        "11a1": make_record("11a1", (0, -1, 1, -10, -20), conductor=11, torsion_order=5,
                            tamagawa_product=5, omega=1.26920930427955),
        "37a1": make_record("37a1", (0, 0, 1, -1, 0), conductor=37, rank=1,
                            omega=5.98691729246392, regulator=0.0511114082399688),
        "389a1": make_record("389a1", (0, 1, 1, -2, 0), conductor=389, rank=2,
                             omega=4.98042512171011, regulator=0.152460177943144),
        "314226b1": make_record("314226b1", (1, -1, 0, -453981, 117847851), conductor=314226,
                                torsion_order=3, tamagawa_product=3, omega=0.56262),
    }  # fmt: skip
    return {
        label: replace(r, generators=GENERATORS.get(label, r.generators))
        for label, r in records.items()
    }


@pytest.fixture
def synthetic() -> list[CurveRecord]:
    return synthetic_records(300, seed=7)


@pytest.fixture
def cache_file(tmp_path: Path, curves: dict[str, CurveRecord]) -> Path:
    from bsdlab.ingest import write_cache

    return write_cache(curves.values(), tmp_path / "curves.bsdc")


@pytest.fixture
def synthetic_cache(tmp_path: Path, synthetic: list[CurveRecord]) -> Path:
    from bsdlab.ingest import write_cache

    return write_cache(synthetic, tmp_path / "synthetic.bsdc")
