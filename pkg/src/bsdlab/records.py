"""
Curve records, one per database row.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

from bsdlab.ec_core import RationalPoint, WeierstrassCurve, bsd_rhs

# quantities a record carries besides its label and model
BSD_FIELDS = (
    "conductor",
    "rank",
    "torsion_order",
    "tamagawa_product",
    "omega",
    "regulator",
    "sha_order",
)
AINV_FIELDS = ("a1", "a2", "a3", "a4", "a6")
REQUIRED_FIELDS = ("label", *AINV_FIELDS, *BSD_FIELDS)


@dataclass(frozen=True)
class CurveRecord:
    label: str
    a1: int
    a2: int
    a3: int
    a4: int
    a6: int
    conductor: int
    rank: int
    torsion_order: int
    tamagawa_product: int
    omega: float
    regulator: float
    sha_order: float
    generators: tuple[RationalPoint, ...] | None = None

    @property
    def ainvs(self) -> tuple[int, int, int, int, int]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def triple(self) -> tuple[int, int, int]:
        return (self.a1, self.a2, self.a3)

    @cached_property
    def curve(self) -> WeierstrassCurve:
        return WeierstrassCurve(*self.ainvs)

    @property
    def rhs(self) -> float:
        return bsd_rhs(self)

    def value(self, name: str) -> int | float:
        """numeric column by name, `rhs` included"""
        if name == "rhs":
            return self.rhs
        if name not in AINV_FIELDS and name not in BSD_FIELDS:
            raise KeyError(name)
        return getattr(self, name)
