#!/usr/bin/env python3
"""
Elliptic curves over Q in long Weierstrass form.

    y^2 + a1*x*y + a3*y = x^3 + a2*x^2 + a4*x + a6

All arithmetic here is exact (int / Fraction). Heights, point counts and the
real period live in `heights`, `reduction` and `periods`.

Copyright (c) 2024 ROX Automation
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Protocol, Union

from bsdlab.errors import DataError

Rational = Union[int, Fraction]


class SingularCurveError(DataError):
    """Curve has zero discriminant"""


class PointNotOnCurveError(DataError):
    """Point does not satisfy the curve equation"""


def _simplify(value: Rational) -> Rational:
    """return an int when the rational is integral"""
    if isinstance(value, Fraction) and value.denominator == 1:
        return value.numerator
    return value


# ----------------------------- points -----------------------------


@dataclass(frozen=True, slots=True)
class RationalPoint:
    """affine point with exact coordinates, or the point at infinity"""

    x: Fraction | None = None
    y: Fraction | None = None

    def __post_init__(self) -> None:
        if (self.x is None) != (self.y is None):
            raise ValueError("both coordinates must be given for an affine point")
        if self.x is not None:
            object.__setattr__(self, "x", Fraction(self.x))
            object.__setattr__(self, "y", Fraction(self.y))  # type: ignore[arg-type]

    @classmethod
    def infinity(cls) -> RationalPoint:
        return cls()

    @classmethod
    def from_projective(cls, X: int, Y: int, Z: int) -> RationalPoint:
        """point from Cremona style [X:Y:Z] with x = X/Z, y = Y/Z"""
        if Z == 0:
            return cls()
        return cls(Fraction(X, Z), Fraction(Y, Z))

    @property
    def is_infinity(self) -> bool:
        return self.x is None

    def to_projective(self) -> tuple[int, int, int]:
        """[X:Y:Z] with integer entries, Z = lcm of denominators"""
        if self.is_infinity:
            return (0, 1, 0)
        assert self.x is not None and self.y is not None
        z = math.lcm(self.x.denominator, self.y.denominator)
        return (int(self.x * z), int(self.y * z), z)

    def __str__(self) -> str:
        X, Y, Z = self.to_projective()
        return f"[{X}:{Y}:{Z}]"


INFINITY = RationalPoint()


# ----------------------------- curves -----------------------------


class CurveInvariants(NamedTuple):
    b2: int
    b4: int
    b6: int
    b8: int
    c4: int
    c6: int
    delta: int
    j: Fraction | None  # None when delta == 0


@dataclass(frozen=True, slots=True)
class WeierstrassCurve:
    """long Weierstrass model, integral unless built by a non-integral change"""

    a1: Rational
    a2: Rational
    a3: Rational
    a4: Rational
    a6: Rational

    def __post_init__(self) -> None:
        for name in ("a1", "a2", "a3", "a4", "a6"):
            object.__setattr__(self, name, _simplify(Fraction(getattr(self, name))))

    @classmethod
    def from_ainvs(cls, ainvs: tuple[Rational, ...] | list[Rational]) -> WeierstrassCurve:
        if len(ainvs) != 5:
            raise ValueError(f"expected 5 a-invariants, got {len(ainvs)}")
        return cls(*ainvs)

    @property
    def ainvs(self) -> tuple[Rational, ...]:
        return (self.a1, self.a2, self.a3, self.a4, self.a6)

    @property
    def is_integral(self) -> bool:
        return all(isinstance(a, int) for a in self.ainvs)

    @property
    def is_normalized(self) -> bool:
        return self.a1 in (0, 1) and self.a3 in (0, 1) and self.a2 in (-1, 0, 1)

    def contains(self, P: RationalPoint) -> bool:
        if P.is_infinity:
            return True
        x, y = P.x, P.y
        assert x is not None and y is not None
        a1, a2, a3, a4, a6 = self.ainvs
        return y * y + a1 * x * y + a3 * y == x**3 + a2 * x * x + a4 * x + a6

    def __str__(self) -> str:
        return "[" + ",".join(str(a) for a in self.ainvs) + "]"


def point_on_curve(curve: WeierstrassCurve, P: RationalPoint) -> bool:
    return curve.contains(P)


def invariants(curve: WeierstrassCurve) -> CurveInvariants:
    """b2, b4, b6, b8, c4, c6, discriminant and j-invariant"""
    a1, a2, a3, a4, a6 = curve.ainvs
    b2 = a1 * a1 + 4 * a2
    b4 = 2 * a4 + a1 * a3
    b6 = a3 * a3 + 4 * a6
    b8 = a1 * a1 * a6 + 4 * a2 * a6 - a1 * a3 * a4 + a2 * a3 * a3 - a4 * a4
    c4 = b2 * b2 - 24 * b4
    c6 = -(b2**3) + 36 * b2 * b4 - 216 * b6
    delta = -b2 * b2 * b8 - 8 * b4**3 - 27 * b6 * b6 + 9 * b2 * b4 * b6
    j = Fraction(c4**3) / delta if delta != 0 else None
    return CurveInvariants(
        *(_simplify(v) for v in (b2, b4, b6, b8, c4, c6, delta)), j  # type: ignore[arg-type]
    )


def discriminant(curve: WeierstrassCurve) -> Rational:
    return invariants(curve).delta


def j_invariant(curve: WeierstrassCurve) -> Fraction:
    inv = invariants(curve)
    if inv.j is None:
        raise SingularCurveError(f"curve {curve} is singular, j is undefined")
    return inv.j


# ----------------------------- coordinate changes -----------------------------


@dataclass(frozen=True, slots=True)
class IsogenyChange:
    """Tate-Laska coordinate change x = u^2 x' + r, y = u^3 y' + s u^2 x' + t"""

    u: Rational = 1
    r: Rational = 0
    s: Rational = 0
    t: Rational = 0

    def __post_init__(self) -> None:
        for name in ("u", "r", "s", "t"):
            object.__setattr__(self, name, _simplify(Fraction(getattr(self, name))))
        if self.u == 0:
            raise ValueError("u must be nonzero")

    @property
    def is_identity(self) -> bool:
        return self.u == 1 and self.r == 0 and self.s == 0 and self.t == 0


IDENTITY_CHANGE = IsogenyChange()


def transform(curve: WeierstrassCurve, change: IsogenyChange) -> WeierstrassCurve:
    """model E' obtained from E by the change (u, r, s, t)"""
    a1, a2, a3, a4, a6 = (Fraction(a) for a in curve.ainvs)
    u, r, s, t = (Fraction(v) for v in (change.u, change.r, change.s, change.t))

    a1p = (a1 + 2 * s) / u
    a2p = (a2 - s * a1 + 3 * r - s * s) / u**2
    a3p = (a3 + r * a1 + 2 * t) / u**3
    a4p = (a4 - s * a3 + 2 * r * a2 - (t + r * s) * a1 + 3 * r * r - 2 * s * t) / u**4
    a6p = (a6 + r * a4 + r * r * a2 + r**3 - t * a3 - t * t - r * t * a1) / u**6
    return WeierstrassCurve(a1p, a2p, a3p, a4p, a6p)


def compose(first: IsogenyChange, second: IsogenyChange) -> IsogenyChange:
    """change equal to applying `first` then `second`

    transform(transform(E, first), second) == transform(E, compose(first, second))
    """
    u1, r1, s1, t1 = (Fraction(v) for v in (first.u, first.r, first.s, first.t))
    u2, r2, s2, t2 = (Fraction(v) for v in (second.u, second.r, second.s, second.t))
    return IsogenyChange(
        u=u1 * u2,
        r=r1 + u1 * u1 * r2,
        s=s1 + u1 * s2,
        t=t1 + u1 * u1 * s1 * r2 + u1**3 * t2,
    )


def invert(change: IsogenyChange) -> IsogenyChange:
    u, r, s, t = (Fraction(v) for v in (change.u, change.r, change.s, change.t))
    return IsogenyChange(
        u=1 / u,
        r=-r / u**2,
        s=-s / u,
        t=(r * s - t) / u**3,
    )


def transform_point(P: RationalPoint, change: IsogenyChange) -> RationalPoint:
    """map a point of the transformed curve E' back to the original E"""
    if P.is_infinity:
        return P
    assert P.x is not None and P.y is not None
    u, r, s, t = change.u, change.r, change.s, change.t
    x = u * u * P.x + r
    y = u**3 * P.y + s * u * u * P.x + t
    return RationalPoint(x, y)


def inverse_transform_point(P: RationalPoint, change: IsogenyChange) -> RationalPoint:
    """map a point of the original curve E onto the transformed curve E'"""
    return transform_point(P, invert(change))


def normalize(curve: WeierstrassCurve) -> tuple[WeierstrassCurve, IsogenyChange]:
    """u = 1 change with integral r, s, t giving a1, a3 in {0,1} and a2 in {-1,0,1}"""
    if not curve.is_integral:
        raise ValueError(f"normalize needs an integral model, got {curve}")
    a1, a2, a3 = int(curve.a1), int(curve.a2), int(curve.a3)

    s = -(a1 // 2)
    v = a2 - s * a1 - s * s
    r = -((v + 1) // 3)
    t = -((a3 + r * a1) // 2)

    change = IsogenyChange(1, r, s, t)
    if change.is_identity:
        return curve, IDENTITY_CHANGE
    return transform(curve, change), change


# ----------------------------- group law -----------------------------


def negate(curve: WeierstrassCurve, P: RationalPoint) -> RationalPoint:
    if P.is_infinity:
        return P
    assert P.x is not None and P.y is not None
    return RationalPoint(P.x, -P.y - curve.a1 * P.x - curve.a3)


def add(curve: WeierstrassCurve, P: RationalPoint, Q: RationalPoint) -> RationalPoint:
    """chord-tangent addition"""
    if P.is_infinity:
        return Q
    if Q.is_infinity:
        return P

    a1, a2, a3, a4, a6 = curve.ainvs
    x1, y1, x2, y2 = P.x, P.y, Q.x, Q.y
    assert x1 is not None and y1 is not None and x2 is not None and y2 is not None

    if x1 == x2:
        if y1 + y2 + a1 * x2 + a3 == 0:
            return INFINITY
        denom = 2 * y1 + a1 * x1 + a3
        lam = (3 * x1 * x1 + 2 * a2 * x1 + a4 - a1 * y1) / denom
        nu = (-(x1**3) + a4 * x1 + 2 * a6 - a3 * y1) / denom
    else:
        lam = (y2 - y1) / (x2 - x1)
        nu = (y1 * x2 - y2 * x1) / (x2 - x1)

    x3 = lam * lam + a1 * lam - a2 - x1 - x2
    y3 = -(lam + a1) * x3 - nu - a3
    return RationalPoint(x3, y3)


def multiply(curve: WeierstrassCurve, n: int, P: RationalPoint) -> RationalPoint:
    """n*P by double-and-add, negative n allowed"""
    if n < 0:
        return multiply(curve, -n, negate(curve, P))

    result = INFINITY
    addend = P
    while n:
        if n & 1:
            result = add(curve, result, addend)
        n >>= 1
        if n:
            addend = add(curve, addend, addend)
    return result


# ----------------------------- heights -----------------------------


def naive_height(P: RationalPoint) -> float:
    """log max(|num|, den) of the x-coordinate, 0 at infinity"""
    if P.is_infinity:
        return 0.0
    assert P.x is not None
    return math.log(max(abs(P.x.numerator), P.x.denominator))


# ----------------------------- BSD -----------------------------


class BsdQuantities(Protocol):
    sha_order: float
    omega: float
    regulator: float
    tamagawa_product: int
    torsion_order: int


def bsd_rhs(record: BsdQuantities) -> float:
    """|Sha| * Omega * R * prod(c_p) / |T|^2"""
    return (
        record.sha_order
        * record.omega
        * record.regulator
        * record.tamagawa_product
        / record.torsion_order**2
    )
