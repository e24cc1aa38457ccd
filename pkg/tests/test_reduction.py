import pytest
from sympy import primerange

from bsdlab.ec_core import WeierstrassCurve
from bsdlab.errors import ConfigError
from bsdlab.reduction import (
    DataInconsistencyError,
    Reduction,
    aplist,
    count_points_mod_p,
    local_factor,
)

E11 = WeierstrassCurve(0, -1, 1, -10, -20)
E314226 = WeierstrassCurve(1, -1, 0, -453981, 117847851)

# a_p of 11a1
AP_11A1 = {2: -2, 3: -1, 5: 1, 7: -2, 11: 1, 13: 4}

ORACLE_CURVES = {
    37: WeierstrassCurve(0, 0, 1, -1, 0),
    389: WeierstrassCurve(0, 1, 1, -2, 0),
    314226: E314226,
}


def naive_count(curve: WeierstrassCurve, p: int) -> int:
    """projective points by trying every (x, y)"""
    a1, a2, a3, a4, a6 = (int(a) for a in curve.ainvs)
    total = 1
    for x in range(p):
        for y in range(p):
            if (y * y + a1 * x * y + a3 * y - (x**3 + a2 * x * x + a4 * x + a6)) % p == 0:
                total += 1
    return total


def test_aplist_11a1() -> None:
    factors = aplist(E11, 13, 11)
    assert {f.p: f.a_p for f in factors} == AP_11A1
    assert factors[4].reduction is Reduction.MULTIPLICATIVE
    assert all(f.reduction is Reduction.GOOD for f in factors if f.p != 11)


def test_small_count() -> None:
    # y^2 = x^3 + 1 over F5
    result = count_points_mod_p(WeierstrassCurve(0, 0, 0, 0, 1), 5)
    assert result.count == 6
    assert result.reduction is Reduction.GOOD
    assert local_factor(WeierstrassCurve(0, 0, 0, 0, 1), 5, 36).a_p == 0


@pytest.mark.parametrize("conductor", ORACLE_CURVES)
def test_count_matches_naive(conductor: int) -> None:
    curve = ORACLE_CURVES[conductor]
    for p in primerange(2, 60):
        p = int(p)
        if conductor % p == 0:
            continue
        assert count_points_mod_p(curve, p).count == naive_count(curve, p), p
        a_p = local_factor(curve, p, conductor).a_p
        assert a_p * a_p <= 4 * p


def test_bad_primes_314226b1() -> None:
    factors = {f.p: f for f in aplist(E314226, 30, 314226)}
    for p in (3, 23):
        assert factors[p].reduction is Reduction.ADDITIVE
        assert factors[p].a_p == 0
    for p in (2, 11):
        assert factors[p].reduction is Reduction.MULTIPLICATIVE
        assert factors[p].a_p in (-1, 1)


def test_euler_polynomial() -> None:
    good = local_factor(E11, 13, 11)
    assert good.euler_polynomial() == (1, -4, 13)
    bad = local_factor(E11, 11, 11)
    assert bad.euler_polynomial() == (1, -1, 0)


def test_argument_errors() -> None:
    with pytest.raises(ConfigError):
        count_points_mod_p(E11, 9)
    with pytest.raises(ConfigError):
        count_points_mod_p(E11, 1)
    with pytest.raises(ConfigError):
        count_points_mod_p(E11, 101, bound=100)
    with pytest.raises(ConfigError):
        aplist(E11, 200, 11, bound=100)


def test_inconsistent_conductor() -> None:
    # 3 divides the conductor but 11a1 is good at 3
    with pytest.raises(DataInconsistencyError) as err:
        local_factor(E11, 3, 33)
    assert err.value.p == 3

    # 11 divides the discriminant but not the conductor
    with pytest.raises(DataInconsistencyError) as err:
        local_factor(E11, 11, 13)
    assert err.value.p == 11


def test_conductor_exponent_must_match_reduction() -> None:
    # 11a1 has a node at 11, so 11^2 cannot divide the conductor
    with pytest.raises(DataInconsistencyError, match="multiplicative") as err:
        local_factor(E11, 11, 121)
    assert err.value.p == 11

    # 314226b1 has a cusp at 3, so 3 cannot divide the conductor exactly once
    with pytest.raises(DataInconsistencyError, match="additive") as err:
        local_factor(E314226, 3, 314226 // 9)
    assert err.value.p == 3
