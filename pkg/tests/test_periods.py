import pytest

from bsdlab.ec_core import SingularCurveError, WeierstrassCurve
from bsdlab.periods import real_period, real_roots

# Cremona real periods (twice the least real period for two real components)
PERIODS = {
    (0, -1, 1, -10, -20): 1.26920930427955,
    (0, 0, 1, -1, 0): 5.98691729246392,
    (0, 1, 1, -2, 0): 4.98042512171011,
}


@pytest.mark.parametrize("ainvs,omega", PERIODS.items())
def test_real_period(ainvs: tuple[int, ...], omega: float) -> None:
    assert real_period(WeierstrassCurve(*ainvs)) == pytest.approx(omega, rel=1e-8)


def test_period_314226b1() -> None:
    curve = WeierstrassCurve(1, -1, 0, -453981, 117847851)
    assert real_period(curve) == pytest.approx(0.56262, rel=1e-4)


def test_real_roots() -> None:
    # 11a1 has one real component, 37a1 two
    assert len(real_roots(WeierstrassCurve(0, -1, 1, -10, -20))) == 1
    roots = real_roots(WeierstrassCurve(0, 0, 1, -1, 0))
    assert len(roots) == 3
    assert roots == sorted(roots)


def test_period_errors() -> None:
    with pytest.raises(SingularCurveError):
        real_period(WeierstrassCurve(0, 0, 0, 0, 0))
    with pytest.raises(ValueError):
        real_period(WeierstrassCurve(0, 0, 1, -1, 0), tol=-1)
