import math

import numpy as np
import pytest

from bsdlab import metrics
from bsdlab.errors import ConfigError

# three classes: TP 2/1/3, every class one FP and one FN
Y_TRUE = [0, 0, 0, 1, 1, 2, 2, 2, 2]
Y_PRED = [0, 1, 0, 1, 2, 2, 2, 0, 2]


def test_perfect_predictions() -> None:
    y = [1.0, 4.0, 2.0, 8.0]
    assert metrics.regression_scores(y, y) == {"nmae": 0.0, "rmse": 0.0}
    labels = [0, 1, 2, 1, 0]
    assert metrics.classification_scores(labels, labels) == pytest.approx(
        {"f1_micro": 1.0, "f1_macro": 1.0, "mcc": 1.0}
    )


def test_nmae_rmse_by_hand() -> None:
    assert metrics.nmae([0.0, 10.0], [1.0, 10.0]) == pytest.approx(0.05)
    assert metrics.rmse([0.0, 0.0], [3.0, 4.0]) == pytest.approx(math.sqrt(12.5))


def test_nmae_constant_target() -> None:
    with pytest.raises(metrics.UndefinedRangeError):
        metrics.nmae([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_f1_by_hand() -> None:
    assert metrics.f1(Y_TRUE, Y_PRED, "micro") == pytest.approx(6 / 9)
    assert metrics.f1(Y_TRUE, Y_PRED, "macro") == pytest.approx((2 / 3 + 1 / 2 + 3 / 4) / 3)
    with pytest.raises(ConfigError):
        metrics.f1(Y_TRUE, Y_PRED, "weighted")  # type: ignore[arg-type]


def test_mcc_constant_predictions() -> None:
    assert metrics.mcc([0, 1, 2, 1, 0], [1, 1, 1, 1, 1]) == 0.0
    assert metrics.mcc([1, 1, 1], [0, 1, 2]) == 0.0
    assert metrics.mcc([0, 1, 0, 1], [1, 0, 1, 0]) == pytest.approx(-1.0)


def test_confusion_columns() -> None:
    cm = metrics.confusion(Y_TRUE, Y_PRED)
    expected = np.array([[2 / 3, 1 / 2, 0], [0, 1 / 2, 1 / 4], [1 / 3, 0, 3 / 4]])
    assert np.allclose(cm, expected)
    assert np.allclose(cm.sum(axis=0), 1)

    counts = metrics.confusion(Y_TRUE, Y_PRED, normalize=None)
    assert counts.sum() == len(Y_TRUE)
    assert np.allclose(metrics.confusion(Y_TRUE, Y_PRED, normalize="row").sum(axis=1), 1)


def test_confusion_unpredicted_class() -> None:
    cm = metrics.confusion([0, 1, 1], [0, 0, 0], labels=[0, 1, 2])
    assert cm.shape == (3, 3)
    assert np.all(cm[:, 1:] == 0)
    assert cm[:, 0] == pytest.approx([1 / 3, 2 / 3, 0])

    with pytest.raises(ConfigError):
        metrics.confusion([0, 1], [0, 1], normalize="diagonal")  # type: ignore[arg-type]


def test_input_errors() -> None:
    with pytest.raises(ConfigError):
        metrics.rmse([1.0, 2.0], [1.0])
    with pytest.raises(ConfigError):
        metrics.mcc([], [])
