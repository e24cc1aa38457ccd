import math

import numpy as np
import pytest

from bsdlab import experiments
from bsdlab.errors import ConfigError
from bsdlab.experiments import ExperimentSpec
from bsdlab.gbt import GBTModel, GBTParams
from bsdlab.ingest import SampleSizeError, make_view

from tests.conftest import make_record

SMALL_GBT = GBTParams(n_trees=10, max_depth=3)


def rank_from_triple(n: int, seed: int) -> list:
    """records whose rank is a1 + a3, everything else noise"""
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        a1, a3 = (int(v) for v in rng.integers(0, 2, size=2))
        a4, a6 = (int(v) for v in rng.integers(-1000, 1000, size=2))
        records.append(make_record(f"s{i}", (a1, 0, a3, a4, a6), rank=a1 + a3))
    return records


def linear_conductor(n: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    records = []
    for i in range(n):
        a4, a6 = (int(v) for v in rng.integers(-500, 500, size=2))
        records.append(make_record(f"l{i}", (0, 0, 0, a4, a6), conductor=7 + 3 * a4 - 2 * a6))
    return records


def test_kfold_partition() -> None:
    folds = experiments.kfold(10, 5, seed=1)
    assert len(folds) == 5
    tests = np.concatenate([test for _, test in folds])
    assert sorted(tests.tolist()) == list(range(10))
    for train, test in folds:
        assert len(test) == 2
        assert not set(train) & set(test)
        assert len(train) + len(test) == 10
    assert all(np.array_equal(a[1], b[1]) for a, b in zip(folds, experiments.kfold(10, 5, seed=1)))


def test_kfold_errors() -> None:
    with pytest.raises(ConfigError):
        experiments.kfold(10, 1)
    with pytest.raises(SampleSizeError):
        experiments.kfold(3, 5)


def test_targets_and_features() -> None:
    assert experiments.target_kind("rank") == "class"
    assert experiments.target_kind("omega") == "real"
    assert experiments.target_kind("rhs") == "real"
    with pytest.raises(ConfigError):
        experiments.target_kind("a4")

    assert experiments.resolve_features("mixed", "rank") == (
        "a1", "a2", "a3", "a4", "a6", "conductor", "torsion_order",
        "tamagawa_product", "omega", "regulator", "sha_order",
    )  # fmt: skip
    with pytest.raises(ConfigError):
        experiments.resolve_features(["a4", "rank"], "rank")
    with pytest.raises(ConfigError):
        experiments.resolve_features("everything", "rank")


def test_feature_matrix_transforms() -> None:
    records = [make_record("a", (1, 0, 0, -100, 0), rank=1), make_record("b", (0, 0, 1, 5, 7))]
    fm = experiments.feature_matrix(records, "coeffs", "rank")
    assert fm.X.shape == (2, 5)
    assert fm.X[0, 3] == pytest.approx(-math.log(100))
    assert fm.transforms == {"a4": "slog", "a6": "slog"}
    assert fm.y.tolist() == [1, 0]
    assert fm.kind == "class"
    assert fm.labels == ("a", "b")

    raw = experiments.feature_matrix(records, ["a4", "a6"], "omega", transform="raw")
    assert raw.X.tolist() == [[-100, 0], [5, 7]]
    assert raw.transforms == {}
    with pytest.raises(ConfigError):
        experiments.feature_matrix(records, "coeffs", "rank", transform="log")


def test_make_model() -> None:
    assert isinstance(experiments.make_model("gbt", "class"), GBTModel)
    assert experiments.make_model("gbt", "class").loss == "softmax"
    with pytest.raises(ConfigError):
        experiments.make_model("linear", "class")
    with pytest.raises(ConfigError):
        experiments.make_model("logistic", "real")


def test_classification_experiment() -> None:
    records = rank_from_triple(150, seed=0)
    spec = ExperimentSpec(target="rank", model="gbt", params=SMALL_GBT, k=5, seed=3)
    report = experiments.run_experiment(records, spec)

    assert report.kind == "class"
    assert len(report.fold_scores) == 5
    assert report.mean["mcc"] > 0.95
    assert report.mean["f1_micro"] > 0.95
    assert report.classes == (0, 1, 2)
    assert report.confusion.shape == (3, 3)
    assert sum(report.importances.values()) == pytest.approx(1)
    assert report.importances["a1"] + report.importances["a3"] > 0.9
    assert report.settings["transforms"] == {"a4": "slog", "a6": "slog"}

    payload = report.to_dict()
    assert set(payload) == {
        "settings", "kind", "features", "folds", "mean", "std", "importances",
        "classes", "confusion", "confusion_minus_dummy",
    }  # fmt: skip
    pairs = report.true_vs_predicted()
    assert len(pairs) == 150
    assert pairs[0][0] == "s0"


def test_experiment_deterministic() -> None:
    records = rank_from_triple(80, seed=1)
    spec = ExperimentSpec(target="rank", params=GBTParams(n_trees=5, subsample=0.7), seed=2)
    first = experiments.run_experiment(records, spec)
    second = experiments.run_experiment(make_view(records), spec)
    assert first.fold_scores == second.fold_scores
    assert np.array_equal(first.y_pred, second.y_pred)


def test_regression_experiment() -> None:
    records = linear_conductor(100, seed=2)
    spec = ExperimentSpec(target="conductor", features=("a4", "a6"), model="linear", transform="raw")
    report = experiments.run_experiment(records, spec)
    assert report.kind == "real"
    assert set(report.mean) == {"nmae", "rmse"}
    assert report.mean["nmae"] == pytest.approx(0, abs=1e-9)
    assert all(v == 0 for v in report.importances.values())
    assert "classes" not in report.to_dict()

    dummy = experiments.run_experiment(records, ExperimentSpec(target="conductor", model="dummy"))
    assert dummy.mean["nmae"] > 0.05


def test_experiment_sampling(synthetic) -> None:  # type: ignore[no-untyped-def]
    spec = ExperimentSpec(target="omega", model="dummy", n_sample=50, seed=1)
    report = experiments.run_experiment(synthetic, spec)
    assert report.settings["n_rows"] == 50
    with pytest.raises(ConfigError):
        experiments.run_experiment(synthetic, ExperimentSpec(target="rank", model="forest"))


def test_learning_curve() -> None:
    records = rank_from_triple(100, seed=4)
    spec = ExperimentSpec(target="rank", params=GBTParams(n_trees=5, max_depth=2), seed=5)
    points = experiments.learning_curve(records, spec)
    assert [p.fraction for p in points] == list(experiments.LEARNING_FRACTIONS)
    assert [p.n_train for p in points] == [10, 20, 30, 40, 50, 60, 70, 80]
    assert all(p.metric == "mcc" and p.error is None for p in points)

    [too_big] = experiments.learning_curve(records, spec, fractions=(0.9,))
    assert too_big.error is not None
    assert math.isnan(too_big.mean)

    with pytest.raises(ConfigError):
        experiments.learning_curve(records, spec, fractions=(0.5, 1.0))


def test_ols_table_and_equation() -> None:
    records = linear_conductor(60, seed=6)
    result = experiments.ols_table(records, "conductor", ["a4", "a6"])
    assert result.params == pytest.approx([7, 3, -2])
    assert result.r2 == pytest.approx(1)

    equation = experiments.hyperplane_equation(result, "conductor", digits=2)
    assert equation == "conductor ~ 7.00 + 3.00 a4 - 2.00 a6"

    planes = experiments.hyperplanes(records, "conductor", ["a4", "a6"])
    assert sorted(planes) == ["raw", "zscored"]
    assert planes["zscored"].r2 == pytest.approx(planes["raw"].r2)
