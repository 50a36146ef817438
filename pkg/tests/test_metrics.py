"""Evaluation metrics against hand computations and independent oracles."""

from __future__ import annotations

import numpy as np
import pytest

from sdgcn.errors import DataError
from sdgcn.metrics import compute_metrics
from sdgcn.rng import RngStream


def _brute_force(gold, predicted, num_classes=3):
    """Straight-from-definition recomputation, no shared code."""
    accuracy = sum(int(g == p) for g, p in zip(gold, predicted)) / len(gold)
    f1s = []
    for c in range(num_classes):
        tp = sum(1 for g, p in zip(gold, predicted) if g == c and p == c)
        pred_c = sum(1 for p in predicted if p == c)
        gold_c = sum(1 for g in gold if g == c)
        precision = tp / pred_c if pred_c else 0.0
        recall = tp / gold_c if gold_c else 0.0
        f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
    return accuracy, sum(f1s) / num_classes


def test_all_correct_is_perfect():
    report = compute_metrics([0, 1, 2, 1], [0, 1, 2, 1])
    assert report.accuracy == 1.0
    assert report.macro_f1 == 1.0
    assert not report.undefined_classes


def test_hand_confusion_example():
    # positive: tp 2 fp 1 fn 0; negative: tp 1 fp 0 fn 1; neutral: tp 1 fp 0 fn 0
    gold = [0, 0, 1, 1, 2]
    predicted = [0, 0, 1, 0, 2]
    report = compute_metrics(gold, predicted)
    assert report.accuracy == pytest.approx(0.8)
    assert report.per_class["positive"].f1 == pytest.approx(0.8)
    assert report.per_class["negative"].f1 == pytest.approx(2 / 3, abs=1e-4)
    assert report.per_class["neutral"].f1 == pytest.approx(1.0)
    assert report.macro_f1 == pytest.approx((0.8 + 2 / 3 + 1.0) / 3, abs=1e-4)
    assert report.macro_f1 == pytest.approx(0.8222, abs=1e-4)


def test_absent_class_flagged_and_scored_zero():
    report = compute_metrics([0, 0, 1], [0, 0, 1])
    assert report.per_class["neutral"].f1 == 0.0
    assert report.undefined_classes == ["neutral"]
    assert report.macro_f1 == pytest.approx(2 / 3)


def test_input_validation():
    with pytest.raises(DataError):
        compute_metrics([0, 1], [0])
    with pytest.raises(DataError):
        compute_metrics([], [])
    with pytest.raises(DataError):
        compute_metrics([0, 3], [0, 1])


def test_prediction_rows_carry_ids():
    report = compute_metrics([0, 1], [1, 1], ids=[("s1", 0), ("s1", 1)])
    assert report.predictions == [("s1", 0, 0, 1), ("s1", 1, 1, 1)]


@pytest.mark.parametrize("seed", range(40))
def test_matches_brute_force_on_random_vectors(seed):
    rng = RngStream(seed, "metrics")
    n = rng.integers(1, 60)
    gold = [rng.integers(0, 3) for _ in range(n)]
    predicted = [rng.integers(0, 3) for _ in range(n)]
    report = compute_metrics(gold, predicted)
    acc, macro = _brute_force(gold, predicted)
    assert abs(report.accuracy - acc) < 1e-12
    assert abs(report.macro_f1 - macro) < 1e-12


def test_matches_sklearn_when_available():
    sklearn_metrics = pytest.importorskip("sklearn.metrics")
    rng = RngStream(99, "sklearn")
    for _ in range(50):
        n = rng.integers(2, 80)
        gold = [rng.integers(0, 3) for _ in range(n)]
        predicted = [rng.integers(0, 3) for _ in range(n)]
        report = compute_metrics(gold, predicted)
        want = sklearn_metrics.f1_score(
            gold, predicted, labels=[0, 1, 2], average="macro", zero_division=0
        )
        assert report.macro_f1 == pytest.approx(want, abs=1e-12)
        assert report.accuracy == pytest.approx(
            sklearn_metrics.accuracy_score(gold, predicted), abs=1e-12
        )


def test_thousand_random_vectors_match_brute_force():
    """Accuracy and Macro-F1 vs an independent recount, exact to 1e-12."""
    rng = np.random.default_rng(99)
    for _ in range(1000):
        n = int(rng.integers(1, 60))
        gold = [int(g) for g in rng.integers(0, 3, size=n)]
        pred = [int(p) for p in rng.integers(0, 3, size=n)]
        report = compute_metrics(gold, pred)
        f1s = []
        for c in range(3):
            tp = sum(1 for g, p in zip(gold, pred) if g == c and p == c)
            fp = sum(1 for g, p in zip(gold, pred) if g != c and p == c)
            fn = sum(1 for g, p in zip(gold, pred) if g == c and p != c)
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            f1s.append(2 * precision * recall / (precision + recall) if precision + recall else 0.0)
        assert abs(report.macro_f1 - sum(f1s) / 3.0) <= 1e-12
        assert abs(report.accuracy - sum(1 for g, p in zip(gold, pred) if g == p) / n) <= 1e-12
