"""Accuracy and per-class precision/recall/F1 with Macro-F1.

A class absent from both the gold labels and the predictions has undefined
precision and recall; its F1 is reported as 0 and the class is flagged, since
any convention here shifts Macro-F1.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .corpus import POLARITIES
from .errors import DataError


@dataclass(frozen=True)
class ClassMetrics:
    label: str
    tp: int
    fp: int
    fn: int

    @property
    def support(self) -> int:
        return self.tp + self.fn

    @property
    def precision(self) -> float:
        denom = self.tp + self.fp
        return self.tp / denom if denom else 0.0

    @property
    def recall(self) -> float:
        denom = self.tp + self.fn
        return self.tp / denom if denom else 0.0

    @property
    def f1(self) -> float:
        p, r = self.precision, self.recall
        return 2 * p * r / (p + r) if p + r else 0.0

    @property
    def undefined(self) -> bool:
        """True when the class never occurs in gold or predictions."""
        return self.tp + self.fp + self.fn == 0


@dataclass
class EvalReport:
    per_class: dict[str, ClassMetrics]
    accuracy: float
    macro_f1: float
    total: int
    predictions: list = field(default_factory=list)  # (sentence_id, aspect_index, gold, predicted)

    @property
    def undefined_classes(self) -> list[str]:
        return [label for label, m in self.per_class.items() if m.undefined]

    def to_lines(self, prefix: str = "") -> list[str]:
        p = f"{prefix}." if prefix else ""
        lines = [
            f"{p}accuracy={self.accuracy:.6f}",
            f"{p}macro_f1={self.macro_f1:.6f}",
            f"{p}total={self.total}",
        ]
        for label, m in self.per_class.items():
            lines.append(
                f"{p}{label}: precision={m.precision:.6f} recall={m.recall:.6f} "
                f"f1={m.f1:.6f} support={m.support}"
            )
        if self.undefined_classes:
            lines.append(f"{p}undefined_f1_classes={','.join(self.undefined_classes)}")
        return lines

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "macro_f1": self.macro_f1,
            "total": self.total,
            "per_class": {
                label: {
                    "precision": m.precision,
                    "recall": m.recall,
                    "f1": m.f1,
                    "support": m.support,
                }
                for label, m in self.per_class.items()
            },
            "undefined_f1_classes": self.undefined_classes,
        }


def compute_metrics(gold, predicted, ids=None, labels=POLARITIES) -> EvalReport:
    """Aggregate aspect-level predictions into an EvalReport.

    gold and predicted are parallel lists of class indices into `labels`;
    ids, when given, is a parallel list of (sentence_id, aspect_index).
    """
    gold = list(gold)
    predicted = list(predicted)
    if len(gold) != len(predicted):
        raise DataError(f"{len(gold)} gold labels but {len(predicted)} predictions")
    if not gold:
        raise DataError("cannot evaluate an empty prediction set")
    c = len(labels)
    for v in gold + predicted:
        if not 0 <= v < c:
            raise DataError(f"label index {v} outside 0..{c - 1}")
    per_class = {}
    for ci, label in enumerate(labels):
        tp = sum(1 for g, p in zip(gold, predicted) if g == ci and p == ci)
        fp = sum(1 for g, p in zip(gold, predicted) if g != ci and p == ci)
        fn = sum(1 for g, p in zip(gold, predicted) if g == ci and p != ci)
        per_class[label] = ClassMetrics(label=label, tp=tp, fp=fp, fn=fn)
    correct = sum(1 for g, p in zip(gold, predicted) if g == p)
    macro = sum(m.f1 for m in per_class.values()) / c
    rows = []
    if ids is not None:
        rows = [(sid, ai, g, p) for (sid, ai), g, p in zip(ids, gold, predicted)]
    return EvalReport(
        per_class=per_class,
        accuracy=correct / len(gold),
        macro_f1=macro,
        total=len(gold),
        predictions=rows,
    )
