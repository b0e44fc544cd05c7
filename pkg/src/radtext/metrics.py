"""Precision/recall/F1/accuracy over labeled predictions, plus the
ranked model-comparison table.

evaluate() tallies exact TP/FP/FN counts per class. Zero denominators
follow one convention everywhere: the metric is 0 when undefined. The
comparison table ranks named reports by the positive-class precision and
renders both an aligned text block and CSV with two-decimal percentages.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import LABELS, LabeledRecord
from .errors import ValidationError


@dataclass(frozen=True)
class EvalReport:
    """Per-class and macro-averaged scores; values are fractions in [0, 1].

    positive_class names the class whose row is the headline in 2-class
    work; it stays "R" for 3-class reports too.
    """

    classes: tuple[str, ...]
    precision: dict[str, float]
    recall: dict[str, float]
    f1: dict[str, float]
    support: dict[str, int]
    macro_precision: float
    macro_recall: float
    macro_f1: float
    accuracy: float
    n: int
    positive_class: str = "R"

    def __post_init__(self):
        for table in (self.precision, self.recall, self.f1, self.support):
            if set(table) != set(self.classes):
                raise ValidationError("per-class tables must cover exactly the classes")
        for table in (self.precision, self.recall, self.f1):
            for v in table.values():
                if not (0.0 <= v <= 1.0):
                    raise ValidationError("metric values must lie in [0, 1]")
        for v in (self.macro_precision, self.macro_recall, self.macro_f1, self.accuracy):
            if not (0.0 <= v <= 1.0):
                raise ValidationError("metric values must lie in [0, 1]")
        if any(c < 0 for c in self.support.values()):
            raise ValidationError("support counts must be non-negative")
        if self.positive_class not in self.classes:
            raise ValidationError("positive_class must be one of the classes")

    @property
    def headline_precision(self) -> float:
        return self.precision[self.positive_class]

    @property
    def headline_recall(self) -> float:
        return self.recall[self.positive_class]

    @property
    def headline_f1(self) -> float:
        return self.f1[self.positive_class]


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def evaluate(predictions: list, truth: list[LabeledRecord]) -> EvalReport:
    """Score predictions against gold labels by exact confusion tallies.

    predictions may be any objects with record_id and label attributes;
    their id set must equal the truth id set.
    """
    truth_by_id = {}
    for item in truth:
        rid = item.record.id
        if rid in truth_by_id:
            raise ValidationError(f"duplicate truth id {rid!r}")
        truth_by_id[rid] = item.label
    pred_by_id = {}
    for p in predictions:
        if p.record_id in pred_by_id:
            raise ValidationError(f"duplicate prediction id {p.record_id!r}")
        pred_by_id[p.record_id] = p.label
    if set(pred_by_id) != set(truth_by_id):
        raise ValidationError("prediction ids must match truth ids exactly")
    if not truth_by_id:
        raise ValidationError("nothing to evaluate")

    seen = set(truth_by_id.values()) | set(pred_by_id.values())
    classes = tuple(lab for lab in LABELS if lab in seen)
    tp = {c: 0 for c in classes}
    fp = {c: 0 for c in classes}
    fn = {c: 0 for c in classes}
    support = {c: 0 for c in classes}
    correct = 0
    for rid, gold in truth_by_id.items():
        pred = pred_by_id[rid]
        support[gold] += 1
        if pred == gold:
            tp[gold] += 1
            correct += 1
        else:
            fp[pred] += 1
            fn[gold] += 1

    precision = {c: _safe_div(tp[c], tp[c] + fp[c]) for c in classes}
    recall = {c: _safe_div(tp[c], tp[c] + fn[c]) for c in classes}
    f1 = {
        c: _safe_div(2 * precision[c] * recall[c], precision[c] + recall[c])
        for c in classes
    }
    k = len(classes)
    positive = "R" if "R" in classes else classes[0]
    return EvalReport(
        classes=classes,
        precision=precision,
        recall=recall,
        f1=f1,
        support=support,
        macro_precision=sum(precision.values()) / k,
        macro_recall=sum(recall.values()) / k,
        macro_f1=sum(f1.values()) / k,
        accuracy=correct / len(truth_by_id),
        n=len(truth_by_id),
        positive_class=positive,
    )


@dataclass(frozen=True)
class ComparisonRow:
    name: str
    precision: float
    recall: float
    f1: float
    accuracy: float


@dataclass(frozen=True)
class ComparisonTable:
    rows: tuple[ComparisonRow, ...]

    def to_csv(self) -> str:
        lines = ["name,precision,recall,f1,accuracy"]
        for r in self.rows:
            lines.append(
                "%s,%.2f,%.2f,%.2f,%.2f"
                % (r.name, 100 * r.precision, 100 * r.recall, 100 * r.f1, 100 * r.accuracy)
            )
        return "\n".join(lines) + "\n"

    def to_text(self) -> str:
        header = ("model", "precision", "recall", "f1", "accuracy")
        body = [
            (
                r.name,
                "%.2f" % (100 * r.precision),
                "%.2f" % (100 * r.recall),
                "%.2f" % (100 * r.f1),
                "%.2f" % (100 * r.accuracy),
            )
            for r in self.rows
        ]
        widths = [
            max(len(header[j]), *(len(row[j]) for row in body)) if body else len(header[j])
            for j in range(5)
        ]
        def fmt(row):
            return "  ".join(cell.ljust(widths[j]) for j, cell in enumerate(row)).rstrip()
        return "\n".join([fmt(header)] + [fmt(row) for row in body]) + "\n"


def comparison_table(reports: dict[str, EvalReport]) -> ComparisonTable:
    """Rank named reports by headline precision, descending; name breaks
    ties so the order is total."""
    if not reports:
        raise ValidationError("comparison needs at least one report")
    rows = [
        ComparisonRow(
            name=name,
            precision=rep.headline_precision,
            recall=rep.headline_recall,
            f1=rep.headline_f1,
            accuracy=rep.accuracy,
        )
        for name, rep in reports.items()
    ]
    rows.sort(key=lambda r: (-r.precision, r.name))
    return ComparisonTable(rows=tuple(rows))
