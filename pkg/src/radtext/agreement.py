"""Two-annotator label management, confusion matrices, Cohen's kappa, and
adjudication into a single gold label set.

Kappa is computed in double precision from exact integer counts:
kappa = (p_o - p_e) / (1 - p_e) with p_o = trace/n and
p_e = sum_k (row_k/n)(col_k/n).  When p_e = 1 (all mass concentrated in one
row and one column) the statistic is undefined and an error is raised.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LABELS, LabeledRecord, Record
from .errors import (
    EmptyMatrixError,
    EmptyOverlapError,
    UndefinedKappaError,
    ValidationError,
)


@dataclass(frozen=True)
class AnnotationSet:
    """All labels one annotator assigned, keyed by record id."""

    annotator_id: str
    labels: dict[str, str]

    def __post_init__(self):
        if not self.annotator_id:
            raise ValidationError("annotator_id must be non-empty")
        for rid, lab in self.labels.items():
            if lab not in LABELS:
                raise ValidationError(f"label {lab!r} for {rid!r} not one of {LABELS}")


@dataclass(frozen=True)
class ConfusionMatrix:
    classes: tuple[str, ...]
    counts: np.ndarray
    n: int

    def __post_init__(self):
        if self.counts.shape != (len(self.classes), len(self.classes)):
            raise ValidationError("counts shape does not match class list")
        if (self.counts < 0).any():
            raise ValidationError("counts must be non-negative")
        if int(self.counts.sum()) != self.n:
            raise ValidationError("n must equal the sum of counts")


@dataclass(frozen=True)
class KappaReport:
    p_o: float
    p_e: float
    kappa: float
    n: int
    c: int


@dataclass(frozen=True)
class LabelEvent:
    """One row of the append-only label log."""

    record_id: str
    annotator_id: str
    label: str
    timestamp: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"label {self.label!r} not one of {LABELS}")


@dataclass
class AdjudicationReport:
    agreements: int = 0
    disagreements: int = 0
    # (label_a, label_b) -> count over shared records
    pair_counts: dict[tuple[str, str], int] = field(default_factory=dict)


def confusion_matrix(a: AnnotationSet, b: AnnotationSet) -> ConfusionMatrix:
    """Tally shared records into a c x c matrix, rows = a, columns = b.

    Class order is fixed (R, NR, I).  Records labeled by only one annotator
    are ignored; no shared ids at all is an error.
    """
    shared = sorted(set(a.labels) & set(b.labels))
    if not shared:
        raise EmptyOverlapError(
            f"annotators {a.annotator_id!r} and {b.annotator_id!r} share no records"
        )
    index = {lab: k for k, lab in enumerate(LABELS)}
    counts = np.zeros((len(LABELS), len(LABELS)), dtype=np.int64)
    for rid in shared:
        counts[index[a.labels[rid]], index[b.labels[rid]]] += 1
    return ConfusionMatrix(classes=LABELS, counts=counts, n=len(shared))


def cohens_kappa(m: ConfusionMatrix) -> KappaReport:
    """Observed vs chance agreement between two raters."""
    if m.n <= 0:
        raise EmptyMatrixError("agreement needs at least one shared item")
    counts = m.counts.astype(np.float64)
    n = float(m.n)
    p_o = float(np.trace(counts)) / n
    rows = counts.sum(axis=1) / n
    cols = counts.sum(axis=0) / n
    p_e = float(np.dot(rows, cols))
    # p_e reaches 1 only with all mass in a single row and single column;
    # test on the integer marginals to dodge float equality.
    if (m.counts.sum(axis=1) > 0).sum() == 1 and (m.counts.sum(axis=0) > 0).sum() == 1:
        raise UndefinedKappaError(
            "chance agreement is 1; kappa undefined for a single-cell matrix"
        )
    kappa = (p_o - p_e) / (1.0 - p_e)
    return KappaReport(p_o=p_o, p_e=p_e, kappa=kappa, n=m.n, c=len(m.classes))


def adjudicate(
    a: AnnotationSet,
    b: AnnotationSet,
    records: dict[str, Record],
    policy: str = "drop_disagreements",
    prefer: str | None = None,
) -> tuple[list[LabeledRecord], AdjudicationReport]:
    """Merge two annotators' labels into one gold list.

    policy "drop_disagreements" keeps only records both annotators agree on;
    "prefer_annotator" keeps every shared record, taking `prefer`'s label on
    conflicts.  Gold rows carry annotator_id "gold".  Only shared ids that
    also exist in `records` can be emitted; a shared id missing from
    `records` is an error.
    """
    if policy not in ("drop_disagreements", "prefer_annotator"):
        raise ValidationError(f"unknown policy {policy!r}")
    if policy == "prefer_annotator":
        if prefer not in (a.annotator_id, b.annotator_id):
            raise ValidationError(
                f"prefer={prefer!r} is not one of the two annotators"
            )
    shared = sorted(set(a.labels) & set(b.labels))
    if not shared:
        raise EmptyOverlapError("annotators share no records")

    gold: list[LabeledRecord] = []
    report = AdjudicationReport()
    preferred = a if prefer == a.annotator_id else b
    for rid in shared:
        la, lb = a.labels[rid], b.labels[rid]
        report.pair_counts[(la, lb)] = report.pair_counts.get((la, lb), 0) + 1
        if la == lb:
            report.agreements += 1
            chosen = la
        else:
            report.disagreements += 1
            if policy == "drop_disagreements":
                continue
            chosen = preferred.labels[rid]
        if rid not in records:
            raise ValidationError(f"record {rid!r} labeled but not in corpus")
        gold.append(
            LabeledRecord(record=records[rid], label=chosen, annotator_id="gold")
        )
    return gold, report


LABEL_LOG_HEADER = ("record_id", "annotator_id", "label", "timestamp")


def write_label_log(events: list[LabelEvent], path: str | Path) -> None:
    """Write the append-only label log CSV from scratch."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(LABEL_LOG_HEADER)
        for ev in events:
            writer.writerow([ev.record_id, ev.annotator_id, ev.label, ev.timestamp])


def append_label_event(event: LabelEvent, path: str | Path) -> None:
    """Append one event, creating the file with a header if absent."""
    p = Path(path)
    new = not p.exists()
    with open(p, "a", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        if new:
            writer.writerow(LABEL_LOG_HEADER)
        writer.writerow([event.record_id, event.annotator_id, event.label, event.timestamp])


def read_label_log(path: str | Path) -> list[LabelEvent]:
    """Read the label log; malformed rows raise, order is preserved."""
    events: list[LabelEvent] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or tuple(reader.fieldnames) != LABEL_LOG_HEADER:
            raise ValidationError(
                f"label log header must be {','.join(LABEL_LOG_HEADER)}"
            )
        for row in reader:
            events.append(
                LabelEvent(
                    record_id=row["record_id"],
                    annotator_id=row["annotator_id"],
                    label=row["label"],
                    timestamp=row["timestamp"],
                )
            )
    return events


def annotation_sets_from_log(events: list[LabelEvent]) -> dict[str, AnnotationSet]:
    """Collapse the append-only log into one AnnotationSet per annotator.

    The log may relabel a record; the latest event (by position) wins.
    """
    labels: dict[str, dict[str, str]] = {}
    for ev in events:
        labels.setdefault(ev.annotator_id, {})[ev.record_id] = ev.label
    return {
        aid: AnnotationSet(annotator_id=aid, labels=mapping)
        for aid, mapping in labels.items()
    }
