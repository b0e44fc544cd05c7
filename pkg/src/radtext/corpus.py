"""Record data model, file ingestion, text cleaning, and train/test splits.

Records arrive as JSONL (one object per line) or CSV with a fixed header
``id,source_name,source_type,date,title,body,language``.  Dates are either
``YYYY`` or ``YYYY-MM-DD``.  Ingestion drops records whose body is empty or
contains no alphanumeric character, and counts the drops.
"""

from __future__ import annotations

import csv
import json
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import DegenerateSplitError, ParseError, ValidationError

LABELS = ("R", "NR", "I")
SOURCE_TYPES = ("news", "article", "blog")

# ASCII punctuation plus typographic quotes/dashes; stripped from token
# edges only, so intra-word apostrophes survive.
PUNCT_STRIP = string.punctuation + "“”‘’«»‚„‹›—–‐‑‒―…·"

CSV_COLUMNS = ("id", "source_name", "source_type", "date", "title", "body", "language")

MIN_YEAR, MAX_YEAR = 1990, 2100


@dataclass(frozen=True)
class RecordDate:
    """Calendar date with required year and optional month/day."""

    year: int
    month: int | None = None
    day: int | None = None

    def __post_init__(self):
        if not (MIN_YEAR <= self.year <= MAX_YEAR):
            raise ValidationError(f"year {self.year} outside [{MIN_YEAR}, {MAX_YEAR}]")
        if (self.month is None) != (self.day is None):
            raise ValidationError("month and day must be given together")
        if self.month is not None:
            if not (1 <= self.month <= 12):
                raise ValidationError(f"month {self.month} outside [1, 12]")
            if not (1 <= self.day <= 31):
                raise ValidationError(f"day {self.day} outside [1, 31]")

    @classmethod
    def parse(cls, text: str) -> "RecordDate":
        """Parse 'YYYY' or 'YYYY-MM-DD'."""
        parts = text.strip().split("-")
        try:
            if len(parts) == 1:
                return cls(year=int(parts[0]))
            if len(parts) == 3:
                return cls(year=int(parts[0]), month=int(parts[1]), day=int(parts[2]))
        except ValueError:
            pass
        raise ValidationError(f"date {text!r} is neither YYYY nor YYYY-MM-DD")

    def __str__(self) -> str:
        if self.month is None:
            return f"{self.year:04d}"
        return f"{self.year:04d}-{self.month:02d}-{self.day:02d}"


@dataclass(frozen=True)
class Record:
    """One text document; the unit of everything downstream."""

    id: str
    source_name: str
    source_type: str
    date: RecordDate
    title: str
    body: str
    language: str = "en"

    def __post_init__(self):
        if not self.id:
            raise ValidationError("record id must be non-empty")
        if self.source_type not in SOURCE_TYPES:
            raise ValidationError(
                f"source_type {self.source_type!r} not one of {SOURCE_TYPES}"
            )


@dataclass(frozen=True)
class LabeledRecord:
    record: Record
    label: str
    annotator_id: str

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValidationError(f"label {self.label!r} not one of {LABELS}")
        if not self.annotator_id:
            raise ValidationError("annotator_id must be non-empty")


@dataclass(frozen=True)
class TokenSequence:
    """Cleaned, lowercased tokens of one record."""

    tokens: tuple[str, ...]
    source_record_id: str


@dataclass(frozen=True)
class StopwordList:
    words: frozenset[str]
    name: str


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float
    seed: int
    stratified: bool = False

    def __post_init__(self):
        if not (0.0 < self.train_fraction < 1.0):
            raise ValidationError(
                f"train_fraction {self.train_fraction} outside (0, 1)"
            )


@dataclass
class IngestReport:
    kept: int = 0
    dropped: int = 0

    @property
    def total(self) -> int:
        return self.kept + self.dropped


def load_stopwords(path: str | Path, name: str | None = None) -> StopwordList:
    """Read a stopword file: UTF-8, one word per line, '#' comments."""
    words = set()
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if line:
                words.add(line.lower())
    return StopwordList(words=frozenset(words), name=name or Path(path).name)


def default_stopwords() -> StopwordList:
    """The stopword list shipped with the package."""
    text = resources.files("radtext.data").joinpath("stopwords.txt").read_text("utf-8")
    words = set()
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            words.add(line.lower())
    return StopwordList(words=frozenset(words), name="default-v1")


def _has_content(body: str) -> bool:
    """True when the body holds at least one alphanumeric character."""
    return any(ch.isalnum() for ch in body)


def _record_from_mapping(row: dict, line: int) -> Record:
    for key in ("id", "source_name", "source_type", "date", "body"):
        if key not in row or row[key] in (None, ""):
            raise ParseError(f"missing field {key!r}", line=line)
    try:
        date = RecordDate.parse(str(row["date"]))
        return Record(
            id=str(row["id"]),
            source_name=str(row["source_name"]),
            source_type=str(row["source_type"]),
            date=date,
            title=str(row.get("title") or ""),
            body=str(row["body"]),
            language=str(row.get("language") or "en"),
        )
    except ValidationError as exc:
        raise ParseError(str(exc), line=line) from exc


def ingest_records(
    path: str | Path, format: str
) -> tuple[list[Record], IngestReport]:
    """Read records from ``path``; drop bodies with no alphanumeric content.

    Returns the kept records and an IngestReport whose kept+dropped equals
    the input row count.  Raises ParseError (with line number) on malformed
    rows and ValidationError on duplicate ids.
    """
    if format not in ("jsonl", "csv"):
        raise ValidationError(f"unknown format {format!r}")
    records: list[Record] = []
    report = IngestReport()
    seen: set[str] = set()

    def take(rec: Record) -> None:
        if rec.id in seen:
            raise ValidationError(f"duplicate record id {rec.id!r}")
        seen.add(rec.id)
        if _has_content(rec.body):
            records.append(rec)
            report.kept += 1
        else:
            report.dropped += 1

    with open(path, encoding="utf-8") as fh:
        if format == "jsonl":
            for line_no, raw in enumerate(fh, start=1):
                if not raw.strip():
                    continue
                try:
                    row = json.loads(raw)
                except json.JSONDecodeError as exc:
                    raise ParseError(f"invalid JSON: {exc.msg}", line=line_no) from exc
                if not isinstance(row, dict):
                    raise ParseError("row is not a JSON object", line=line_no)
                take(_record_from_mapping(row, line_no))
        else:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None:
                raise ParseError("empty CSV file", line=1)
            if set(reader.fieldnames) != set(CSV_COLUMNS):
                raise ParseError(
                    f"CSV header must be exactly {','.join(CSV_COLUMNS)}", line=1
                )
            for line_no, row in enumerate(reader, start=2):
                take(_record_from_mapping(row, line_no))
    return records, report


def write_records_jsonl(records: list[Record], path: str | Path) -> None:
    """Write records in the JSONL interchange format."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(
                json.dumps(
                    {
                        "id": rec.id,
                        "source_name": rec.source_name,
                        "source_type": rec.source_type,
                        "date": str(rec.date),
                        "title": rec.title,
                        "body": rec.body,
                        "language": rec.language,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )


def clean_and_tokenize(record: Record, stopwords: StopwordList) -> TokenSequence:
    """Lowercase, split on whitespace, strip edge punctuation, drop stopwords.

    Non-ASCII words pass through untouched apart from lowercasing.  An empty
    output sequence is legal; the caller decides what to do with it.
    """
    tokens = []
    for raw in record.body.lower().split():
        tok = raw.strip(PUNCT_STRIP)
        if tok and tok not in stopwords.words:
            tokens.append(tok)
    return TokenSequence(tokens=tuple(tokens), source_record_id=record.id)


def _train_size(fraction: float, n: int) -> int:
    size = int(round(fraction * n))
    if size <= 0 or size >= n:
        raise DegenerateSplitError(
            f"fraction {fraction} of {n} records leaves an empty side"
        )
    return size


def split_corpus(
    corpus: list[LabeledRecord], spec: SplitSpec
) -> tuple[list[LabeledRecord], list[LabeledRecord]]:
    """Partition the corpus into train/test, deterministically by seed.

    |train| = round(train_fraction * n).  Stratified splits allocate the
    train quota per class by largest remainder, keeping per-class
    proportions within one record of the corpus proportions.
    """
    if not corpus:
        raise ValidationError("corpus is empty")
    n = len(corpus)
    n_train = _train_size(spec.train_fraction, n)
    rng = np.random.default_rng(spec.seed)

    if not spec.stratified:
        order = rng.permutation(n)
        train_idx = sorted(order[:n_train].tolist())
        test_idx = sorted(order[n_train:].tolist())
    else:
        by_class: dict[str, list[int]] = {}
        for i, item in enumerate(corpus):
            by_class.setdefault(item.label, []).append(i)
        classes = [c for c in LABELS if c in by_class]
        # Largest-remainder quota over the per-class train counts.
        exact = {c: spec.train_fraction * len(by_class[c]) for c in classes}
        quota = {c: int(exact[c]) for c in classes}
        leftover = n_train - sum(quota.values())
        if leftover > 0:
            by_rem = sorted(classes, key=lambda c: (-(exact[c] - quota[c]), c))
            for c in by_rem[:leftover]:
                quota[c] += 1
        elif leftover < 0:
            by_rem = sorted(classes, key=lambda c: (exact[c] - quota[c], c))
            for c in by_rem[: -leftover]:
                quota[c] = max(0, quota[c] - 1)
        train_idx, test_idx = [], []
        for c in classes:
            members = np.asarray(by_class[c])
            order = rng.permutation(len(members))
            chosen = members[order[: quota[c]]]
            rest = members[order[quota[c] :]]
            train_idx.extend(chosen.tolist())
            test_idx.extend(rest.tolist())
        train_idx.sort()
        test_idx.sort()

    train = [corpus[i] for i in train_idx]
    test = [corpus[i] for i in test_idx]
    if not train or not test:
        raise DegenerateSplitError("split produced an empty side")
    return train, test
