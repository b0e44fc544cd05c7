"""Seeded synthetic corpus with planted class-conditional vocabulary.

Documents are bags of pronounceable nonsense words drawn from three disjoint
pools: a shared pool used by every class, an R-marker pool injected into R
documents, and an NR-marker pool injected into NR documents.  I documents
draw only from the shared pool.  Class counts come from a deterministic
quota (floor plus largest remainder), so corpus composition is exact rather
than sampled.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .corpus import LABELS, LabeledRecord, Record, RecordDate, write_records_jsonl
from .errors import ValidationError
from .seeding import derive_seed

_ONSETS = ("b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z")
_VOWELS = ("a", "e", "i", "o", "u")
_CODAS = ("", "n", "r", "s", "l", "m")

DEFAULT_SOURCES = (
    ("JKLF World", "blog"),
    ("Kashmir Reader", "news"),
    ("Valley Tribune", "news"),
    ("Huriyat Voice", "article"),
    ("Peoples League Journal", "blog"),
    ("United Kashmir Post", "blog"),
)


def _syllables():
    for onset in _ONSETS:
        for vowel in _VOWELS:
            for coda in _CODAS:
                yield onset + vowel + coda


def token_pools(
    shared_size: int, r_size: int, nr_size: int
) -> tuple[tuple[str, ...], tuple[str, ...], tuple[str, ...]]:
    """Three disjoint pools of pronounceable nonsense words.

    Pools are carved from a fixed enumeration of two-syllable strings, so
    they are identical across runs and disjoint by construction.  Marker
    words carry a distinguishing suffix to keep them recognizably synthetic.
    """
    need = shared_size + r_size + nr_size
    words = []
    first = list(_syllables())
    for s1 in first:
        for s2 in first:
            words.append(s1 + s2)
            if len(words) >= need:
                break
        if len(words) >= need:
            break
    if len(words) < need:
        raise ValidationError(f"pool sizes too large: need {need} distinct words")
    shared = tuple(words[:shared_size])
    r_pool = tuple(w + "aq" for w in words[shared_size : shared_size + r_size])
    nr_pool = tuple(w + "ox" for w in words[shared_size + r_size : need])
    return shared, r_pool, nr_pool


@dataclass(frozen=True)
class SynthConfig:
    n_records: int = 300
    mean_length: int = 60
    shared_pool_size: int = 400
    r_pool_size: int = 40
    nr_pool_size: int = 40
    injection_rate: float = 0.2
    proportions: tuple[float, float, float] = (0.4, 0.4, 0.2)
    seed: int = 0
    year_range: tuple[int, int] = (2006, 2018)
    sources: tuple[tuple[str, str], ...] = DEFAULT_SOURCES
    disagreement_rate: float = 0.1

    def __post_init__(self):
        if self.n_records <= 0:
            raise ValidationError("n_records must be positive")
        if abs(sum(self.proportions) - 1.0) > 1e-9:
            raise ValidationError("class proportions must sum to 1")
        if not (0.0 < self.injection_rate <= 1.0):
            raise ValidationError("injection rate must be in (0, 1]")
        if not (0.0 <= self.disagreement_rate < 1.0):
            raise ValidationError("disagreement rate must be in [0, 1)")
        if self.year_range[0] > self.year_range[1]:
            raise ValidationError("year range is reversed")
        if self.mean_length < 10:
            raise ValidationError("mean_length below 10 gives degenerate documents")


def class_quotas(n: int, proportions: tuple[float, float, float]) -> dict[str, int]:
    """Exact class counts: floor each share, hand leftovers to the largest
    remainders (ties broken by class order R, NR, I)."""
    exact = {lab: p * n for lab, p in zip(LABELS, proportions)}
    counts = {lab: int(exact[lab]) for lab in LABELS}
    leftover = n - sum(counts.values())
    order = sorted(
        LABELS, key=lambda lab: (-(exact[lab] - counts[lab]), LABELS.index(lab))
    )
    for lab in order[:leftover]:
        counts[lab] += 1
    return counts


def _doc_length(rng: np.random.Generator, mean: int) -> int:
    raw = rng.geometric(1.0 / mean)
    return int(min(max(raw, 20), 2 * mean))


def generate_corpus(config: SynthConfig) -> list[LabeledRecord]:
    """Build the labeled corpus; identical output for identical config."""
    shared, r_pool, nr_pool = token_pools(
        config.shared_pool_size, config.r_pool_size, config.nr_pool_size
    )
    rng = np.random.default_rng(derive_seed(config.seed, "synth-corpus"))
    quotas = class_quotas(config.n_records, config.proportions)
    labels: list[str] = []
    for lab in LABELS:
        labels.extend([lab] * quotas[lab])
    rng.shuffle(labels)

    records: list[LabeledRecord] = []
    for i, lab in enumerate(labels):
        length = _doc_length(rng, config.mean_length)
        marker_pool = {"R": r_pool, "NR": nr_pool, "I": ()}[lab]
        words = []
        forced = rng.integers(0, length) if marker_pool else -1
        for j in range(length):
            inject = marker_pool and (
                j == forced or rng.random() < config.injection_rate
            )
            pool = marker_pool if inject else shared
            words.append(pool[rng.integers(0, len(pool))])
        year = int(rng.integers(config.year_range[0], config.year_range[1] + 1))
        name, stype = config.sources[rng.integers(0, len(config.sources))]
        rec = Record(
            id=f"syn-{i:05d}",
            source_name=name,
            source_type=stype,
            date=RecordDate(year=year),
            title=f"post {i}",
            body=" ".join(words),
        )
        records.append(LabeledRecord(record=rec, label=lab, annotator_id="gold"))
    return records


def write_corpus_jsonl(corpus: list[LabeledRecord], path: str | Path) -> None:
    write_records_jsonl([item.record for item in corpus], path)


def write_label_csv(
    corpus: list[LabeledRecord], path: str | Path, config: SynthConfig
) -> None:
    """Two synthetic annotators: annotator_1 carries the gold label,
    annotator_2 flips to a different class at the disagreement rate."""
    rng = np.random.default_rng(derive_seed(config.seed, "synth-annotators"))
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["record_id", "annotator_id", "label", "timestamp"])
        for k, item in enumerate(corpus):
            stamp = f"2026-01-01T00:{k // 60 % 60:02d}:{k % 60:02d}"
            writer.writerow([item.record.id, "annotator_1", item.label, stamp])
            label_2 = item.label
            if rng.random() < config.disagreement_rate:
                others = [lab for lab in LABELS if lab != item.label]
                label_2 = others[rng.integers(0, len(others))]
            writer.writerow([item.record.id, "annotator_2", label_2, stamp])
