"""Vocabulary construction, word-vector training, document vectors, and
per-class centroid summaries.

The trainer is skip-gram with negative sampling.  A second mode,
"tied_affine", derives each output vector from the token's own input row
through the elementwise map w_out = w_in * alpha + b and backpropagates
through it; that map is also exposed directly as affine_update.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .corpus import LabeledRecord, TokenSequence
from .errors import MissingClassError, NumericError, ValidationError
from .seeding import derive_seed

OOV_TOKEN = "<oov>"
OOV_INDEX = 0


@dataclass(frozen=True)
class Vocabulary:
    token_to_index: dict[str, int]
    index_to_token: tuple[str, ...]
    counts: dict[str, int]
    min_count: int

    def __post_init__(self):
        for tok, idx in self.token_to_index.items():
            if self.index_to_token[idx] != tok:
                raise ValidationError("token_to_index and index_to_token disagree")
        if self.index_to_token[OOV_INDEX] != OOV_TOKEN:
            raise ValidationError(f"index {OOV_INDEX} must be the OOV sentinel")

    def __len__(self) -> int:
        return len(self.index_to_token)

    def index(self, token: str) -> int:
        return self.token_to_index.get(token, OOV_INDEX)


@dataclass(frozen=True)
class EmbeddingMatrix:
    vectors: np.ndarray
    dimension: int

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.vectors.shape[1] != self.dimension:
            raise ValidationError("vectors must be V x dimension")
        if not np.isfinite(self.vectors).all():
            raise NumericError("embedding matrix contains non-finite values")


@dataclass(frozen=True)
class EmbedTrainConfig:
    dimension: int = 32
    window: int = 4
    negatives: int = 5
    epochs: int = 5
    alpha: float = 0.025
    bias: float = 0.0
    seed: int = 0
    max_iterations: int = 50
    gradient_tolerance: float = 1e-4
    mode: str = "skipgram"

    def __post_init__(self):
        if self.dimension < 2:
            raise ValidationError("dimension must be at least 2")
        if self.window < 1 or self.negatives < 1:
            raise ValidationError("window and negatives must be at least 1")
        if self.alpha <= 0:
            raise ValidationError("alpha must be positive")
        if self.gradient_tolerance <= 0:
            raise ValidationError("gradient_tolerance must be positive")
        if self.epochs < 0 or self.max_iterations < 1:
            raise ValidationError("epochs must be >= 0 and max_iterations >= 1")
        if self.mode not in ("skipgram", "tied_affine"):
            raise ValidationError(f"unknown mode {self.mode!r}")

    @classmethod
    def tied(cls, **kw) -> "EmbedTrainConfig":
        """Literal-update mode: alpha defaults to 1.0 and bias to 0.0."""
        kw.setdefault("alpha", 1.0)
        kw["mode"] = "tied_affine"
        return cls(**kw)


@dataclass(frozen=True)
class ClassCentroids:
    mean_r: np.ndarray
    mean_nr: np.ndarray
    count_r: int
    count_nr: int


def build_vocab(sequences: list[TokenSequence], min_count: int = 1) -> Vocabulary:
    """Index tokens with frequency >= min_count, most frequent first and
    ties broken lexicographically; everything else maps to the sentinel."""
    if min_count < 1:
        raise ValidationError("min_count must be at least 1")
    counts = Counter()
    for seq in sequences:
        counts.update(seq.tokens)
    if not counts:
        raise ValidationError("no tokens in any sequence")
    kept = sorted(
        (tok for tok, c in counts.items() if c >= min_count),
        key=lambda tok: (-counts[tok], tok),
    )
    index_to_token = (OOV_TOKEN, *kept)
    token_to_index = {tok: i for i, tok in enumerate(index_to_token)}
    oov_count = sum(c for tok, c in counts.items() if c < min_count)
    final_counts = {tok: counts[tok] for tok in kept}
    final_counts[OOV_TOKEN] = oov_count
    return Vocabulary(
        token_to_index=token_to_index,
        index_to_token=index_to_token,
        counts=final_counts,
        min_count=min_count,
    )


def affine_update(w_in: np.ndarray, alpha: float, b: float) -> np.ndarray:
    """Elementwise w_out = w_in * alpha + b."""
    w_in = np.asarray(w_in, dtype=np.float64)
    if not (np.isfinite(w_in).all() and np.isfinite(alpha) and np.isfinite(b)):
        raise NumericError("affine_update requires finite inputs")
    return w_in * alpha + b


def _init_matrix(v: int, d: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(derive_seed(seed, "embed-init"))
    return rng.uniform(-0.5 / d, 0.5 / d, size=(v, d))


def _epoch_pairs(
    sequences_idx: list[np.ndarray],
    window: int,
    rng: np.random.Generator,
) -> tuple[np.ndarray, np.ndarray]:
    """Center/context index pairs for one epoch: sequence order shuffled,
    per-position window width drawn uniform from [1, window]."""
    centers: list[int] = []
    contexts: list[int] = []
    order = rng.permutation(len(sequences_idx))
    for si in order:
        seq = sequences_idx[si]
        n = len(seq)
        widths = rng.integers(1, window + 1, size=n)
        for pos in range(n):
            lo = max(0, pos - widths[pos])
            hi = min(n, pos + widths[pos] + 1)
            for ctx in range(lo, hi):
                if ctx != pos:
                    centers.append(seq[pos])
                    contexts.append(seq[ctx])
    return (
        np.asarray(centers, dtype=np.int64),
        np.asarray(contexts, dtype=np.int64),
    )


def noise_distribution(vocab: Vocabulary) -> np.ndarray:
    """Unigram frequencies raised to 0.75, normalized."""
    freq = np.zeros(len(vocab))
    for tok, c in vocab.counts.items():
        freq[vocab.token_to_index[tok]] = c
    weights = freq**0.75
    total = weights.sum()
    if total <= 0:
        raise ValidationError("vocabulary has no counted tokens")
    return weights / total


def train_embeddings(
    sequences: list[TokenSequence],
    vocab: Vocabulary,
    config: EmbedTrainConfig,
) -> EmbeddingMatrix:
    """Train word vectors; deterministic given config.seed.

    Stops after min(epochs, max_iterations) passes, or earlier when the
    epoch-mean per-pair gradient norm drops below gradient_tolerance.
    """
    v, d = len(vocab), config.dimension
    w_in = _init_matrix(v, d, config.seed)
    seq_idx = [
        np.asarray([vocab.index(t) for t in seq.tokens], dtype=np.int64)
        for seq in sequences
        if seq.tokens
    ]
    if not seq_idx:
        raise ValidationError("no non-empty sequences to train on")
    if all((arr == OOV_INDEX).all() for arr in seq_idx):
        raise ValidationError("every token is out of vocabulary")

    n_epochs = min(config.epochs, config.max_iterations)
    if n_epochs == 0:
        return EmbeddingMatrix(vectors=w_in, dimension=d)

    w_out = np.zeros((v, d))
    noise = noise_distribution(vocab)
    rng = np.random.default_rng(derive_seed(config.seed, "embed-train"))
    # Rough pair total for the linear decay denominator.
    total_positions = sum(len(arr) for arr in seq_idx)
    est_total = max(1, n_epochs * total_positions * (config.window + 1))
    processed = 0
    for _epoch in range(n_epochs):
        centers, contexts = _epoch_pairs(seq_idx, config.window, rng)
        n_pairs = len(centers)
        if n_pairs == 0:
            continue
        negatives = rng.choice(v, size=(n_pairs, config.negatives), p=noise)
        negatives = negatives.astype(np.int64)
        if config.mode == "skipgram":
            frac = (processed + np.arange(n_pairs, dtype=np.float64)) / est_total
            lr = config.alpha * np.maximum(1.0 - frac, 1e-4)
            norm_sum = _kernels.skipgram_epoch(
                w_in, w_out, centers, contexts, negatives, lr
            )
        else:
            lr = np.full(n_pairs, config.alpha)
            norm_sum = _kernels.tied_affine_epoch(
                w_in, config.alpha, config.bias, centers, contexts, negatives, lr
            )
        processed += n_pairs
        if not np.isfinite(w_in).all():
            raise NumericError("embedding training produced non-finite values")
        if norm_sum / n_pairs < config.gradient_tolerance:
            break
    return EmbeddingMatrix(vectors=w_in, dimension=d)


def doc_vector(
    sequence: TokenSequence, emb: EmbeddingMatrix, vocab: Vocabulary
) -> tuple[np.ndarray, bool]:
    """Mean of in-vocabulary token vectors.

    OOV tokens are skipped, not averaged.  When every token is OOV the
    sentinel's vector is returned with the flag set.
    """
    if not sequence.tokens:
        raise ValidationError(f"record {sequence.source_record_id}: empty sequence")
    idx = [vocab.index(t) for t in sequence.tokens]
    in_vocab = [i for i in idx if i != OOV_INDEX]
    if not in_vocab:
        return emb.vectors[OOV_INDEX].copy(), True
    return emb.vectors[np.asarray(in_vocab)].mean(axis=0), False


def class_centroids(
    train: list[tuple[LabeledRecord, np.ndarray]]
) -> ClassCentroids:
    """Arithmetic mean document vector per class, R and NR only."""
    r_vecs = [vec for item, vec in train if item.label == "R"]
    nr_vecs = [vec for item, vec in train if item.label == "NR"]
    if not r_vecs:
        raise MissingClassError("no R documents")
    if not nr_vecs:
        raise MissingClassError("no NR documents")
    return ClassCentroids(
        mean_r=np.mean(r_vecs, axis=0),
        mean_nr=np.mean(nr_vecs, axis=0),
        count_r=len(r_vecs),
        count_nr=len(nr_vecs),
    )


def save_embeddings(
    emb: EmbeddingMatrix, vocab: Vocabulary, path: str | Path
) -> None:
    """Plain-text vectors: header "V d", then one token and d reals per
    line.  %.17g keeps float64 round-trips exact."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(vocab)} {emb.dimension}\n")
        for i, tok in enumerate(vocab.index_to_token):
            row = " ".join("%.17g" % x for x in emb.vectors[i])
            fh.write(f"{tok} {row}\n")


def load_embeddings(path: str | Path) -> tuple[EmbeddingMatrix, Vocabulary]:
    """Inverse of save_embeddings.  Token counts are not persisted; the
    returned vocabulary carries zero counts and min_count 1."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise ValidationError("embedding file must start with 'V d'")
        v, d = int(header[0]), int(header[1])
        tokens: list[str] = []
        vectors = np.zeros((v, d))
        for i in range(v):
            parts = fh.readline().split()
            if len(parts) != d + 1:
                raise ValidationError(f"embedding row {i} malformed")
            tokens.append(parts[0])
            vectors[i] = [float(x) for x in parts[1:]]
    vocab = Vocabulary(
        token_to_index={tok: i for i, tok in enumerate(tokens)},
        index_to_token=tuple(tokens),
        counts={tok: 0 for tok in tokens},
        min_count=1,
    )
    return EmbeddingMatrix(vectors=vectors, dimension=d), vocab
