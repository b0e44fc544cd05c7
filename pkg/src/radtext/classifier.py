"""Recurrent classifier: gated forward/backward pass, dense output layer,
the centroid-threshold decision rule, gradient verification, split sweeps,
and the per-record squared-error curve.

Two modes.  two_class_threshold trains a scalar score with squared error
against targets R=1, NR=0, then places the decision boundary midway between
the training-set score means of the two classes.  three_class_softmax trains
cross-entropy over (R, NR, I).  Batch size is 1 and the optimizer is plain
SGD with global gradient-norm clipping, which keeps runs reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import _kernels
from .corpus import LABELS, LabeledRecord, SplitSpec, StopwordList, TokenSequence
from .corpus import clean_and_tokenize, split_corpus
from .embeddings import EmbeddingMatrix, Vocabulary
from .errors import (
    DegenerateSplitError,
    DivergenceError,
    MissingClassError,
    ModeError,
    NumericError,
    ValidationError,
)
from .seeding import derive_seed

MODES = ("two_class_threshold", "three_class_softmax")


@dataclass(frozen=True)
class LstmParams:
    """Gate parameters packed column-wise: w: (d, 4h), u: (h, 4h), b: (4h,)
    with gate order [input, forget, output, candidate]."""

    w: np.ndarray
    u: np.ndarray
    b: np.ndarray
    hidden: int

    def __post_init__(self):
        h = self.hidden
        if self.u.shape != (h, 4 * h) or self.w.shape[1] != 4 * h:
            raise ValidationError("parameter shapes inconsistent with hidden size")
        if self.b.shape != (4 * h,):
            raise ValidationError("bias must have length 4*hidden")
        for arr in (self.w, self.u, self.b):
            if not np.isfinite(arr).all():
                raise NumericError("LSTM parameters contain non-finite values")

    @property
    def input_dim(self) -> int:
        return self.w.shape[0]

    def gate(self, name: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Per-gate (input matrix d x h, recurrent matrix h x h, bias h)."""
        k = ("input", "forget", "output", "candidate").index(name)
        h = self.hidden
        sl = slice(k * h, (k + 1) * h)
        return self.w[:, sl], self.u[:, sl], self.b[sl]


@dataclass(frozen=True)
class DenseParams:
    weight: np.ndarray
    bias: np.ndarray

    def __post_init__(self):
        c = self.weight.shape[1]
        if c not in (1, 3):
            raise ValidationError("dense output width must be 1 or 3")
        if self.bias.shape != (c,):
            raise ValidationError("dense bias shape mismatch")
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias).all()):
            raise NumericError("dense parameters contain non-finite values")


@dataclass(frozen=True)
class ModelConfig:
    hidden: int = 32
    max_len: int = 200
    epochs: int = 20
    learning_rate: float = 0.5
    clip: float = 5.0
    seed: int = 0
    mode: str = "two_class_threshold"

    def __post_init__(self):
        if self.hidden < 1 or self.max_len < 1:
            raise ValidationError("hidden and max_len must be at least 1")
        if self.clip <= 0:
            raise ValidationError("clip must be positive")
        if self.learning_rate <= 0:
            raise ValidationError("learning_rate must be positive")
        if self.epochs < 0:
            raise ValidationError("epochs must be non-negative")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")


@dataclass(frozen=True)
class ThresholdModel:
    mean_r: float
    mean_nr: float
    threshold: float
    orientation: str  # "r_high" when mean_r >= mean_nr else "r_low"

    def __post_init__(self):
        if self.orientation not in ("r_high", "r_low"):
            raise ValidationError("orientation must be r_high or r_low")
        if self.mean_r != self.mean_nr:
            lo, hi = sorted((self.mean_r, self.mean_nr))
            if not (lo < self.threshold < hi):
                raise ValidationError("threshold must lie between the class means")

    def decide(self, score: float) -> str:
        """R iff the score falls strictly on the R side; ties go to NR."""
        if score == self.threshold:
            return "NR"
        if self.orientation == "r_high":
            return "R" if score > self.threshold else "NR"
        return "R" if score < self.threshold else "NR"


@dataclass(frozen=True)
class Prediction:
    record_id: str
    label: str
    score: float | None = None
    probs: np.ndarray | None = None

    def __post_init__(self):
        if self.probs is not None:
            if (self.probs < 0).any():
                raise ValidationError("probabilities must be non-negative")
            if abs(float(self.probs.sum()) - 1.0) > 1e-9:
                raise ValidationError("probabilities must sum to 1")


@dataclass(frozen=True)
class TrainedModel:
    lstm: LstmParams
    dense: DenseParams
    config: ModelConfig
    emb: EmbeddingMatrix
    vocab: Vocabulary
    threshold: ThresholdModel | None = None
    loss_history: tuple[float, ...] = ()


def softmax(logits: np.ndarray) -> np.ndarray:
    """Numerically stable; output sums to 1 for any finite input."""
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


def init_params(
    input_dim: int, config: ModelConfig
) -> tuple[LstmParams, DenseParams]:
    """Fan-scaled uniform weights; biases zero except the forget gate at +1
    so early cell state survives long sequences."""
    rng = np.random.default_rng(derive_seed(config.seed, "model-init"))
    h = config.hidden
    lim_w = np.sqrt(6.0 / (input_dim + h))
    lim_u = np.sqrt(6.0 / (h + h))
    w = rng.uniform(-lim_w, lim_w, size=(input_dim, 4 * h))
    u = rng.uniform(-lim_u, lim_u, size=(h, 4 * h))
    b = np.zeros(4 * h)
    b[h : 2 * h] = 1.0
    c = 1 if config.mode == "two_class_threshold" else 3
    lim_d = np.sqrt(6.0 / (h + c))
    dense = DenseParams(
        weight=rng.uniform(-lim_d, lim_d, size=(h, c)), bias=np.zeros(c)
    )
    return LstmParams(w=w, u=u, b=b, hidden=h), dense


def lstm_forward(
    inputs: np.ndarray, params: LstmParams, length: int | None = None
) -> tuple[np.ndarray, tuple]:
    """Final hidden state plus the cached per-step states for training.

    `length` masks trailing padding rows: only inputs[:length] enter the
    recurrence, so a padded and an unpadded call agree exactly.
    """
    inputs = np.ascontiguousarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != params.input_dim:
        raise ValidationError(
            f"inputs must be (T, {params.input_dim}); got {inputs.shape}"
        )
    if length is None:
        length = inputs.shape[0]
    if not (1 <= length <= inputs.shape[0]):
        raise ValidationError("length must be in [1, T]")
    x = inputs[:length]
    h0 = np.zeros(params.hidden)
    c0 = np.zeros(params.hidden)
    hs, cs, gates = _kernels.lstm_forward_pass(x, params.w, params.u, params.b, h0, c0)
    return hs[-1].copy(), (x, hs, cs, gates)


def _embed_tokens(
    seq: TokenSequence, emb: EmbeddingMatrix, vocab: Vocabulary, max_len: int
) -> np.ndarray:
    """Token vectors for the first max_len tokens, centered and normalized.

    Skip-gram matrices grow a large direction shared by the whole
    vocabulary; subtracting the vocabulary-mean row removes it, and length
    normalization then hands the recurrence pure direction (zero rows pass
    through unscaled).
    """
    if not seq.tokens:
        raise ValidationError(f"record {seq.source_record_id}: empty sequence")
    idx = [vocab.index(t) for t in seq.tokens[:max_len]]
    x = emb.vectors[np.asarray(idx)] - emb.vectors.mean(axis=0)
    norms = np.linalg.norm(x, axis=1, keepdims=True)
    return x / np.maximum(norms, 1e-12)


def _forward_logits(
    x: np.ndarray, lstm: LstmParams, dense: DenseParams
) -> tuple[np.ndarray, np.ndarray, tuple]:
    h_last, cache = lstm_forward(x, lstm)
    logits = h_last @ dense.weight + dense.bias
    return logits, h_last, cache


def _clip_global(grads: list[np.ndarray], clip: float) -> None:
    total = float(sum(float((g * g).sum()) for g in grads))
    norm = np.sqrt(total)
    if norm > clip:
        scale = clip / norm
        for g in grads:
            g *= scale


def _loss_and_output_grad(
    logits: np.ndarray, target: int | float, mode: str
) -> tuple[float, np.ndarray, np.ndarray]:
    """Returns (loss, dlogits, output) for one example."""
    if mode == "two_class_threshold":
        score = 1.0 / (1.0 + np.exp(-logits[0]))
        diff = score - float(target)
        loss = diff * diff
        dlogit = 2.0 * diff * score * (1.0 - score)
        return float(loss), np.array([dlogit]), np.array([score])
    probs = softmax(logits)
    t = int(target)
    loss = -np.log(max(probs[t], 1e-300))
    dlogits = probs.copy()
    dlogits[t] -= 1.0
    return float(loss), dlogits, probs


def _backward_example(
    x: np.ndarray,
    lstm: LstmParams,
    dense: DenseParams,
    dlogits: np.ndarray,
    h_last: np.ndarray,
    cache: tuple,
    backward_fn: Callable = _kernels.lstm_backward_pass,
) -> list[np.ndarray]:
    """Gradients in the fixed order [w, u, b, dense_w, dense_b]."""
    d_dense_w = np.outer(h_last, dlogits)
    d_dense_b = dlogits.copy()
    dh_last = dense.weight @ dlogits
    xs, hs, cs, gates = cache
    dw, du, db = backward_fn(xs, lstm.w, lstm.u, hs, cs, gates, dh_last)
    return [dw, du, db, d_dense_w, d_dense_b]


_TARGETS_2 = {"R": 1.0, "NR": 0.0}
_TARGETS_3 = {"R": 0, "NR": 1, "I": 2}


def _prepare_training_pairs(
    train: list[tuple[TokenSequence, str]], mode: str
) -> list[tuple[TokenSequence, float | int]]:
    present = {label for _, label in train}
    if mode == "two_class_threshold":
        if "R" not in present or "NR" not in present:
            raise MissingClassError("2-class training needs both R and NR")
        return [
            (seq, _TARGETS_2[label])
            for seq, label in train
            if label in _TARGETS_2 and seq.tokens
        ]
    missing = [lab for lab in LABELS if lab not in present]
    if missing:
        raise MissingClassError(f"3-class training needs {', '.join(missing)}")
    return [(seq, _TARGETS_3[label]) for seq, label in train if seq.tokens]


def train_classifier(
    train: list[tuple[TokenSequence, str]],
    emb: EmbeddingMatrix,
    vocab: Vocabulary,
    config: ModelConfig,
) -> TrainedModel:
    """BPTT with per-example SGD updates; deterministic given config.seed."""
    if not train:
        raise ValidationError("training set is empty")
    pairs = _prepare_training_pairs(train, config.mode)
    if not pairs:
        raise ValidationError("no usable training sequences")
    lstm, dense = init_params(emb.dimension, config)
    w, u, b = lstm.w.copy(), lstm.u.copy(), lstm.b.copy()
    dense_w, dense_b = dense.weight.copy(), dense.bias.copy()
    rng = np.random.default_rng(derive_seed(config.seed, "train-shuffle"))
    lr = config.learning_rate

    history: list[float] = []
    for epoch in range(config.epochs):
        order = rng.permutation(len(pairs))
        epoch_loss = 0.0
        for t in order:
            seq, target = pairs[t]
            x = _embed_tokens(seq, emb, vocab, config.max_len)
            cur_lstm = LstmParams(w=w, u=u, b=b, hidden=config.hidden)
            cur_dense = DenseParams(weight=dense_w, bias=dense_b)
            logits, h_last, cache = _forward_logits(x, cur_lstm, cur_dense)
            loss, dlogits, _ = _loss_and_output_grad(logits, target, config.mode)
            epoch_loss += loss
            grads = _backward_example(x, cur_lstm, cur_dense, dlogits, h_last, cache)
            _clip_global(grads, config.clip)
            w -= lr * grads[0]
            u -= lr * grads[1]
            b -= lr * grads[2]
            dense_w -= lr * grads[3]
            dense_b -= lr * grads[4]
        if not np.isfinite(epoch_loss):
            raise DivergenceError(f"loss became non-finite at epoch {epoch}")
        history.append(epoch_loss / len(pairs))

    lstm = LstmParams(w=w, u=u, b=b, hidden=config.hidden)
    dense = DenseParams(weight=dense_w, bias=dense_b)
    threshold = None
    if config.mode == "two_class_threshold":
        threshold = _fit_threshold(pairs, lstm, dense, emb, vocab, config)
    return TrainedModel(
        lstm=lstm, dense=dense, config=config, emb=emb, vocab=vocab,
        threshold=threshold, loss_history=tuple(history),
    )


def _fit_threshold(
    pairs: list[tuple[TokenSequence, float]],
    lstm: LstmParams,
    dense: DenseParams,
    emb: EmbeddingMatrix,
    vocab: Vocabulary,
    config: ModelConfig,
) -> ThresholdModel:
    r_scores, nr_scores = [], []
    for seq, target in pairs:
        x = _embed_tokens(seq, emb, vocab, config.max_len)
        logits, _, _ = _forward_logits(x, lstm, dense)
        score = 1.0 / (1.0 + np.exp(-logits[0]))
        (r_scores if target == 1.0 else nr_scores).append(score)
    mean_r = float(np.mean(r_scores))
    mean_nr = float(np.mean(nr_scores))
    return ThresholdModel(
        mean_r=mean_r,
        mean_nr=mean_nr,
        threshold=(mean_r + mean_nr) / 2.0,
        orientation="r_high" if mean_r >= mean_nr else "r_low",
    )


def predict(model: TrainedModel, sequence: TokenSequence) -> Prediction:
    """Label one cleaned sequence with the trained model."""
    x = _embed_tokens(sequence, model.emb, model.vocab, model.config.max_len)
    logits, _, _ = _forward_logits(x, model.lstm, model.dense)
    if model.config.mode == "two_class_threshold":
        score = float(1.0 / (1.0 + np.exp(-logits[0])))
        label = model.threshold.decide(score)
        return Prediction(
            record_id=sequence.source_record_id, label=label, score=score
        )
    probs = softmax(logits)
    label = LABELS[int(np.argmax(probs))]
    return Prediction(record_id=sequence.source_record_id, label=label, probs=probs)


def _flat_loss_fn(
    x: np.ndarray, target: int | float, config: ModelConfig
) -> tuple[Callable, list[np.ndarray]]:
    """Loss as a function of the flattened parameter vector, for finite
    differences.  Returns (fn, initial tensors)."""
    lstm, dense = init_params(x.shape[1], config)
    tensors = [lstm.w, lstm.u, lstm.b, dense.weight, dense.bias]
    shapes = [t.shape for t in tensors]
    sizes = [t.size for t in tensors]

    def unflatten(theta: np.ndarray) -> tuple[LstmParams, DenseParams]:
        parts = []
        k = 0
        for shape, size in zip(shapes, sizes):
            parts.append(theta[k : k + size].reshape(shape))
            k += size
        return (
            LstmParams(w=parts[0], u=parts[1], b=parts[2], hidden=config.hidden),
            DenseParams(weight=parts[3], bias=parts[4]),
        )

    def fn(theta: np.ndarray) -> float:
        cur_lstm, cur_dense = unflatten(theta)
        logits, _, _ = _forward_logits(x, cur_lstm, cur_dense)
        loss, _, _ = _loss_and_output_grad(logits, target, config.mode)
        return loss

    return fn, tensors


def gradient_check(
    config: ModelConfig,
    x: np.ndarray | None = None,
    target: int | float | None = None,
    seed: int = 7,
    epsilon: float = 1e-5,
    backward_fn: Callable = _kernels.lstm_backward_pass,
) -> float:
    """Max relative error between analytic BPTT and central differences.

    Checks every element of every parameter tensor; relative error uses
    |g_a - g_n| / max(|g_a|, |g_n|, 1e-8).  Keep the probe tiny (h <= 4,
    L <= 6, d <= 4): the numeric pass runs two forwards per element.
    """
    rng = np.random.default_rng(derive_seed(seed, "gradcheck"))
    if x is None:
        x = rng.normal(size=(5, 3))
    if target is None:
        target = 1.0 if config.mode == "two_class_threshold" else 0
    fn, tensors = _flat_loss_fn(x, target, config)

    lstm = LstmParams(w=tensors[0], u=tensors[1], b=tensors[2], hidden=config.hidden)
    dense = DenseParams(weight=tensors[3], bias=tensors[4])
    logits, h_last, cache = _forward_logits(x, lstm, dense)
    _, dlogits, _ = _loss_and_output_grad(logits, target, config.mode)
    analytic = _backward_example(
        x, lstm, dense, dlogits, h_last, cache, backward_fn=backward_fn
    )
    g_a = np.concatenate([g.ravel() for g in analytic])

    theta = np.concatenate([t.ravel() for t in tensors])
    g_n = np.zeros_like(theta)
    for i in range(theta.size):
        bumped = theta.copy()
        bumped[i] += epsilon
        up = fn(bumped)
        bumped[i] -= 2 * epsilon
        down = fn(bumped)
        g_n[i] = (up - down) / (2 * epsilon)

    denom = np.maximum(np.maximum(np.abs(g_a), np.abs(g_n)), 1e-8)
    return float(np.max(np.abs(g_a - g_n) / denom))


@dataclass(frozen=True)
class SweepPoint:
    ratio: float
    accuracy: float | None
    n_train: int = 0
    n_test: int = 0
    warning: str | None = None


def _pairs_for(
    items: list[LabeledRecord], stopwords: StopwordList
) -> list[tuple[TokenSequence, str]]:
    out = []
    for item in items:
        seq = clean_and_tokenize(item.record, stopwords)
        if seq.tokens:
            out.append((seq, item.label))
    return out


def _test_accuracy(
    model: TrainedModel, pairs: list[tuple[TokenSequence, str]]
) -> float:
    hits = 0
    for seq, label in pairs:
        hits += predict(model, seq).label == label
    return hits / len(pairs)


def sweep_splits(
    corpus: list[LabeledRecord],
    ratios: list[float],
    emb: EmbeddingMatrix,
    vocab: Vocabulary,
    config: ModelConfig,
    stopwords: StopwordList,
) -> list[SweepPoint]:
    """Train and evaluate once per split ratio with per-ratio derived seeds.

    In 2-class mode I-labeled records are excluded before splitting.  A
    ratio whose split degenerates is kept as a point with a warning instead
    of failing the sweep.
    """
    if config.mode == "two_class_threshold":
        corpus = [it for it in corpus if it.label in ("R", "NR")]
    points: list[SweepPoint] = []
    for ratio in ratios:
        if not (0.0 < ratio < 1.0):
            raise ValidationError(f"ratio {ratio} outside (0, 1)")
        split_seed = derive_seed(config.seed, f"sweep-split-{ratio:.6f}")
        try:
            train, test = split_corpus(
                corpus, SplitSpec(ratio, seed=split_seed, stratified=True)
            )
        except DegenerateSplitError as exc:
            points.append(
                SweepPoint(ratio=ratio, accuracy=None, warning=str(exc))
            )
            continue
        train_pairs = _pairs_for(train, stopwords)
        test_pairs = _pairs_for(test, stopwords)
        ratio_config = replace(
            config, seed=derive_seed(config.seed, f"sweep-train-{ratio:.6f}")
        )
        model = train_classifier(train_pairs, emb, vocab, ratio_config)
        points.append(
            SweepPoint(
                ratio=ratio,
                accuracy=_test_accuracy(model, test_pairs),
                n_train=len(train_pairs),
                n_test=len(test_pairs),
            )
        )
    return points


def mse_curve(
    model: TrainedModel, test: list[tuple[TokenSequence, str]]
) -> list[tuple[str, float, float]]:
    """(record_id, score, squared_error) per test record, sorted by score.

    Targets are 1 for R and 0 for NR; I-labeled records are rejected the
    same way a 3-class model is.
    """
    if model.config.mode != "two_class_threshold":
        raise ModeError("squared-error curve requires a 2-class model")
    rows = []
    for seq, label in test:
        if label not in _TARGETS_2:
            raise ModeError(f"label {label!r} has no 2-class target")
        pred = predict(model, seq)
        err = (pred.score - _TARGETS_2[label]) ** 2
        rows.append((seq.source_record_id, pred.score, err))
    rows.sort(key=lambda r: (r[1], r[0]))
    return rows


MODEL_FORMAT = "radtext-model"
MODEL_VERSION = 1


def save_model(model: TrainedModel, path: str | Path) -> None:
    """Text container: version header, mode, config scalars, threshold
    values, then each tensor with its shape.  %.17g keeps the round-trip
    bit-exact; embeddings are stored separately (save_embeddings)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{MODEL_FORMAT} {MODEL_VERSION}\n")
        fh.write(f"mode {model.config.mode}\n")
        fh.write(
            "config %d %d %d %.17g %.17g %d\n"
            % (
                model.config.hidden,
                model.config.max_len,
                model.config.epochs,
                model.config.learning_rate,
                model.config.clip,
                model.config.seed,
            )
        )
        if model.threshold is not None:
            t = model.threshold
            fh.write(
                "threshold %.17g %.17g %.17g %s\n"
                % (t.mean_r, t.mean_nr, t.threshold, t.orientation)
            )
        for name, arr in (
            ("w", model.lstm.w),
            ("u", model.lstm.u),
            ("b", model.lstm.b.reshape(1, -1)),
            ("dense_w", model.dense.weight),
            ("dense_b", model.dense.bias.reshape(1, -1)),
        ):
            fh.write(f"tensor {name} {arr.shape[0]} {arr.shape[1]}\n")
            for row in arr:
                fh.write(" ".join("%.17g" % v for v in row) + "\n")


def load_model(
    path: str | Path, emb: EmbeddingMatrix, vocab: Vocabulary
) -> TrainedModel:
    """Inverse of save_model; the embedding matrix and vocabulary are
    supplied by the caller because the container does not duplicate them."""
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 2 or header[0] != MODEL_FORMAT:
            raise ValidationError("not a model container")
        if int(header[1]) != MODEL_VERSION:
            raise ValidationError(f"unsupported model version {header[1]}")
        mode_line = fh.readline().split()
        if len(mode_line) != 2 or mode_line[0] != "mode":
            raise ValidationError("missing mode line")
        mode = mode_line[1]
        cfg_line = fh.readline().split()
        if len(cfg_line) != 7 or cfg_line[0] != "config":
            raise ValidationError("missing config line")
        config = ModelConfig(
            hidden=int(cfg_line[1]),
            max_len=int(cfg_line[2]),
            epochs=int(cfg_line[3]),
            learning_rate=float(cfg_line[4]),
            clip=float(cfg_line[5]),
            seed=int(cfg_line[6]),
            mode=mode,
        )
        threshold = None
        pos = fh.tell()
        line = fh.readline().split()
        if line and line[0] == "threshold":
            threshold = ThresholdModel(
                mean_r=float(line[1]),
                mean_nr=float(line[2]),
                threshold=float(line[3]),
                orientation=line[4],
            )
        else:
            fh.seek(pos)
        tensors: dict[str, np.ndarray] = {}
        while True:
            line = fh.readline().split()
            if not line:
                break
            if line[0] != "tensor" or len(line) != 4:
                raise ValidationError("malformed tensor header")
            name, rows, cols = line[1], int(line[2]), int(line[3])
            arr = np.zeros((rows, cols))
            for i in range(rows):
                vals = fh.readline().split()
                if len(vals) != cols:
                    raise ValidationError(f"tensor {name} row {i} malformed")
                arr[i] = [float(v) for v in vals]
            tensors[name] = arr
    expected = {"w", "u", "b", "dense_w", "dense_b"}
    if set(tensors) != expected:
        raise ValidationError(f"container must hold exactly {sorted(expected)}")
    lstm = LstmParams(
        w=tensors["w"], u=tensors["u"], b=tensors["b"][0], hidden=config.hidden
    )
    dense = DenseParams(weight=tensors["dense_w"], bias=tensors["dense_b"][0])
    return TrainedModel(
        lstm=lstm, dense=dense, config=config, emb=emb, vocab=vocab,
        threshold=threshold,
    )
