"""Bag-of-words features and the three comparison classifiers: softmax
regression, a linear SVM trained with a pegasos-style schedule, and a
random forest of axis-aligned gini trees.

All three trainers take a dense (n, F) feature matrix and string labels,
and are deterministic given their seed. Features come from fit_tfidf over
the same Vocabulary the embedding pipeline builds, so the comparison and
the recurrent model see the same token universe.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from .classifier import softmax
from .corpus import LABELS, TokenSequence
from .embeddings import OOV_INDEX, Vocabulary
from .errors import (
    MissingClassError,
    NotFittedError,
    NumericError,
    ValidationError,
)
from .seeding import derive_seed


def _classes_from(y: list[str]) -> tuple[str, ...]:
    present = set(y)
    bad = present - set(LABELS)
    if bad:
        raise ValidationError(f"unknown labels: {sorted(bad)}")
    return tuple(lab for lab in LABELS if lab in present)


@dataclass(frozen=True)
class TfidfVectorizer:
    """Term-frequency features scaled by ln(N/df) from the fit corpus.

    idf is None until fitted. Index 0 is the out-of-vocabulary sentinel
    and always carries weight zero; unseen tokens are skipped entirely.
    """

    vocabulary: Vocabulary
    idf: Optional[np.ndarray] = None
    sublinear_tf: bool = False

    def __post_init__(self):
        if self.idf is not None:
            if self.idf.shape != (len(self.vocabulary),):
                raise ValidationError("idf length must match vocabulary size")
            if not np.isfinite(self.idf).all():
                raise NumericError("idf contains non-finite values")

    def transform(self, seq: TokenSequence) -> np.ndarray:
        if self.idf is None:
            raise NotFittedError("transform called before fit_tfidf")
        out = np.zeros(len(self.vocabulary))
        counts = Counter()
        for token in seq.tokens:
            i = self.vocabulary.index(token)
            if i != OOV_INDEX:
                counts[i] += 1
        for i, c in counts.items():
            tf = 1.0 + np.log(c) if self.sublinear_tf else float(c)
            out[i] = tf * self.idf[i]
        return out


def fit_tfidf(
    train: list[TokenSequence], vocab: Vocabulary, sublinear_tf: bool = False
) -> TfidfVectorizer:
    """Document frequencies come from the training set alone; a token in
    every document gets idf 0 and a vocabulary token absent from the
    training set keeps weight 0."""
    if not train:
        raise ValidationError("cannot fit on an empty training set")
    n = len(train)
    df = np.zeros(len(vocab))
    for seq in train:
        seen = {vocab.index(t) for t in seq.tokens}
        seen.discard(OOV_INDEX)
        for i in seen:
            df[i] += 1
    idf = np.zeros(len(vocab))
    nonzero = df > 0
    idf[nonzero] = np.log(n / df[nonzero])
    return TfidfVectorizer(vocabulary=vocab, idf=idf, sublinear_tf=sublinear_tf)


def transform_matrix(vec: TfidfVectorizer, seqs: list[TokenSequence]) -> np.ndarray:
    return np.stack([vec.transform(s) for s in seqs])


@dataclass(frozen=True)
class MaxEntModel:
    weights: np.ndarray  # (F, c)
    bias: np.ndarray  # (c,)
    l2: float
    classes: tuple[str, ...]

    def __post_init__(self):
        if not (np.isfinite(self.weights).all() and np.isfinite(self.bias).all()):
            raise NumericError("model parameters contain non-finite values")
        if self.weights.shape[1] != len(self.classes):
            raise ValidationError("weight columns must match class count")
        if self.bias.shape != (len(self.classes),):
            raise ValidationError("bias length must match class count")


def _maxent_loss_grad(
    weights: np.ndarray, bias: np.ndarray, x: np.ndarray, t: int, l2: float
) -> tuple[float, np.ndarray, np.ndarray]:
    """Cross-entropy plus l2/2 * ||W||^2 for one example; bias unpenalized."""
    probs = softmax(weights.T @ x + bias)
    loss = -float(np.log(max(probs[t], 1e-300)))
    loss += 0.5 * l2 * float((weights * weights).sum())
    g = probs.copy()
    g[t] -= 1.0
    dw = np.outer(x, g) + l2 * weights
    return loss, dw, g


def train_maxent(
    x: np.ndarray,
    y: list[str],
    classes: tuple[str, ...] | None = None,
    epochs: int = 100,
    lr: float = 0.1,
    l2: float = 1e-4,
    seed: int = 0,
) -> MaxEntModel:
    """Softmax regression from zero weights by per-example SGD."""
    if x.ndim != 2 or x.shape[0] != len(y):
        raise ValidationError("x must be (n, F) with one row per label")
    if classes is None:
        classes = _classes_from(y)
    if len(classes) < 2:
        raise MissingClassError("softmax regression needs at least two classes")
    index = {lab: k for k, lab in enumerate(classes)}
    missing = [lab for lab in classes if lab not in set(y)]
    if missing:
        raise MissingClassError(f"no samples for {', '.join(missing)}")
    t_idx = np.array([index[lab] for lab in y])
    n, f = x.shape
    weights = np.zeros((f, len(classes)))
    bias = np.zeros(len(classes))
    rng = np.random.default_rng(derive_seed(seed, "maxent-shuffle"))
    for _ in range(epochs):
        for i in rng.permutation(n):
            _, dw, db = _maxent_loss_grad(weights, bias, x[i], int(t_idx[i]), l2)
            weights -= lr * dw
            bias -= lr * db
    return MaxEntModel(weights=weights, bias=bias, l2=l2, classes=classes)


def predict_maxent(model: MaxEntModel, x: np.ndarray) -> np.ndarray:
    """Class probabilities in model.classes order."""
    return softmax(model.weights.T @ x + model.bias)


def maxent_label(model: MaxEntModel, x: np.ndarray) -> str:
    probs = predict_maxent(model, x)
    return model.classes[int(np.argmax(probs))]


@dataclass(frozen=True)
class LinearSvmModel:
    """Binary R-vs-NR separator; margin = w . x + b with R on the
    positive side, margin 0 decided NR."""

    weight: np.ndarray
    bias: float
    lam: float
    objective_history: tuple[float, ...] = ()

    def __post_init__(self):
        if not (np.isfinite(self.weight).all() and np.isfinite(self.bias)):
            raise NumericError("model parameters contain non-finite values")


_SVM_SIGNS = {"R": 1.0, "NR": -1.0}


def train_svm(
    x: np.ndarray,
    y: list[str],
    lam: float = 1e-3,
    epochs: int = 100,
    seed: int = 0,
) -> LinearSvmModel:
    """Primal hinge-loss SGD with step 1/(lam * t); the bias takes the same
    step but is not regularized. objective_history holds the training
    objective (mean hinge + lam/2 ||w||^2) after each epoch.
    """
    if x.ndim != 2 or x.shape[0] != len(y):
        raise ValidationError("x must be (n, F) with one row per label")
    if lam <= 0:
        raise ValidationError("lam must be positive")
    bad = set(y) - set(_SVM_SIGNS)
    if bad:
        raise ValidationError(f"binary SVM accepts R/NR only, got {sorted(bad)}")
    if set(y) != set(_SVM_SIGNS):
        raise MissingClassError("both R and NR must be present")
    signs = np.array([_SVM_SIGNS[lab] for lab in y])
    n, f = x.shape
    w = np.zeros(f)
    b = 0.0
    rng = np.random.default_rng(derive_seed(seed, "svm-shuffle"))
    t = 0
    history = []
    for _ in range(epochs):
        for i in rng.permutation(n):
            t += 1
            eta = 1.0 / (lam * t)
            if signs[i] * (w @ x[i] + b) < 1.0:
                w = (1.0 - 1.0 / t) * w + eta * signs[i] * x[i]
                b += eta * signs[i]
            else:
                w = (1.0 - 1.0 / t) * w
        hinge = np.maximum(0.0, 1.0 - signs * (x @ w + b)).mean()
        history.append(float(hinge) + 0.5 * lam * float(w @ w))
    return LinearSvmModel(
        weight=w, bias=float(b), lam=lam, objective_history=tuple(history)
    )


def predict_svm(model: LinearSvmModel, x: np.ndarray) -> tuple[str, float]:
    margin = float(model.weight @ x + model.bias)
    return ("R" if margin > 0.0 else "NR"), margin


@dataclass(frozen=True)
class TreeLeaf:
    label: str


@dataclass(frozen=True)
class TreeNode:
    feature: int
    threshold: float
    left: Union["TreeNode", TreeLeaf]
    right: Union["TreeNode", TreeLeaf]


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 50
    max_depth: int = 10
    feature_fraction: float | None = None  # None means sqrt(F)/F at fit time
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("n_trees must be at least 1")
        if self.max_depth < 1:
            raise ValidationError("max_depth must be at least 1")
        if self.feature_fraction is not None and not (0.0 < self.feature_fraction <= 1.0):
            raise ValidationError("feature_fraction must be in (0, 1]")


@dataclass(frozen=True)
class RandomForestModel:
    trees: tuple
    config: ForestConfig
    classes: tuple[str, ...]

    def __post_init__(self):
        if len(self.trees) < 1:
            raise ValidationError("forest needs at least one tree")


def _gini(counts: np.ndarray) -> float:
    n = counts.sum()
    p = counts / n
    return float(1.0 - (p * p).sum())


def _majority(y_idx: np.ndarray, n_classes: int) -> int:
    counts = np.bincount(y_idx, minlength=n_classes)
    return int(np.argmax(counts))  # first max wins, so ties follow class order


def _best_split(
    xb: np.ndarray, y_idx: np.ndarray, features: np.ndarray, n_classes: int
) -> tuple[int, float] | None:
    """Lowest weighted gini over candidate thresholds (midpoints between
    consecutive distinct values), scanned with cumulative class counts."""
    n = xb.shape[0]
    parent = _gini(np.bincount(y_idx, minlength=n_classes))
    best = None
    best_score = parent - 1e-12
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y_idx] = 1.0
    for f in features:
        order = np.argsort(xb[:, f], kind="stable")
        sv = xb[order, f]
        cum = np.cumsum(onehot[order], axis=0)
        cuts = np.nonzero(sv[:-1] < sv[1:])[0]
        if cuts.size == 0:
            continue
        left = cum[cuts]
        total = cum[-1]
        right = total - left
        nl = left.sum(axis=1)
        nr = right.sum(axis=1)
        gl = 1.0 - ((left / nl[:, None]) ** 2).sum(axis=1)
        gr = 1.0 - ((right / nr[:, None]) ** 2).sum(axis=1)
        weighted = (nl * gl + nr * gr) / n
        k = int(np.argmin(weighted))
        if weighted[k] < best_score:
            best_score = float(weighted[k])
            cut = cuts[k]
            best = (int(f), float((sv[cut] + sv[cut + 1]) / 2.0))
    return best


def _grow(
    xb: np.ndarray,
    y_idx: np.ndarray,
    depth: int,
    rng: np.random.Generator,
    max_depth: int,
    k_features: int,
    n_classes: int,
    classes: tuple[str, ...],
) -> Union[TreeNode, TreeLeaf]:
    if (
        depth >= max_depth
        or xb.shape[0] < 2
        or np.all(y_idx == y_idx[0])
    ):
        return TreeLeaf(label=classes[_majority(y_idx, n_classes)])
    features = rng.choice(xb.shape[1], size=k_features, replace=False)
    split = _best_split(xb, y_idx, features, n_classes)
    if split is None:
        return TreeLeaf(label=classes[_majority(y_idx, n_classes)])
    f, thr = split
    mask = xb[:, f] <= thr
    left = _grow(xb[mask], y_idx[mask], depth + 1, rng, max_depth, k_features, n_classes, classes)
    right = _grow(xb[~mask], y_idx[~mask], depth + 1, rng, max_depth, k_features, n_classes, classes)
    return TreeNode(feature=f, threshold=thr, left=left, right=right)


def train_forest(
    x: np.ndarray, y: list[str], config: ForestConfig = ForestConfig()
) -> RandomForestModel:
    """Bootstrap-sampled gini trees with per-split feature subsampling.

    Each tree gets its own derived seed up front, so growing them in
    parallel would not change the result.
    """
    if x.ndim != 2 or x.shape[0] != len(y):
        raise ValidationError("x must be (n, F) with one row per label")
    n, f = x.shape
    if n < 2:
        raise ValidationError("forest training needs at least 2 samples")
    if f == 0:
        raise ValidationError("feature space is empty")
    classes = _classes_from(y)
    index = {lab: k for k, lab in enumerate(classes)}
    y_idx = np.array([index[lab] for lab in y])
    frac = config.feature_fraction
    k_features = max(1, int(round(f * frac))) if frac is not None else max(1, int(round(np.sqrt(f))))
    k_features = min(k_features, f)
    trees = []
    for i in range(config.n_trees):
        rng = np.random.default_rng(derive_seed(config.seed, f"forest-tree-{i}"))
        boot = rng.integers(0, n, size=n)
        trees.append(
            _grow(x[boot], y_idx[boot], 0, rng, config.max_depth, k_features, len(classes), classes)
        )
    return RandomForestModel(trees=tuple(trees), config=config, classes=classes)


def tree_votes(model: RandomForestModel, x: np.ndarray) -> tuple[str, ...]:
    """Per-tree predicted labels, in tree order."""
    votes = []
    for tree in model.trees:
        node = tree
        while isinstance(node, TreeNode):
            node = node.left if x[node.feature] <= node.threshold else node.right
        votes.append(node.label)
    return tuple(votes)


def predict_forest(model: RandomForestModel, x: np.ndarray) -> tuple[str, dict[str, int]]:
    """Majority vote over the trees; ties break in (R, NR, I) order."""
    votes = tree_votes(model, x)
    counts = {lab: 0 for lab in model.classes}
    for v in votes:
        counts[v] += 1
    best = model.classes[0]
    for lab in model.classes[1:]:
        if counts[lab] > counts[best]:
            best = lab
    return best, counts
