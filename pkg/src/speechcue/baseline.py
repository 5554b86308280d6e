"""Feature-only emotion classifier: a one-hidden-layer MLP on numerical or one-hot features."""

from __future__ import annotations

from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

from speechcue.describe import CategorizedFeatures
from speechcue.errors import DegenerateData, DimensionMismatch, SchemeMismatch
from speechcue.jsonl import MODEL, tag
from speechcue.metrics import weighted_f1_batch
from speechcue.thresholds import FEATURES, LEVEL_NAMES, CategorizedFeature

Encoding = Literal["numerical", "onehot"]


@dataclass(frozen=True)
class FeatureVector:
    values: np.ndarray
    encoding: Encoding
    imputed: tuple[str, ...] = ()


def encode_numerical(standardized: Mapping[str, float | None]) -> FeatureVector:
    """Standardized 5-vector; absent features are imputed to 0 (the standardized mean)."""
    vals = []
    imputed = []
    for feat in FEATURES:
        v = standardized.get(feat)
        if v is None:
            imputed.append(feat)
            v = 0.0
        vals.append(float(v))
    return FeatureVector(np.asarray(vals), "numerical", tuple(imputed))


def encode_onehot(
    cats: CategorizedFeatures | Mapping[str, CategorizedFeature | None], num_classes: int
) -> FeatureVector:
    """Concatenated per-feature indicator blocks.

    An absent feature takes the middle level (index ``(num_classes - 1) // 2``),
    mirroring the zero imputation of the numerical encoding.
    """
    if num_classes not in LEVEL_NAMES:
        raise SchemeMismatch(f"no {num_classes}-class scheme")
    names = LEVEL_NAMES[num_classes]
    out = np.zeros(len(FEATURES) * num_classes)
    imputed = []
    for i, feat in enumerate(FEATURES):
        cat = getattr(cats, feat) if isinstance(cats, CategorizedFeatures) else cats.get(feat)
        if cat is None:
            imputed.append(feat)
            idx = (num_classes - 1) // 2
        else:
            idx = cat.level.index
            if not 0 <= idx < num_classes or names[idx] != cat.level.name:
                raise SchemeMismatch(
                    f"{feat} level {cat.level.name!r} is not level {idx} of the {num_classes}-class scheme"
                )
        out[i * num_classes + idx] = 1.0
    return FeatureVector(out, "onehot", tuple(imputed))


def encode(features, encoding: Encoding, num_classes: int | None = None) -> FeatureVector:
    if encoding == "numerical":
        return encode_numerical(features)
    if encoding == "onehot":
        if num_classes is None:
            raise SchemeMismatch("one-hot encoding needs num_classes")
        return encode_onehot(features, num_classes)
    raise ValueError(f"unknown encoding {encoding!r}")


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 200
    batch_size: int = 32
    seed: int = 0
    l2: float = 1e-4
    hidden: int = 32

    def __post_init__(self) -> None:
        if min(self.learning_rate, self.epochs, self.batch_size, self.l2, self.hidden) <= 0:
            raise ValueError("training hyperparameters must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass
class ClassifierModel:
    labels: tuple[str, ...]
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    history: list[float] = field(default_factory=list, compare=False, repr=False)

    @property
    def layer_sizes(self) -> tuple[int, int, int]:
        return (self.W1.shape[0], self.W1.shape[1], self.W2.shape[1])

    def params(self) -> dict[str, np.ndarray]:
        return {"W1": self.W1, "b1": self.b1, "W2": self.W2, "b2": self.b2}

    @classmethod
    def zeros(cls, n_in: int, labels: Sequence[str], hidden: int = 32) -> ClassifierModel:
        k = len(labels)
        return cls(tuple(labels), np.zeros((n_in, hidden)), np.zeros(hidden), np.zeros((hidden, k)), np.zeros(k))

    def logits(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        return np.maximum(X @ self.W1 + self.b1, 0.0) @ self.W2 + self.b2

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.logits(X))

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.W1.shape[0]:
            raise DimensionMismatch(f"model expects {self.W1.shape[0]} inputs, got {X.shape[1]}")
        return X

    def loss_and_grads(
        self, X: np.ndarray, y: np.ndarray, l2: float
    ) -> tuple[float, dict[str, np.ndarray]]:
        """Mean softmax cross-entropy plus ``l2/2 * ||W||^2`` and its gradients."""
        X = self._check(X)
        n = X.shape[0]
        pre = X @ self.W1 + self.b1
        h = np.maximum(pre, 0.0)
        p = softmax(h @ self.W2 + self.b2)
        loss = -np.mean(np.log(p[np.arange(n), y] + 1e-300))
        loss += 0.5 * l2 * (np.sum(self.W1**2) + np.sum(self.W2**2))

        d_logits = p.copy()
        d_logits[np.arange(n), y] -= 1.0
        d_logits /= n
        d_h = d_logits @ self.W2.T
        d_pre = d_h * (pre > 0)
        grads = {
            "W1": X.T @ d_pre + l2 * self.W1,
            "b1": d_pre.sum(axis=0),
            "W2": h.T @ d_logits + l2 * self.W2,
            "b2": d_logits.sum(axis=0),
        }
        return float(loss), grads

    def to_dict(self) -> dict:
        return {
            "schema": tag(MODEL),
            "labels": list(self.labels),
            "layer_sizes": list(self.layer_sizes),
            **{name: arr.ravel(order="C").tolist() for name, arr in self.params().items()},
        }

    @classmethod
    def from_dict(cls, doc: dict) -> ClassifierModel:
        n_in, hidden, k = doc["layer_sizes"]
        return cls(
            tuple(doc["labels"]),
            np.asarray(doc["W1"], dtype=np.float64).reshape(n_in, hidden),
            np.asarray(doc["b1"], dtype=np.float64),
            np.asarray(doc["W2"], dtype=np.float64).reshape(hidden, k),
            np.asarray(doc["b2"], dtype=np.float64),
        )


def train(
    X: np.ndarray,
    y: Sequence[str],
    config: TrainConfig | None = None,
    labels: Sequence[str] | None = None,
) -> ClassifierModel:
    """Mini-batch gradient descent on cross-entropy with an L2 penalty; deterministic per seed."""
    cfg = config or TrainConfig()
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] != len(y):
        raise DimensionMismatch("X must be (n, d) with one label per row")
    labels = tuple(labels) if labels is not None else tuple(sorted(set(y)))
    index = {lab: i for i, lab in enumerate(labels)}
    if len(set(y)) < 2:
        raise DegenerateData("training data holds a single class")
    yi = np.asarray([index[lab] for lab in y])

    rng = np.random.default_rng(cfg.seed)
    n, d = X.shape
    k = len(labels)
    model = ClassifierModel(
        labels,
        rng.normal(0.0, np.sqrt(2.0 / d), (d, cfg.hidden)),
        np.zeros(cfg.hidden),
        rng.normal(0.0, np.sqrt(1.0 / cfg.hidden), (cfg.hidden, k)),
        np.zeros(k),
    )
    for _ in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            loss, grads = model.loss_and_grads(X[batch], yi[batch], cfg.l2)
            total += loss * batch.size
            for name, arr in model.params().items():
                arr -= cfg.learning_rate * grads[name]
        model.history.append(total / n)
    return model


def predict(model: ClassifierModel, X: np.ndarray) -> tuple[list[str], np.ndarray]:
    """Argmax labels (ties go to the lowest label index) and probability rows."""
    proba = model.predict_proba(X)
    return [model.labels[i] for i in np.argmax(proba, axis=1)], proba


def gradient_check(
    model: ClassifierModel, X: np.ndarray, y: np.ndarray, l2: float = 1e-4, step: float = 1e-5
) -> float:
    """Largest relative error between analytic and central-difference gradients.

    Error per parameter array is ``||a - n|| / (||a|| + ||n||)``.
    """
    _, analytic = model.loss_and_grads(X, y, l2)
    worst = 0.0
    for name, arr in model.params().items():
        numeric = np.zeros_like(arr)
        it = np.nditer(arr, flags=["multi_index"])
        for _ in it:
            i = it.multi_index
            orig = arr[i]
            arr[i] = orig + step
            up, _ = model.loss_and_grads(X, y, l2)
            arr[i] = orig - step
            down, _ = model.loss_and_grads(X, y, l2)
            arr[i] = orig
            numeric[i] = (up - down) / (2 * step)
        a = analytic[name]
        denom = np.linalg.norm(a) + np.linalg.norm(numeric)
        if denom > 0:
            worst = max(worst, float(np.linalg.norm(a - numeric) / denom))
    return worst


def expected_random_f1(
    label_distribution: Sequence[float] | Mapping[str, float],
    num_trials: int = 10_000,
    seed: int = 0,
    n_samples: int = 600,
) -> float:
    """Monte-Carlo weighted F1 of uniform-random guessing against a gold label distribution.

    Each trial scores ``n_samples`` uniform guesses against a fixed gold sample
    whose class counts follow ``label_distribution`` (largest-remainder rounding).
    """
    probs = np.asarray(
        list(label_distribution.values())
        if isinstance(label_distribution, Mapping)
        else label_distribution,
        dtype=np.float64,
    )
    if abs(probs.sum() - 1.0) > 1e-9 or np.any(probs < 0):
        raise ValueError("label_distribution must be a probability vector")
    k = probs.size
    raw = probs * n_samples
    counts = np.floor(raw).astype(int)
    for i in np.argsort(-(raw - counts), kind="stable")[: n_samples - counts.sum()]:
        counts[i] += 1
    gold = np.repeat(np.arange(k), counts)

    rng = np.random.default_rng(seed)
    scores = []
    chunk = max(1, 2_000_000 // max(n_samples, 1))
    for start in range(0, num_trials, chunk):
        m = min(chunk, num_trials - start)
        guesses = rng.integers(0, k, size=(m, gold.size))
        scores.append(weighted_f1_batch(gold, guesses, k))
    return float(np.concatenate(scores).mean())
