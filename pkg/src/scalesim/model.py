"""Linear max-margin classifier trained by mini-batch subgradient descent.

The protocol averages raw parameter vectors, so the local learner must be a
fixed-dimension parametric model; this linear hinge-loss classifier is the
averageable stand-in for a kernel SVC. Malignant is the positive class
throughout.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from . import kernels
from .data import Label, LabeledExample
from .errors import NumericalDivergence


@dataclass
class ModelWeights:
    w: np.ndarray
    b: float

    def copy(self) -> "ModelWeights":
        return ModelWeights(self.w.copy(), self.b)

    @classmethod
    def zeros(cls, dim: int) -> "ModelWeights":
        return cls(np.zeros(dim, dtype=np.float64), 0.0)


@dataclass(frozen=True)
class TrainConfig:
    epochs: int = 5
    learning_rate: float = 0.01
    l2_lambda: float = 0.001
    batch_size: int = 16
    seed: int | tuple[int, ...] = 0

    def __post_init__(self) -> None:
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be > 0")
        if self.l2_lambda < 0:
            raise ValueError("l2_lambda must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")


def to_xy(examples: Sequence[LabeledExample]) -> tuple[np.ndarray, np.ndarray]:
    """Stack examples into (X, y) arrays with y in {-1.0, +1.0} (malignant = +1)."""
    X = np.ascontiguousarray(np.stack([ex.features for ex in examples]), dtype=np.float64)
    y = np.array([float(ex.label.value) for ex in examples], dtype=np.float64)
    return X, y


def objective(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> float:
    """l2 * ||w||^2 + mean hinge(1 - y * (X @ w + b))."""
    margins = y * (X @ w + b)
    return float(l2 * (w @ w) + np.maximum(0.0, 1.0 - margins).mean())


def subgradient(w: np.ndarray, b: float, X: np.ndarray, y: np.ndarray, l2: float) -> tuple[np.ndarray, float]:
    """Analytic subgradient of `objective` at (w, b); at margin == 1 the
    hinge term's subgradient is taken as active."""
    margins = y * (X @ w + b)
    active = margins < 1.0
    m = len(y)
    grad_w = 2.0 * l2 * w
    grad_b = 0.0
    if np.any(active):
        grad_w = grad_w - (y[active] @ X[active]) / m
        grad_b = -float(y[active].sum()) / m
    return grad_w, grad_b


def train_local_xy(start: ModelWeights, X: np.ndarray, y: np.ndarray, cfg: TrainConfig) -> ModelWeights:
    """Array-level training entry used on the hot path."""
    n = X.shape[0]
    if n == 0:
        raise ValueError("empty training data")
    if cfg.epochs == 0:
        return start.copy()
    rng = np.random.default_rng(cfg.seed)
    perms = np.empty((cfg.epochs, n), dtype=np.int64)
    for e in range(cfg.epochs):
        perms[e] = rng.permutation(n)
    w, b = kernels.sgd_epochs(
        np.ascontiguousarray(X, dtype=np.float64),
        np.ascontiguousarray(y, dtype=np.float64),
        np.ascontiguousarray(start.w, dtype=np.float64),
        float(start.b),
        perms,
        float(cfg.learning_rate),
        float(cfg.l2_lambda),
        int(cfg.batch_size),
    )
    if not (np.all(np.isfinite(w)) and np.isfinite(b)):
        raise NumericalDivergence("training produced non-finite weights")
    return ModelWeights(np.asarray(w, dtype=np.float64), float(b))


def train_local(start: ModelWeights, data: Sequence[LabeledExample], cfg: TrainConfig) -> ModelWeights:
    """Run cfg.epochs passes of mini-batch subgradient descent from `start`.

    Deterministic for a given cfg.seed; zero epochs returns the start weights
    unchanged.
    """
    X, y = to_xy(data)
    return train_local_xy(start, X, y, cfg)


def predict(m: ModelWeights, x: np.ndarray) -> Label:
    """sign(w.x + b): malignant on a non-negative score (ties go malignant)."""
    return Label.MALIGNANT if float(x @ m.w + m.b) >= 0.0 else Label.BENIGN


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: float
    recall: float
    f1: float


def evaluate_xy(m: ModelWeights, X: np.ndarray, y: np.ndarray) -> Metrics:
    if len(y) == 0:
        raise ValueError("empty evaluation data")
    preds = np.where(X @ m.w + m.b >= 0.0, 1.0, -1.0)
    tp = int(np.sum((preds == 1.0) & (y == 1.0)))
    fp = int(np.sum((preds == 1.0) & (y == -1.0)))
    fn = int(np.sum((preds == -1.0) & (y == 1.0)))
    tn = int(np.sum((preds == -1.0) & (y == -1.0)))
    accuracy = (tp + tn) / len(y)
    precision = tp / (tp + fp) if tp + fp > 0 else 0.0
    recall = tp / (tp + fn) if tp + fn > 0 else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return Metrics(accuracy, precision, recall, f1)


def evaluate(m: ModelWeights, data: Sequence[LabeledExample]) -> Metrics:
    """Confusion-matrix metrics with malignant as the positive class.

    Precision and recall fall back to 0 on an empty denominator.
    """
    X, y = to_xy(data)
    return evaluate_xy(m, X, y)
