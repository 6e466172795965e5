"""Nearest-neighbor quality harness for condensed sets.

Brute-force k-NN over squared Euclidean distances. For uint8 data every
intermediate quantity is an exact integer below 2**53, so float64 matrix
products are exact and predictions are bit-reproducible. Distance ties go
to the lower training row, vote ties to the lowest label.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .datasets import CondensedSet, Dataset, dataset_hash
from .errors import EmptyTrain, StaleCondensedSet
from .selection import reduction_percent

_TEST_CHUNK = 256


@dataclass(frozen=True)
class EvalReport:
    """Accuracy of one condensed set against one test set."""

    accuracy: float
    reduction_percent: float
    n_train: int
    n_test: int
    per_class_correct: tuple[int, ...]
    wall_time: float
    method: str
    alpha: float
    k: int

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "k": self.k,
            "accuracy": self.accuracy,
            "reduction_percent": self.reduction_percent,
            "n_train": self.n_train,
            "n_test": self.n_test,
            "per_class_correct": list(self.per_class_correct),
            "wall_time": self.wall_time,
        }

    def tsv_row(self) -> str:
        return f"{self.method}\t{self.alpha:.6g}\t{self.reduction_percent:.4f}\t{self.accuracy:.6f}"


def knn_classify(
    train_features: np.ndarray,
    train_labels: np.ndarray,
    test_features: np.ndarray,
    k: int = 1,
) -> np.ndarray:
    """Majority label among the k nearest training rows, per test row."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    train = np.ascontiguousarray(train_features, dtype=np.float64)
    train_labels = np.asarray(train_labels, dtype=np.int64)
    if train.shape[0] == 0:
        raise EmptyTrain("k-NN needs at least one training row")
    n_labels = int(train_labels.max()) + 1
    train_norms = np.einsum("ij,ij->i", train, train)
    test = np.asarray(test_features)
    preds = np.empty(test.shape[0], dtype=np.int64)
    for lo in range(0, test.shape[0], _TEST_CHUNK):
        block = test[lo : lo + _TEST_CHUNK].astype(np.float64)
        block_norms = np.einsum("ij,ij->i", block, block)
        d2 = block_norms[:, None] - 2.0 * (block @ train.T) + train_norms
        if k == 1:
            preds[lo : lo + block.shape[0]] = train_labels[np.argmin(d2, axis=1)]
            continue
        kk = min(k, train.shape[0])
        for r in range(block.shape[0]):
            row = d2[r]
            kth = np.partition(row, kk - 1)[kk - 1]
            cand = np.flatnonzero(row <= kth)
            # Order ties by (distance, train index), then take the first k.
            nearest = cand[np.lexsort((cand, row[cand]))[:kk]]
            votes = np.bincount(train_labels[nearest], minlength=n_labels)
            preds[lo + r] = int(votes.argmax())
    return preds


def evaluate(
    condensed: CondensedSet, source: Dataset, test: Dataset, k: int = 1
) -> EvalReport:
    """Train k-NN on the condensed data and score it on the test set."""
    if condensed.source_hash != dataset_hash(source):
        raise StaleCondensedSet(
            "condensed set was built from a different dataset than the one supplied"
        )
    train_features, train_labels = condensed.materialize()
    started = time.perf_counter()
    preds = knn_classify(train_features, train_labels, test.features, k)
    wall = time.perf_counter() - started
    n_classes = max(source.n_classes, test.n_classes)
    correct_mask = preds == test.labels
    per_class = np.bincount(test.labels[correct_mask], minlength=n_classes)
    return EvalReport(
        accuracy=float(correct_mask.sum() / test.n),
        reduction_percent=reduction_percent(source.n, condensed.n),
        n_train=int(train_features.shape[0]),
        n_test=test.n,
        per_class_correct=tuple(int(c) for c in per_class),
        wall_time=wall,
        method=condensed.config.method,
        alpha=condensed.config.alpha,
        k=k,
    )
