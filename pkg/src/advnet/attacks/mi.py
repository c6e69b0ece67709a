"""Mutual-information feature ranking and per-class target profiles."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from advnet.dataset import Dataset


def discretize(X: np.ndarray, bins: int = 10) -> np.ndarray:
    """Equal-width bin index over [0, 1]; the value 1.0 falls in the top bin."""
    return np.clip(np.floor(np.asarray(X) * bins).astype(np.int64), 0, bins - 1)


def plugin_mi(joint_counts: np.ndarray) -> float:
    """Plug-in mutual information (bits) of a contingency table."""
    joint = np.asarray(joint_counts, dtype=np.float64)
    total = joint.sum()
    if total == 0:
        return 0.0
    p = joint / total
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    nz = p > 0
    return float((p[nz] * np.log2(p[nz] / (px @ py)[nz])).sum())


def mutual_information_scores(
    train: Dataset,
    classes: Iterable[int] | None = None,
    bins: int = 10,
) -> np.ndarray:
    """MI in bits between each binned feature and the label.

    ``classes`` restricts the estimate to rows of those classes, e.g. the
    (source, target) pair of a targeted attack.
    """
    return mi_scores_array(train.matrix, train.labels, classes, bins)


def mi_scores_array(X: np.ndarray, labels: np.ndarray, classes: Iterable[int] | None = None,
                    bins: int = 10) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    labels = np.asarray(labels)
    if classes is not None:
        keep = np.isin(labels, list(classes))
        X, labels = X[keep], labels[keep]
    if len(X) == 0:
        raise ValueError("no samples to estimate mutual information from")
    _, y = np.unique(labels, return_inverse=True)
    n_y = y.max() + 1
    binned = discretize(X, bins)
    scores = np.empty(X.shape[1])
    for j in range(X.shape[1]):
        joint = np.zeros((bins, n_y))
        np.add.at(joint, (binned[:, j], y), 1.0)
        scores[j] = plugin_mi(joint)
    return scores


def select_discriminant(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the ``k`` largest scores, descending; ties go to the lower index."""
    scores = np.asarray(scores)
    if k > scores.size:
        raise ValueError(f"k={k} exceeds the number of features ({scores.size})")
    order = np.lexsort((np.arange(scores.size), -scores))
    return order[:k].astype(np.int64)


@dataclass(frozen=True)
class ClassProfile:
    feature_indices: np.ndarray
    values: np.ndarray
    classes: tuple[int, ...]


def class_profile(train: Dataset, target_class: int | Iterable[int], indices: np.ndarray) -> ClassProfile:
    """Per-feature median of the target class (or pooled classes) over ``indices``."""
    classes = (target_class,) if np.isscalar(target_class) else tuple(target_class)
    classes = tuple(int(c) for c in classes)
    rows = train.matrix[np.isin(train.labels, classes)]
    if len(rows) == 0:
        raise ValueError(f"class(es) {classes} have no training samples")
    indices = np.asarray(indices, dtype=np.int64)
    values = np.median(rows[:, indices], axis=0) if indices.size else np.empty(0)
    return ClassProfile(indices, values, classes)
