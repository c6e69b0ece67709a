"""Dataset container, one-hot encoding, min-max normalization and stratified splitting."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from advnet.dataset.records import RawRecord, Schema

logger = logging.getLogger(__name__)

UNSEEN = "<unseen>"
REFERENCE_IDS_WIDTH = 118


@dataclass(frozen=True)
class Dataset:
    matrix: np.ndarray  # (n, d) float64
    labels: np.ndarray  # (n,) int64 class indices
    feature_names: tuple[str, ...]
    class_names: tuple[str, ...]
    norm_params: np.ndarray | None = None  # (d, 2): per-feature (min, max)

    def __post_init__(self):
        if self.matrix.ndim != 2 or self.matrix.shape[1] != len(self.feature_names):
            raise ValueError(
                f"matrix width {self.matrix.shape} disagrees with {len(self.feature_names)} feature names"
            )
        if self.labels.shape != (self.matrix.shape[0],):
            raise ValueError("labels must be a vector with one entry per row")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= len(self.class_names)):
            raise ValueError("label index out of range for class_names")

    def __len__(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_features(self) -> int:
        return self.matrix.shape[1]

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def class_index(self, name: str) -> int:
        try:
            return self.class_names.index(name)
        except ValueError:
            raise KeyError(f"unknown class {name!r}; known: {self.class_names}") from None

    def subset(self, index: np.ndarray) -> "Dataset":
        return replace(self, matrix=self.matrix[index], labels=self.labels[index])


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.train_fraction <= 1.0:
            raise ValueError(f"train_fraction must lie in (0, 1], got {self.train_fraction}")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def fit_schema(schema: Schema, train: Sequence[RawRecord]) -> Schema:
    """Collect category vocabularies and numeric medians from the training records.

    Vocabulary order is first appearance in ``train``, so a fixed record order
    gives a fixed column layout.
    """
    attrs = []
    for pos, attr in enumerate(schema.attributes):
        column = [rec.features[pos] for rec in train]
        if attr.categorical:
            vocab = tuple(dict.fromkeys(v for v in column if v is not None and v != UNSEEN))
            attrs.append(replace(attr, vocabulary=vocab))
        else:
            present = np.array([v for v in column if v is not None], dtype=float)
            fill = float(np.median(present)) if present.size else 0.0
            attrs.append(replace(attr, fill=fill))
    return replace(schema, attributes=tuple(attrs))


def encoded_feature_names(schema: Schema) -> tuple[str, ...]:
    names = []
    for attr in schema.attributes:
        if attr.categorical:
            names.extend(f"{attr.name}={v}" for v in attr.vocabulary)
            names.append(f"{attr.name}={UNSEEN}")
        else:
            names.append(attr.name)
    return tuple(names)


def encode_onehot(
    records: Sequence[RawRecord],
    schema: Schema,
    class_names: Sequence[str] | None = None,
    warn_width: int | None = None,
) -> Dataset:
    """Expand categorical positions into indicator columns.

    Each categorical attribute gets one column per vocabulary value plus a
    trailing "unseen" column. Numeric missing values take the attribute's
    fitted median. An unfitted schema is fitted on ``records`` first.
    """
    if not schema.fitted:
        schema = fit_schema(schema, records)
    names = encoded_feature_names(schema)
    if class_names is None:
        class_names = schema.labels or tuple(dict.fromkeys(r.label for r in records))
    class_names = tuple(class_names)
    class_lookup = {c: i for i, c in enumerate(class_names)}

    n, d = len(records), len(names)
    matrix = np.zeros((n, d), dtype=np.float64)
    labels = np.empty(n, dtype=np.int64)
    col = 0
    for pos, attr in enumerate(schema.attributes):
        if attr.categorical:
            lookup = {v: j for j, v in enumerate(attr.vocabulary)}
            width = len(attr.vocabulary) + 1
            for row, rec in enumerate(records):
                matrix[row, col + lookup.get(rec.features[pos], width - 1)] = 1.0
            col += width
        else:
            for row, rec in enumerate(records):
                v = rec.features[pos]
                matrix[row, col] = attr.fill if v is None else v
            col += 1
    for row, rec in enumerate(records):
        if rec.label not in class_lookup:
            raise ValueError(f"record label {rec.label!r} not among classes {class_names}")
        labels[row] = class_lookup[rec.label]

    if warn_width is not None and d != warn_width:
        logger.warning("encoded width d=%d differs from the expected %d", d, warn_width)
    return Dataset(matrix, labels, names, class_names)


def decode_onehot(dataset: Dataset, schema: Schema) -> list[RawRecord]:
    """Invert ``encode_onehot`` (pre-normalization); unseen indicators decode to a sentinel token."""
    records = []
    for row, label in zip(dataset.matrix, dataset.labels):
        values, col = [], 0
        for attr in schema.attributes:
            if attr.categorical:
                width = len(attr.vocabulary) + 1
                j = int(np.argmax(row[col:col + width]))
                values.append(attr.vocabulary[j] if j < width - 1 else UNSEEN)
                col += width
            else:
                values.append(float(row[col]))
                col += 1
        records.append(RawRecord(tuple(values), dataset.class_names[label]))
    return records


def fit_norm_params(dataset: Dataset) -> np.ndarray:
    """Per-feature (min, max) over the rows of ``dataset``; call on the training split only."""
    if len(dataset) == 0:
        raise ValueError("cannot fit normalization on an empty dataset")
    return np.stack([dataset.matrix.min(axis=0), dataset.matrix.max(axis=0)], axis=1)


def normalize(dataset: Dataset, norm_params: np.ndarray) -> Dataset:
    """Min-max scale into [0, 1]; constant features map to 0 and out-of-range values are clipped."""
    lo, hi = norm_params[:, 0], norm_params[:, 1]
    span = hi - lo
    constant = span <= 0
    scaled = (dataset.matrix - lo) / np.where(constant, 1.0, span)
    scaled[:, constant] = 0.0
    np.clip(scaled, 0.0, 1.0, out=scaled)
    return replace(dataset, matrix=scaled, norm_params=np.array(norm_params, dtype=np.float64))


def _round_half_up(x: float) -> int:
    return int(np.floor(x + 0.5))


def split_indices(labels: np.ndarray, spec: SplitSpec) -> tuple[np.ndarray, np.ndarray]:
    """Stratified, seeded partition of row indices; both index arrays are sorted."""
    labels = np.asarray(labels)
    rng = np.random.default_rng(spec.seed)
    train, test = [], []
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if spec.train_fraction < 1.0 and members.size < 2:
            raise ValueError(f"class {cls} has {members.size} sample(s); need at least 2 to split")
        members = rng.permutation(members)
        cut = _round_half_up(spec.train_fraction * members.size)
        train.append(members[:cut])
        test.append(members[cut:])
    empty = np.empty(0, dtype=np.int64)
    return (np.sort(np.concatenate(train)) if train else empty,
            np.sort(np.concatenate(test)) if test else empty)


def split(dataset: Dataset, spec: SplitSpec) -> tuple[Dataset, Dataset]:
    train_idx, test_idx = split_indices(dataset.labels, spec)
    return dataset.subset(train_idx), dataset.subset(test_idx)

