"""Persistence for encoded datasets and the end-to-end preparation path."""

from __future__ import annotations

import csv
import hashlib
import json
from dataclasses import replace
from pathlib import Path
from typing import Sequence

import numpy as np

from advnet.dataset.encoding import (
    Dataset,
    SplitSpec,
    encode_onehot,
    fit_norm_params,
    fit_schema,
    normalize,
    split_indices,
)
from advnet.dataset.records import RawRecord, Schema


def write_csv(dataset: Dataset, path: str | Path) -> None:
    """Write one header line (feature names + "label") then one row per sample.

    Floats are written with ``repr`` so a read-back is bit-exact.
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow([*dataset.feature_names, "label"])
        for row, label in zip(dataset.matrix, dataset.labels):
            writer.writerow([repr(float(v)) for v in row] + [dataset.class_names[label]])


def read_csv(path: str | Path, class_names: Sequence[str] | None = None) -> Dataset:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[-1] != "label":
            raise ValueError(f"{path}: header must end with a 'label' column")
        rows, labels = [], []
        for row in reader:
            rows.append([float(v) for v in row[:-1]])
            labels.append(row[-1])
    if class_names is None:
        class_names = tuple(dict.fromkeys(labels))
    lookup = {c: i for i, c in enumerate(class_names)}
    matrix = np.array(rows, dtype=np.float64).reshape(len(rows), len(header) - 1)
    return Dataset(matrix, np.array([lookup[l] for l in labels], dtype=np.int64),
                   tuple(header[:-1]), tuple(class_names))


def norm_fingerprint(norm_params: np.ndarray | None) -> str:
    if norm_params is None:
        return ""
    return hashlib.sha256(np.ascontiguousarray(norm_params, dtype="<f8").tobytes()).hexdigest()[:16]


def save_dataset(dataset: Dataset, directory: str | Path, name: str) -> Path:
    """Write ``<name>.csv`` plus a ``<name>.json`` sidecar with classes and norm params."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    write_csv(dataset, directory / f"{name}.csv")
    meta = {
        "class_names": list(dataset.class_names),
        "norm_params": None if dataset.norm_params is None else dataset.norm_params.tolist(),
        "norm_fingerprint": norm_fingerprint(dataset.norm_params),
    }
    (directory / f"{name}.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    return directory / f"{name}.csv"


def load_dataset(directory: str | Path, name: str) -> Dataset:
    directory = Path(directory)
    csv_path, meta_path = directory / f"{name}.csv", directory / f"{name}.json"
    for p in (csv_path, meta_path):
        if not p.exists():
            raise FileNotFoundError(f"missing dataset artifact: {p}")
    meta = json.loads(meta_path.read_text())
    ds = read_csv(csv_path, meta["class_names"])
    if meta["norm_params"] is not None:
        ds = replace(ds, norm_params=np.array(meta["norm_params"], dtype=np.float64))
    return ds


def _cap(records: list[RawRecord], lookup: dict[str, int], limit: int, seed: int) -> list[RawRecord]:
    if not limit or len(records) <= limit:
        return records
    labels = np.array([lookup[r.label] for r in records], dtype=np.int64)
    keep, _ = split_indices(labels, SplitSpec(limit / len(records), seed))
    return [records[i] for i in keep]


def prepare(
    records: Sequence[RawRecord],
    schema: Schema,
    spec: SplitSpec,
    class_names: Sequence[str] | None = None,
    warn_width: int | None = None,
    test_records: Sequence[RawRecord] | None = None,
    max_train: int = 0,
    max_test: int = 0,
) -> tuple[Dataset, Dataset, Schema]:
    """Split raw records, fit encoding and scaling on the training side, apply to both.

    With ``test_records`` given (e.g. a separate KDDTest+ file), every record
    in ``records`` is a training candidate and ``spec.train_fraction`` is not
    used. ``max_train`` / ``max_test`` cap each side by a stratified draw.
    """
    if class_names is None:
        class_names = tuple(dict.fromkeys(r.label for r in records))
    lookup = {c: i for i, c in enumerate(class_names)}
    labels = np.array([lookup[r.label] for r in records], dtype=np.int64)
    if test_records is None:
        train_idx, test_idx = split_indices(labels, spec)
        test_recs = [records[i] for i in test_idx]
    else:
        train_idx = np.arange(len(records))
        test_recs = list(test_records)
    train_recs = _cap([records[i] for i in train_idx], lookup, max_train, spec.seed)
    test_recs = _cap(test_recs, lookup, max_test, spec.seed + 1)

    fitted = fit_schema(schema, train_recs)
    train = encode_onehot(train_recs, fitted, class_names, warn_width=warn_width)
    test = encode_onehot(test_recs, fitted, class_names)
    params = fit_norm_params(train)
    return normalize(train, params), normalize(test, params), fitted
