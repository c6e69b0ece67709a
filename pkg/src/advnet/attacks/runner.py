"""Batch crafting over a test set, cross-model re-scoring, and example-set persistence."""

from __future__ import annotations

import csv
import json
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Sequence

import numpy as np

from advnet.attacks.gradient import bim, fgsm, jsma
from advnet.attacks.mi_l1 import build_profile, craft_mi_l1
from advnet.attacks.spec import AdversarialExample, AttackKind, AttackSpec
from advnet.dataset import Dataset


def craft_examples(
    model,
    test: Dataset,
    spec: AttackSpec,
    source_class: int,
    train: Dataset | None = None,
    indices: Sequence[int] | None = None,
    workers: int = 1,
) -> list[AdversarialExample]:
    """Attack every test row of ``source_class`` (or the given ``indices``).

    MI-L1 needs ``train`` to rank features and build the target profile.
    Output is ordered by source index whatever the worker count.
    """
    spec.ensure_executable(test.n_features)
    if indices is None:
        indices = np.flatnonzero(test.labels == source_class)
    indices = [int(i) for i in indices]

    if spec.kind is AttackKind.MI_L1:
        if train is None:
            raise ValueError("MI-L1 crafting needs the training split")
        profile = build_profile(train, source_class, spec)

        def one(i):
            return craft_mi_l1(test.matrix[i], source_class, profile, spec, model, source_index=i)
    elif spec.kind is AttackKind.FGSM:
        def one(i):
            return fgsm(model, test.matrix[i], source_class, spec, source_index=i)
    elif spec.kind is AttackKind.BIM:
        def one(i):
            return bim(model, test.matrix[i], source_class, spec, source_index=i)
    else:
        def one(i):
            return jsma(model, test.matrix[i], spec.target_class, spec, source_index=i, true_class=source_class)

    if workers <= 1 or len(indices) < 2:
        results = [one(i) for i in indices]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, indices))
    return sorted(results, key=lambda ex: ex.source_index)


def rescore(examples: Sequence[AdversarialExample], model, spec: AttackSpec) -> list[AdversarialExample]:
    """Re-evaluate crafted examples against another model (transferability)."""
    if not examples:
        return []
    before = model.predict(np.stack([ex.original for ex in examples]))
    after = model.predict(np.stack([ex.perturbed for ex in examples]))
    out = []
    for ex, b, a in zip(examples, before, after):
        a = int(a)
        ok = a == spec.target_class if spec.targeted else a != ex.source_class
        out.append(AdversarialExample(ex.source_index, ex.original, ex.delta, ex.perturbed,
                                      ex.source_class, int(b), a, ok, ex.candidates))
    return out


def success_rate(examples: Sequence[AdversarialExample]) -> float:
    return float(np.mean([ex.succeeded for ex in examples])) if examples else 0.0


def write_examples(
    examples: Sequence[AdversarialExample],
    spec: AttackSpec,
    path: str | Path,
    feature_names: Sequence[str],
    extra: dict | None = None,
) -> None:
    """CSV of crafted examples plus a ``.json`` sidecar holding the attack spec."""
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["source_index", "source_class", "predicted_before", "predicted_after",
                    "succeeded", "delta_support", "delta_values", *feature_names])
        for ex in examples:
            support = ex.support
            w.writerow([
                ex.source_index, ex.source_class, ex.predicted_before, ex.predicted_after,
                int(ex.succeeded),
                ";".join(str(int(i)) for i in support),
                ";".join(repr(float(ex.delta[i])) for i in support),
                *(repr(float(v)) for v in ex.perturbed),
            ])
    sidecar = {"attack": spec.to_dict(), "count": len(examples),
               "succeeded": int(sum(ex.succeeded for ex in examples))}
    if extra:
        sidecar.update(extra)
    path.with_suffix(".json").write_text(json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def read_examples(path: str | Path, test: Dataset) -> tuple[list[AdversarialExample], AttackSpec, dict]:
    """Load an example CSV; originals come from the matching rows of ``test``."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing adversarial example artifact: {path}")
    meta = json.loads(path.with_suffix(".json").read_text())
    spec = AttackSpec.from_dict(meta["attack"])
    examples = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            i = int(row[0])
            original = test.matrix[i].copy()
            perturbed = np.array([float(v) for v in row[7:]], dtype=np.float64)
            support = np.array([int(s) for s in row[5].split(";") if s], dtype=np.int64)
            examples.append(AdversarialExample(
                source_index=i, original=original, delta=perturbed - original, perturbed=perturbed,
                source_class=int(row[1]), predicted_before=int(row[2]), predicted_after=int(row[3]),
                succeeded=bool(int(row[4])), candidates=support,
            ))
    return examples, spec, meta
