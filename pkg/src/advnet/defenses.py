"""Proactive defenses: adversarial training and input-side feature squeezing."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from advnet.attacks import AttackSpec, craft_examples
from advnet.dataset import Dataset
from advnet.models import TrainConfig, softmax, train_model

logger = logging.getLogger(__name__)


class DefenseKind(str, Enum):
    ADVERSARIAL_TRAINING = "adversarial-training"
    FEATURE_SQUEEZING = "feature-squeezing"


@dataclass(frozen=True)
class DefenseSpec:
    kind: DefenseKind = DefenseKind.FEATURE_SQUEEZING
    mix_ratio: float = 0.3
    bits: int = 5
    squeeze_training: bool = False

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", DefenseKind(self.kind))
        except ValueError:
            allowed = ", ".join(k.value for k in DefenseKind)
            raise ValueError(f"kind: {self.kind!r} is not one of {allowed}") from None
        if not 0.0 <= self.mix_ratio < 1.0:
            raise ValueError("mix_ratio must lie in [0, 1)")
        if self.bits < 1:
            raise ValueError("bits must be >= 1")

    def to_dict(self) -> dict:
        return {"kind": self.kind.value, "mix_ratio": self.mix_ratio, "bits": self.bits,
                "squeeze_training": self.squeeze_training}


def feature_squeeze(x: np.ndarray, bits: int) -> np.ndarray:
    """Round each coordinate to the nearest of 2**bits evenly spaced levels in [0, 1]."""
    if bits < 1:
        raise ValueError("bits must be >= 1")
    levels = 2 ** bits - 1
    return np.round(np.clip(np.asarray(x, dtype=np.float64), 0.0, 1.0) * levels) / levels


class SqueezedModel:
    """An unmodified model behind an inference-time squeezing transform.

    Deliberately exposes no input gradients.
    """

    def __init__(self, model, bits: int):
        self.model = model
        self.bits = bits
        self.kind = model.kind
        self.n_features = model.n_features
        self.n_classes = model.n_classes

    def decision(self, X):
        return self.model.decision(feature_squeeze(X, self.bits))

    def predict(self, X):
        return np.argmax(self.decision(X), axis=-1)

    def predict_proba(self, X):
        if hasattr(self.model, "predict_proba"):
            return self.model.predict_proba(feature_squeeze(X, self.bits))
        return softmax(self.decision(X))


def squeeze_dataset(dataset: Dataset, bits: int) -> Dataset:
    return replace(dataset, matrix=feature_squeeze(dataset.matrix, bits))


def _source_classes(spec: AttackSpec, n_classes: int) -> list[int]:
    if spec.targeted:
        return [c for c in range(n_classes) if c != spec.target_class]
    return list(range(n_classes))


def adversarial_training(
    train: Dataset,
    attack_spec: AttackSpec,
    model_kind: str,
    model_cfg: TrainConfig,
    defense_spec: DefenseSpec,
    base_model=None,
    workers: int = 1,
):
    """Retrain from scratch on the training set augmented with adversarial copies.

    Adversarial rows make up ``mix_ratio`` of the augmented set (capped by the
    number of attackable training rows) and keep their true source label.
    They are crafted against ``base_model``, which defaults to a model trained
    normally with the same config. Returns the retrained model.
    """
    attack_spec.ensure_executable(train.n_features)
    if defense_spec.mix_ratio == 0.0:
        return train_model(model_kind, train.matrix, train.labels, train.n_classes, model_cfg)

    if base_model is None:
        base_model = train_model(model_kind, train.matrix, train.labels, train.n_classes, model_cfg)
    pool = np.flatnonzero(np.isin(train.labels, _source_classes(attack_spec, train.n_classes)))
    wanted = int(np.floor(defense_spec.mix_ratio * len(train) / (1.0 - defense_spec.mix_ratio) + 0.5))
    n_adv = min(wanted, pool.size)
    if n_adv < wanted:
        logger.warning("only %d attackable training rows; mix ratio capped (%d wanted)", pool.size, wanted)
    rng = np.random.default_rng([model_cfg.seed, 2])
    chosen = np.sort(rng.choice(pool, size=n_adv, replace=False))

    adv_rows, adv_labels = [], []
    for cls in np.unique(train.labels[chosen]):
        idx = chosen[train.labels[chosen] == cls]
        for ex in craft_examples(base_model, train, attack_spec, int(cls), train=train,
                                 indices=idx, workers=workers):
            adv_rows.append(ex.perturbed)
            adv_labels.append(ex.source_class)
    X = np.vstack([train.matrix, np.array(adv_rows).reshape(-1, train.n_features)])
    y = np.concatenate([train.labels, np.array(adv_labels, dtype=np.int64)])
    logger.info("adversarial training: %d clean + %d adversarial rows", len(train), len(adv_rows))
    return train_model(model_kind, X, y, train.n_classes, model_cfg)
