"""Sparse evasion by pulling the most label-informative features toward a target-class profile."""

from __future__ import annotations

import numpy as np

from advnet.attacks.mi import ClassProfile, class_profile, mutual_information_scores, select_discriminant
from advnet.attacks.spec import AdversarialExample, AttackKind, AttackSpec, fit_to_budget
from advnet.dataset import Dataset


def _predict(model, x: np.ndarray) -> int:
    return int(model.predict(x))


def _success(pred: int, source_class: int, spec: AttackSpec) -> bool:
    return pred == spec.target_class if spec.targeted else pred != source_class


def build_profile(train: Dataset, source_class: int, spec: AttackSpec) -> ClassProfile:
    """Rank features by MI and take the target statistic over the top ``max_features``.

    Targeted: MI over the (source, target) rows, profile of the target class.
    Non-targeted without a target: MI over all classes, profile pooled over
    every class except the source.
    """
    if spec.target_class is not None:
        classes = (source_class, spec.target_class)
        pool = spec.target_class
    else:
        classes = None
        pool = [c for c in range(train.n_classes) if c != source_class]
    scores = mutual_information_scores(train, classes, spec.bins)
    indices = select_discriminant(scores, spec.max_features)
    return class_profile(train, pool, indices)


def craft_mi_l1(
    x: np.ndarray,
    source_class: int,
    profile: ClassProfile,
    spec: AttackSpec,
    model,
    source_index: int = -1,
) -> AdversarialExample:
    """Move discriminant features one at a time toward the profile, querying after each.

    For each profile feature, in ranking order, the coordinate moves by
    ``clip(profile - x, -epsilon, epsilon)``: the smallest L1 step toward the
    profile inside the box. Crafting stops at the first success or after
    ``max_features`` features.
    """
    if spec.kind is not AttackKind.MI_L1:
        raise ValueError(f"craft_mi_l1 needs an MI-L1 spec, got {spec.kind.value}")
    spec.ensure_executable(x.size)
    x = np.asarray(x, dtype=np.float64)
    adv = x.copy()
    before = _predict(model, x)
    pred = before
    for idx, target_value in zip(profile.feature_indices[:spec.max_features], profile.values):
        if _success(pred, source_class, spec):
            break
        step = min(max(target_value - x[idx], -spec.epsilon), spec.epsilon)
        adv[idx] = min(max(x[idx] + step, 0.0), 1.0)
        adv = fit_to_budget(x, adv, spec.epsilon)
        pred = _predict(model, adv)
    return AdversarialExample(
        source_index=source_index,
        original=x,
        delta=adv - x,
        perturbed=adv,
        source_class=int(source_class),
        predicted_before=before,
        predicted_after=pred,
        succeeded=_success(pred, source_class, spec),
        candidates=profile.feature_indices[:spec.max_features].copy(),
    )
