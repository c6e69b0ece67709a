"""Gradient-based baselines: FGSM, BIM and JSMA. They need a model with input gradients."""

from __future__ import annotations

import math

import numpy as np

from advnet.attacks.spec import AdversarialExample, AttackSpec, UnsupportedAttack, fit_to_budget


def _require_gradients(model) -> None:
    if not hasattr(model, "input_gradient") or not hasattr(model, "probability_jacobian"):
        raise UnsupportedAttack(f"{type(model).__name__} exposes no input gradients")


def _result(model, x, adv, true_class, spec, before, source_index, candidates, target=None) -> AdversarialExample:
    pred = int(model.predict(adv))
    if target is None:
        target = spec.target_class
    ok = pred == target if spec.targeted else pred != true_class
    return AdversarialExample(
        source_index=source_index,
        original=x,
        delta=adv - x,
        perturbed=adv,
        source_class=int(true_class),
        predicted_before=before,
        predicted_after=pred,
        succeeded=ok,
        candidates=candidates,
    )


def _sign_step(model, adv: np.ndarray, true_class: int, spec: AttackSpec, size: float) -> np.ndarray:
    # targeted: descend the loss toward the target; otherwise ascend the true-class loss
    if spec.targeted:
        return adv - size * np.sign(model.input_gradient(adv, spec.target_class))
    return adv + size * np.sign(model.input_gradient(adv, true_class))


def fgsm(model, x: np.ndarray, true_class: int, spec: AttackSpec, source_index: int = -1) -> AdversarialExample:
    _require_gradients(model)
    spec.ensure_executable()
    x = np.asarray(x, dtype=np.float64)
    before = int(model.predict(x))
    adv = fit_to_budget(x, _sign_step(model, x, true_class, spec, spec.epsilon), spec.epsilon)
    return _result(model, x, adv, true_class, spec, before, source_index, np.arange(x.size))


def bim(model, x: np.ndarray, true_class: int, spec: AttackSpec, source_index: int = -1) -> AdversarialExample:
    """Iterated sign steps of size ``spec.step``, projected onto the epsilon box and [0, 1]."""
    _require_gradients(model)
    spec.ensure_executable()
    x = np.asarray(x, dtype=np.float64)
    before = int(model.predict(x))
    lo = np.maximum(x - spec.epsilon, 0.0)
    hi = np.minimum(x + spec.epsilon, 1.0)
    adv = x.copy()
    for _ in range(spec.iterations):
        adv = fit_to_budget(x, np.clip(_sign_step(model, adv, true_class, spec, spec.step), lo, hi), spec.epsilon)
    return _result(model, x, adv, true_class, spec, before, source_index, np.arange(x.size))


def saliency(jacobian: np.ndarray, target: int) -> np.ndarray:
    """Increase-direction saliency from a (C, d) probability Jacobian."""
    d_target = jacobian[target]
    d_other = jacobian.sum(axis=0) - d_target
    return np.where((d_target < 0) | (d_other > 0), 0.0, d_target * np.abs(d_other))


def jsma(model, x: np.ndarray, target_class: int, spec: AttackSpec, source_index: int = -1,
         true_class: int | None = None) -> AdversarialExample:
    """Raise the most salient feature by ``theta`` per iteration until the target is predicted.

    Features already at the top of their range (1.0, or ``x + epsilon``) are
    not eligible. Once ``max_features`` distinct features have been touched
    only those stay eligible. Stops at success or when no eligible feature
    has positive saliency.
    """
    _require_gradients(model)
    spec.ensure_executable(np.asarray(x).size)
    if not spec.targeted:
        raise UnsupportedAttack("JSMA runs in targeted mode only")
    x = np.asarray(x, dtype=np.float64)
    if true_class is None:
        true_class = int(model.predict(x))
    before = int(model.predict(x))
    ceiling = fit_to_budget(x, np.minimum(x + spec.epsilon, 1.0), spec.epsilon)
    theta = spec.jsma_theta
    adv = x.copy()
    touched: list[int] = []
    pred = before
    max_steps = spec.max_features * max(1, math.ceil(spec.epsilon / theta)) + 1 if theta > 0 else 0
    for _ in range(max_steps):
        if pred == target_class or spec.max_features == 0:
            break
        s = saliency(model.probability_jacobian(adv), target_class)
        s[adv >= ceiling] = 0.0
        if len(touched) >= spec.max_features:
            s[np.setdiff1d(np.arange(x.size), touched)] = 0.0
        if s.max() <= 0.0:
            break
        i = int(np.argmax(s))
        adv[i] = min(adv[i] + theta, ceiling[i])
        if i not in touched:
            touched.append(i)
        pred = int(model.predict(adv))
    return _result(model, x, adv, true_class, spec, before, source_index,
                   np.array(sorted(touched), dtype=np.int64), target=target_class)
