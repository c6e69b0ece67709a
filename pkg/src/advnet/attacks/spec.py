"""Attack descriptions (threat-model taxonomy included) and the crafted-example record."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from enum import Enum

import numpy as np


class AttackKind(str, Enum):
    MI_L1 = "mi-l1"
    FGSM = "fgsm"
    BIM = "bim"
    JSMA = "jsma"


class Knowledge(str, Enum):
    WHITE_BOX = "white-box"
    BLACK_BOX_QUERY = "black-box-query"
    BLACK_BOX_ZERO_QUERY = "black-box-zero-query"


class Phase(str, Enum):
    EVASION = "evasion"
    POISONING = "poisoning"


class Specificity(str, Enum):
    TARGETED = "targeted"
    NON_TARGETED = "non-targeted"


SPARSE_KINDS = (AttackKind.MI_L1, AttackKind.JSMA)


class UnsupportedAttack(RuntimeError):
    """The attack cannot run in this setting (taxonomy branch or model family)."""


@dataclass(frozen=True)
class AttackSpec:
    """What to craft and under which budget.

    ``epsilon`` bounds every coordinate of the perturbation (normalized units).
    ``max_features`` bounds the support for the sparse attacks (MI-L1, JSMA);
    FGSM and BIM are dense and ignore it. ``alpha`` defaults to
    ``epsilon / iterations`` and ``theta`` to ``epsilon``.
    """

    kind: AttackKind = AttackKind.MI_L1
    epsilon: float = 1e-2
    max_features: int = 2
    target_class: int | None = None
    iterations: int = 10
    alpha: float | None = None
    theta: float | None = None
    bins: int = 10
    knowledge: Knowledge = Knowledge.WHITE_BOX
    phase: Phase = Phase.EVASION
    specificity: Specificity = Specificity.TARGETED

    def __post_init__(self):
        for name, enum in (("kind", AttackKind), ("knowledge", Knowledge),
                           ("phase", Phase), ("specificity", Specificity)):
            value = getattr(self, name)
            try:
                object.__setattr__(self, name, enum(value))
            except ValueError:
                allowed = ", ".join(e.value for e in enum)
                raise ValueError(f"{name}: {value!r} is not one of {allowed}") from None
        if self.epsilon < 0:
            raise ValueError("epsilon must be non-negative")
        if self.max_features < 0:
            raise ValueError("max_features must be non-negative")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if self.bins < 1:
            raise ValueError("bins must be >= 1")
        if self.specificity is Specificity.TARGETED and self.target_class is None:
            raise ValueError("target_class is required for a targeted attack")
        if self.alpha is not None and not 0 < self.alpha <= self.epsilon:
            raise ValueError("alpha must satisfy 0 < alpha <= epsilon")
        if self.theta is not None and self.theta <= 0:
            raise ValueError("theta must be positive")

    @property
    def targeted(self) -> bool:
        return self.specificity is Specificity.TARGETED

    @property
    def step(self) -> float:
        return self.alpha if self.alpha is not None else self.epsilon / self.iterations

    @property
    def jsma_theta(self) -> float:
        return self.theta if self.theta is not None else self.epsilon

    def ensure_executable(self, n_features: int | None = None) -> None:
        if self.knowledge is not Knowledge.WHITE_BOX or self.phase is not Phase.EVASION:
            raise UnsupportedAttack(
                f"only white-box evasion attacks run; got {self.knowledge.value}/{self.phase.value}"
            )
        if n_features is not None and self.kind in SPARSE_KINDS and self.max_features > n_features:
            raise ValueError(f"max_features={self.max_features} exceeds d={n_features}")

    def to_dict(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, Enum):
                out[k] = v.value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "AttackSpec":
        return cls(**data)


@dataclass
class AdversarialExample:
    source_index: int
    original: np.ndarray
    delta: np.ndarray
    perturbed: np.ndarray
    source_class: int
    predicted_before: int
    predicted_after: int
    succeeded: bool
    candidates: np.ndarray = field(default_factory=lambda: np.empty(0, dtype=np.int64))

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.delta)

    @property
    def evaded(self) -> bool:
        return self.predicted_after != self.source_class


def budget_violations(ex: AdversarialExample, spec: AttackSpec) -> list[str]:
    """Every way ``ex`` breaks its budget, domain or sparsity contract (empty when valid)."""
    problems = []
    diff = ex.perturbed - ex.original
    if np.abs(diff).max(initial=0.0) > spec.epsilon:
        problems.append(f"max-norm {np.abs(diff).max():.3g} exceeds epsilon {spec.epsilon}")
    if ex.perturbed.min(initial=0.0) < 0.0 or ex.perturbed.max(initial=0.0) > 1.0:
        problems.append("perturbed vector leaves [0, 1]")
    support = np.flatnonzero(diff)
    if not np.array_equal(support, ex.support):
        problems.append("delta disagrees with perturbed - original")
    if spec.kind in SPARSE_KINDS:
        if support.size > spec.max_features:
            problems.append(f"{support.size} features perturbed, budget {spec.max_features}")
        if not np.isin(support, ex.candidates).all():
            problems.append("perturbation outside the selected feature set")
    outside = np.setdiff1d(np.arange(ex.original.size), support)
    if not np.array_equal(ex.perturbed[outside].view(np.uint64), ex.original[outside].view(np.uint64)):
        problems.append("coordinates outside the support changed")
    return problems


def fit_to_budget(original: np.ndarray, perturbed: np.ndarray, epsilon: float) -> np.ndarray:
    """Nudge ``perturbed`` by ulps so that ``|perturbed - original| <= epsilon`` holds in floating point.

    ``x + epsilon`` can round to a value whose difference from ``x`` exceeds
    ``epsilon`` by one ulp; the budget check is exact, so fix that here.
    """
    out = np.clip(perturbed, 0.0, 1.0)
    for _ in range(4):
        over = out - original > epsilon
        under = original - out > epsilon
        if not (over.any() or under.any()):
            break
        out[over] = np.nextafter(out[over], -np.inf)
        out[under] = np.nextafter(out[under], np.inf)
    return out
