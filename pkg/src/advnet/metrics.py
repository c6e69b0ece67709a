"""Standard classification metrics and the robustness metrics.

The robustness metrics compare a model before and after attack (or defense):

* inference stability: mean base-2 Jensen-Shannon divergence between paired
  output distributions, in [0, 1] bits;
* classification accuracy variance: signed change in mean accuracy plus the
  sample variance of each phase across runs;
* misclassification ratio: share of adversarial examples predicted outside
  their source class.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from advnet.attacks import AdversarialExample


@dataclass
class ClassificationReport:
    confusion: np.ndarray  # rows: true class, columns: predicted class
    precision: np.ndarray
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray
    accuracy: float
    undefined: list[str] = field(default_factory=list)  # metrics whose denominator was zero

    def to_dict(self, class_names: Sequence[str] | None = None) -> dict:
        names = list(class_names) if class_names is not None else [str(i) for i in range(len(self.support))]
        return {
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "per_class": {
                name: {"precision": float(self.precision[i]), "recall": float(self.recall[i]),
                       "f1": float(self.f1[i]), "support": int(self.support[i])}
                for i, name in enumerate(names)
            },
            "undefined": list(self.undefined),
        }


def classification_report(predictions, labels, n_classes: int | None = None) -> ClassificationReport:
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if predictions.shape != labels.shape:
        raise ValueError(f"length mismatch: {predictions.size} predictions vs {labels.size} labels")
    if n_classes is None:
        n_classes = int(max(predictions.max(initial=-1), labels.max(initial=-1)) + 1)
    if labels.size and labels.max() >= n_classes:
        raise ValueError("label index out of range")
    confusion = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(confusion, (labels, predictions), 1)
    tp = np.diag(confusion).astype(np.float64)
    predicted = confusion.sum(axis=0).astype(np.float64)
    actual = confusion.sum(axis=1).astype(np.float64)
    undefined = []

    def ratio(num, den, name):
        out = np.zeros(n_classes)
        ok = den > 0
        out[ok] = num[ok] / den[ok]
        undefined.extend(f"{name}[{i}]" for i in np.flatnonzero(~ok))
        return out

    precision = ratio(tp, predicted, "precision")
    recall = ratio(tp, actual, "recall")
    f1 = ratio(2 * precision * recall, precision + recall, "f1")
    accuracy = float(tp.sum() / labels.size) if labels.size else 0.0
    return ClassificationReport(confusion, precision, recall, f1, actual.astype(np.int64), accuracy, undefined)


def js_divergence(p: np.ndarray, q: np.ndarray) -> np.ndarray:
    """Base-2 Jensen-Shannon divergence of paired rows."""
    p = np.atleast_2d(np.asarray(p, dtype=np.float64))
    q = np.atleast_2d(np.asarray(q, dtype=np.float64))
    m = 0.5 * (p + q)

    def kl(a, b):
        with np.errstate(divide="ignore", invalid="ignore"):
            terms = np.where(a > 0, a * np.log2(a / b), 0.0)
        return terms.sum(axis=1)

    return np.clip(0.5 * kl(p, m) + 0.5 * kl(q, m), 0.0, 1.0)


def inference_stability(outputs_before, outputs_after) -> float:
    before = np.asarray(outputs_before, dtype=np.float64)
    after = np.asarray(outputs_after, dtype=np.float64)
    if before.shape != after.shape:
        raise ValueError(f"unpaired outputs: {before.shape} vs {after.shape}")
    if before.size == 0:
        return 0.0
    return float(js_divergence(before, after).mean())


def inference_stability_by_class(outputs_before, outputs_after, labels, n_classes: int) -> list[float | None]:
    """Per-class mean divergence; None for classes with no rows."""
    div = js_divergence(outputs_before, outputs_after)
    labels = np.asarray(labels)
    return [float(div[labels == c].mean()) if (labels == c).any() else None for c in range(n_classes)]


@dataclass(frozen=True)
class AccuracyVariance:
    difference: float  # mean(after) - mean(before)
    variance_before: float
    variance_after: float

    def to_dict(self) -> dict:
        return {"difference": self.difference, "variance_before": self.variance_before,
                "variance_after": self.variance_after}


def _sample_variance(values: np.ndarray) -> float:
    return float(values.var(ddof=1)) if values.size > 1 else 0.0


def accuracy_variance(per_run_accuracy_before, per_run_accuracy_after) -> AccuracyVariance:
    before = np.asarray(per_run_accuracy_before, dtype=np.float64)
    after = np.asarray(per_run_accuracy_after, dtype=np.float64)
    if before.size == 0 or after.size == 0:
        raise ValueError("accuracy lists must be nonempty")
    return AccuracyVariance(float(after.mean() - before.mean()), _sample_variance(before), _sample_variance(after))


def misclassification_ratio(adversarial_results: Sequence[AdversarialExample]) -> float:
    if len(adversarial_results) == 0:
        raise ValueError("no adversarial examples to score")
    return sum(ex.predicted_after != ex.source_class for ex in adversarial_results) / len(adversarial_results)


@dataclass
class EvaluationReport:
    class_names: tuple[str, ...]
    before: ClassificationReport
    after: ClassificationReport | None = None
    inference_stability: float | None = None
    inference_stability_by_class: list | None = None
    accuracy_variance: AccuracyVariance | None = None
    misclassification_ratio: float | None = None
    attack_summary: dict | None = None
    defense: dict | None = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {
            "class_names": list(self.class_names),
            "before": self.before.to_dict(self.class_names),
            "after": self.after.to_dict(self.class_names) if self.after is not None else None,
            "robustness": {
                "inference_stability_bits": self.inference_stability,
                "inference_stability_by_class": (
                    dict(zip(self.class_names, self.inference_stability_by_class))
                    if self.inference_stability_by_class is not None else None
                ),
                "accuracy_variance": self.accuracy_variance.to_dict() if self.accuracy_variance else None,
                "misclassification_ratio": self.misclassification_ratio,
            },
            "attack_summary": self.attack_summary,
            "defense": self.defense,
            "metadata": self.metadata,
        }
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def chart_rows(report: dict) -> list[list]:
    """Flat (phase, class, metric, value) rows from a serialized report."""
    rows = []
    for phase in ("before", "after"):
        section = report.get(phase)
        if section is None:
            continue
        rows.append([phase, "ALL", "accuracy", section["accuracy"]])
        for name, stats in section["per_class"].items():
            for metric in ("precision", "recall", "f1"):
                rows.append([phase, name, metric, stats[metric]])
            # per-class accuracy is the class recall
            rows.append([phase, name, "accuracy", stats["recall"]])
    return rows


def chart_csv(report: dict) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["phase", "class", "metric", "value"])
    for phase, name, metric, value in chart_rows(report):
        w.writerow([phase, name, metric, repr(float(value))])
    return buf.getvalue()


def confusion_csv(report: dict, phase: str) -> str:
    section = report[phase]
    names = report["class_names"]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["true\\predicted", *names])
    for name, row in zip(names, section["confusion"]):
        w.writerow([name, *row])
    return buf.getvalue()
