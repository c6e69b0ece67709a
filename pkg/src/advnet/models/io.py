"""JSON checkpoints: architecture, parameters, training config and a norm-params fingerprint."""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from advnet.models.config import TrainConfig
from advnet.models.mlp import MlpModel
from advnet.models.svm import BinaryMachine, SvmModel

FORMAT_VERSION = 1


def model_to_dict(model, config: TrainConfig | None = None, norm_fingerprint: str = "") -> dict:
    if isinstance(model, MlpModel):
        body = {
            "dims": model.dims,
            "weights": [w.tolist() for w in model.weights],
            "biases": [b.tolist() for b in model.biases],
            "loss_history": list(model.loss_history),
        }
    elif isinstance(model, SvmModel):
        body = {
            "gamma": model.gamma,
            "C": model.C,
            "n_classes": model.n_classes,
            "n_features": model.n_features,
            "machines": [
                {
                    "support_vectors": m.support_vectors.tolist(),
                    "dual_coef": m.dual_coef.tolist(),
                    "bias": m.bias,
                    "support_index": m.support_index.tolist(),
                    "kkt_gap": m.kkt_gap,
                    "iterations": m.iterations,
                }
                for m in model.machines
            ],
        }
    else:
        raise TypeError(f"unsupported model type {type(model).__name__}")
    return {
        "format": FORMAT_VERSION,
        "kind": model.kind,
        "config": config.to_dict() if config is not None else None,
        "norm_fingerprint": norm_fingerprint,
        "model": body,
    }


def model_from_dict(data: dict):
    body = data["model"]
    if data["kind"] == "mlp":
        weights = [np.array(w, dtype=np.float64) for w in body["weights"]]
        biases = [np.array(b, dtype=np.float64) for b in body["biases"]]
        dims = body["dims"]
        if len(weights) != len(dims) - 1 or len(biases) != len(weights):
            raise ValueError("checkpoint layer count disagrees with its dims")
        for k, (w, b) in enumerate(zip(weights, biases)):
            if w.shape != (dims[k], dims[k + 1]) or b.shape != (dims[k + 1],):
                raise ValueError(f"checkpoint layer {k} has shape {w.shape}, expected {(dims[k], dims[k + 1])}")
        return MlpModel(weights, biases, list(body.get("loss_history", [])))
    if data["kind"] == "svm":
        d = body["n_features"]
        machines = []
        for m in body["machines"]:
            sv = np.array(m["support_vectors"], dtype=np.float64).reshape(-1, d)
            coef = np.array(m["dual_coef"], dtype=np.float64)
            if sv.shape[0] != coef.shape[0]:
                raise ValueError("support vector count disagrees with dual coefficients")
            machines.append(BinaryMachine(sv, coef, float(m["bias"]),
                                          np.array(m["support_index"], dtype=np.int64),
                                          float(m["kkt_gap"]), int(m["iterations"])))
        expected = 1 if body["n_classes"] == 2 else body["n_classes"]
        if len(machines) != expected:
            raise ValueError(f"expected {expected} machines, found {len(machines)}")
        return SvmModel(machines, float(body["gamma"]), float(body["C"]), int(body["n_classes"]), d)
    raise ValueError(f"unknown model kind {data['kind']!r}")


def save_model(path: str | Path, model, config: TrainConfig | None = None, norm_fingerprint: str = "") -> None:
    Path(path).write_text(json.dumps(model_to_dict(model, config, norm_fingerprint), sort_keys=True) + "\n")


def load_model(path: str | Path, expected_features: int | None = None, norm_fingerprint: str | None = None):
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"missing model checkpoint: {path}")
    data = json.loads(path.read_text())
    model = model_from_dict(data)
    if expected_features is not None and model.n_features != expected_features:
        raise ValueError(f"checkpoint expects {model.n_features} features, dataset has {expected_features}")
    if norm_fingerprint is not None and data.get("norm_fingerprint") and data["norm_fingerprint"] != norm_fingerprint:
        raise ValueError("checkpoint was trained under different normalization parameters")
    return model
