"""Victim classifiers: a dense ReLU/softmax network and a one-vs-rest RBF SVM."""

from advnet.models.config import TrainConfig, TrainingDiverged
from advnet.models.io import load_model, model_from_dict, model_to_dict, save_model
from advnet.models.mlp import MlpModel, init_mlp, mlp_input_gradient, mlp_predict_proba, softmax, train_mlp
from advnet.models.svm import SvmModel, rbf_kernel, svm_decision, train_svm_rbf


def train_model(kind: str, X, y, n_classes: int, cfg: TrainConfig):
    if kind == "mlp":
        return train_mlp(X, y, n_classes, cfg)
    if kind == "svm":
        return train_svm_rbf(X, y, n_classes, cfg)
    raise ValueError(f"unknown model kind {kind!r}")


def predict_proba(model, X):
    """Class distributions; SVM decision values go through a softmax."""
    if isinstance(model, MlpModel):
        return model.predict_proba(X)
    return softmax(model.decision(X))


__all__ = [
    "TrainConfig", "TrainingDiverged", "load_model", "model_from_dict", "model_to_dict",
    "save_model", "MlpModel", "init_mlp", "mlp_input_gradient", "mlp_predict_proba",
    "softmax", "train_mlp", "SvmModel", "rbf_kernel", "svm_decision", "train_svm_rbf",
    "train_model", "predict_proba",
]
