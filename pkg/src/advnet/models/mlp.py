"""Dense ReLU network with a softmax head, trained by plain mini-batch SGD.

Everything is float64 numpy so that input gradients can be checked against
finite differences at tight tolerances.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from advnet.models.config import TrainConfig, TrainingDiverged

logger = logging.getLogger(__name__)


@dataclass
class MlpModel:
    weights: list[np.ndarray]  # layer k maps (in_k,) -> (out_k,) via x @ W_k + b_k
    biases: list[np.ndarray]
    loss_history: list[float] = field(default_factory=list)

    kind = "mlp"

    @property
    def n_features(self) -> int:
        return self.weights[0].shape[0]

    @property
    def n_classes(self) -> int:
        return self.weights[-1].shape[1]

    @property
    def dims(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[-1]}")
        return X

    def _forward(self, X: np.ndarray) -> tuple[list[np.ndarray], np.ndarray]:
        """Return the per-layer inputs and the logits."""
        acts = [X]
        h = X
        for W, b in zip(self.weights[:-1], self.biases[:-1]):
            h = np.maximum(h @ W + b, 0.0)
            acts.append(h)
        return acts, h @ self.weights[-1] + self.biases[-1]

    def logits(self, X: np.ndarray) -> np.ndarray:
        return self._forward(self._check(X))[1]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return softmax(self.logits(X))

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.logits(X), axis=-1)

    def decision(self, X: np.ndarray) -> np.ndarray:
        return self.logits(X)

    def _backward(self, acts: list[np.ndarray], grad_logits: np.ndarray) -> np.ndarray:
        """Backpropagate ``grad_logits`` (rows, C) to the input, (rows, d)."""
        g = grad_logits @ self.weights[-1].T
        for k in range(len(self.weights) - 2, -1, -1):
            g = g * (acts[k + 1] > 0)
            g = g @ self.weights[k].T
        return g

    def input_gradient(self, x: np.ndarray, target: int) -> np.ndarray:
        """Gradient of the cross-entropy loss -log p_target with respect to ``x``.

        Accepts a single vector or a batch (one target per row when ``target``
        is an array).
        """
        x = self._check(x)
        single = x.ndim == 1
        X = np.atleast_2d(x)
        acts, z = self._forward(X)
        p = softmax(z)
        onehot = np.zeros_like(p)
        onehot[np.arange(len(X)), np.broadcast_to(np.asarray(target), (len(X),))] = 1.0
        g = self._backward(acts, p - onehot)
        return g[0] if single else g

    def probability_jacobian(self, x: np.ndarray) -> np.ndarray:
        """d p_c / d x_i for a single input, shape (C, d)."""
        x = self._check(x)
        acts, z = self._forward(x[None, :])
        p = softmax(z)[0]
        dp_dz = np.diag(p) - np.outer(p, p)
        acts_rep = [np.repeat(a, self.n_classes, axis=0) for a in acts]
        return self._backward(acts_rep, dp_dz)

    def copy(self) -> "MlpModel":
        return MlpModel([w.copy() for w in self.weights], [b.copy() for b in self.biases],
                        list(self.loss_history))


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def cross_entropy(proba: np.ndarray, labels: np.ndarray) -> np.ndarray:
    picked = proba[np.arange(len(labels)), labels]
    return -np.log(np.maximum(picked, np.finfo(np.float64).tiny))


def init_mlp(n_features: int, n_classes: int, hidden=(100, 100, 100, 100), seed: int = 0) -> MlpModel:
    """Seeded uniform init with limit sqrt(6 / fan_in); zero biases."""
    rng = np.random.default_rng(seed)
    dims = [n_features, *hidden, n_classes]
    weights, biases = [], []
    for fan_in, fan_out in zip(dims[:-1], dims[1:]):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return MlpModel(weights, biases)


def train_mlp(X: np.ndarray, y: np.ndarray, n_classes: int, cfg: TrainConfig) -> MlpModel:
    """Minimise mean cross-entropy with mini-batch SGD.

    Initialization and every epoch's shuffle draw from one generator seeded by
    ``cfg.seed``, so equal inputs give bitwise-equal parameters.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if len(X) == 0:
        raise ValueError("training set is empty")
    if n_classes < 2:
        raise ValueError("need at least two classes")
    model = init_mlp(X.shape[1], n_classes, cfg.hidden, cfg.seed)
    rng = np.random.default_rng([cfg.seed, 1])
    n = len(X)
    lr = cfg.learning_rate
    for epoch in range(cfg.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start:start + cfg.batch_size]
            xb, yb = X[idx], y[idx]
            acts, z = model._forward(xb)
            p = softmax(z)
            total += float(cross_entropy(p, yb).sum())
            delta = p
            delta[np.arange(len(yb)), yb] -= 1.0
            delta /= len(yb)
            for k in range(len(model.weights) - 1, -1, -1):
                gW = acts[k].T @ delta
                gb = delta.sum(axis=0)
                if k > 0:
                    delta = (delta @ model.weights[k].T) * (acts[k] > 0)
                model.weights[k] -= lr * gW
                model.biases[k] -= lr * gb
        loss = total / n
        if not np.isfinite(loss) or not all(np.isfinite(w).all() for w in model.weights):
            raise TrainingDiverged(f"non-finite training loss at epoch {epoch + 1}", epoch + 1)
        model.loss_history.append(loss)
        logger.debug("epoch %d loss %.6f", epoch + 1, loss)
    return model


def mlp_predict_proba(model: MlpModel, x: np.ndarray) -> np.ndarray:
    return model.predict_proba(x)


def mlp_input_gradient(model: MlpModel, x: np.ndarray, loss_target: int) -> np.ndarray:
    return model.input_gradient(x, loss_target)
