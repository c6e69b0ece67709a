"""RBF-kernel SVM trained with sequential minimal optimization.

The binary solver follows the working-set selection of Fan, Chen and Lin
(2005), the one used by LIBSVM: pick the maximal violating index ``i`` by
first-order information, then ``j`` by the second-order gain, and stop when
the KKT gap ``m(alpha) - M(alpha)`` drops below the tolerance. Multi-class
problems are one-vs-rest; a two-class problem is a single machine whose
value ``f`` is reported as the pair ``(-f, f)``.
"""

from __future__ import annotations

import logging
from collections import OrderedDict
from dataclasses import dataclass

import numpy as np

from advnet.models.config import TrainConfig

logger = logging.getLogger(__name__)

TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    A = np.atleast_2d(A)
    B = np.atleast_2d(B)
    sq = (A * A).sum(1)[:, None] + (B * B).sum(1)[None, :] - 2.0 * (A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


class KernelRows:
    """Kernel matrix rows on demand, shared by every machine trained on ``X``.

    Small problems get the full matrix up front; larger ones use an LRU cache
    bounded by ``cache_mb``.
    """

    def __init__(self, X: np.ndarray, gamma: float, cache_mb: int = 256):
        self.X = X
        self.gamma = gamma
        self.sq = (X * X).sum(1)
        n = len(X)
        budget = cache_mb * 2**20 // 8
        self.full = rbf_kernel(X, X, gamma) if n * n <= budget else None
        self.capacity = max(2, budget // max(n, 1))
        self.cache: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(self, i: int) -> np.ndarray:
        if self.full is not None:
            return self.full[i]
        r = self.cache.get(i)
        if r is not None:
            self.cache.move_to_end(i)
            return r
        sq = self.sq + self.sq[i] - 2.0 * (self.X @ self.X[i])
        r = np.exp(-self.gamma * np.maximum(sq, 0.0))
        self.cache[i] = r
        if len(self.cache) > self.capacity:
            self.cache.popitem(last=False)
        return r


@dataclass
class BinaryMachine:
    support_vectors: np.ndarray  # (s, d)
    dual_coef: np.ndarray  # (s,) alpha_i * y_i
    bias: float
    support_index: np.ndarray  # rows of the training matrix
    kkt_gap: float
    iterations: int

    @property
    def alpha(self) -> np.ndarray:
        return np.abs(self.dual_coef)

    def decision(self, X: np.ndarray, gamma: float) -> np.ndarray:
        return rbf_kernel(X, self.support_vectors, gamma) @ self.dual_coef + self.bias


@dataclass
class SvmModel:
    machines: list[BinaryMachine]
    gamma: float
    C: float
    n_classes: int
    n_features: int

    kind = "svm"

    def decision(self, X: np.ndarray) -> np.ndarray:
        """Per-class decision values, shape (n, C) (or (C,) for one vector)."""
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.n_features:
            raise ValueError(f"expected {self.n_features} features, got {X.shape[-1]}")
        single = X.ndim == 1
        X2 = np.atleast_2d(X)
        if self.n_classes == 2:
            f = self.machines[0].decision(X2, self.gamma)
            out = np.stack([-f, f], axis=1)
        else:
            out = np.stack([m.decision(X2, self.gamma) for m in self.machines], axis=1)
        return out[0] if single else out

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.decision(X), axis=-1)


def solve_binary(kernel: KernelRows, y: np.ndarray, C: float, tol: float, max_iter: int) -> BinaryMachine:
    """SMO on the dual  min 1/2 a'Qa - e'a,  0 <= a <= C,  y'a = 0."""
    n = len(y)
    y = y.astype(np.float64)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    diag = np.ones(n)  # K(x, x) = 1 for the RBF kernel
    it = 0
    gap = np.inf
    while it < max_iter:
        yg = -y * grad
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        if not up.any() or not low.any():
            gap = 0.0
            break
        i = int(np.flatnonzero(up)[np.argmax(yg[up])])
        m_up = yg[i]
        m_low = yg[low].min()
        gap = m_up - m_low
        if gap < tol:
            break
        Ki = kernel.row(i)
        cand = low & (yg < m_up)
        b = m_up - yg[cand]
        a = diag[i] + diag[cand] - 2.0 * Ki[cand]
        a = np.where(a > 0, a, TAU)
        j = int(np.flatnonzero(cand)[np.argmin(-(b * b) / a)])
        Kj = kernel.row(j)

        old_i, old_j = alpha[i], alpha[j]
        Qij = y[i] * y[j] * Ki[j]
        if y[i] != y[j]:
            quad = max(diag[i] + diag[j] + 2.0 * Qij, TAU)
            delta = (-grad[i] - grad[j]) / quad
            diff = alpha[i] - alpha[j]
            alpha[i] += delta
            alpha[j] += delta
            if diff > 0:
                if alpha[j] < 0:
                    alpha[j] = 0.0
                    alpha[i] = diff
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = -diff
            if diff > 0:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = C - diff
            elif alpha[j] > C:
                alpha[j] = C
                alpha[i] = C + diff
        else:
            quad = max(diag[i] + diag[j] - 2.0 * Qij, TAU)
            delta = (grad[i] - grad[j]) / quad
            total = alpha[i] + alpha[j]
            alpha[i] -= delta
            alpha[j] += delta
            if total > C:
                if alpha[i] > C:
                    alpha[i] = C
                    alpha[j] = total - C
            elif alpha[j] < 0:
                alpha[j] = 0.0
                alpha[i] = total
            if total > C:
                if alpha[j] > C:
                    alpha[j] = C
                    alpha[i] = total - C
            elif alpha[i] < 0:
                alpha[i] = 0.0
                alpha[j] = total
        d_i, d_j = alpha[i] - old_i, alpha[j] - old_j
        grad += y * (y[i] * d_i * Ki + y[j] * d_j * Kj)
        it += 1
    else:
        logger.warning("SMO hit max_iter=%d with KKT gap %.3g", max_iter, gap)

    yg = -y * grad
    free = (alpha > 0) & (alpha < C)
    if free.any():
        rho = -float(yg[free].mean())
    else:
        up = ((y > 0) & (alpha < C)) | ((y < 0) & (alpha > 0))
        low = ((y > 0) & (alpha > 0)) | ((y < 0) & (alpha < C))
        hi = yg[up].max() if up.any() else 0.0
        lo = yg[low].min() if low.any() else 0.0
        rho = -float(hi + lo) / 2.0
    sv = np.flatnonzero(alpha > 0)
    return BinaryMachine(
        support_vectors=kernel.X[sv].copy(),
        dual_coef=alpha[sv] * y[sv],
        bias=-rho,
        support_index=sv,
        kkt_gap=float(gap),
        iterations=it,
    )


def kkt_gap(machine_alpha: np.ndarray, y: np.ndarray, K: np.ndarray, C: float) -> float:
    """Recompute the maximal-violating-pair gap from scratch (for verification)."""
    y = y.astype(np.float64)
    grad = y * (K @ (machine_alpha * y)) - 1.0
    yg = -y * grad
    up = ((y > 0) & (machine_alpha < C)) | ((y < 0) & (machine_alpha > 0))
    low = ((y > 0) & (machine_alpha > 0)) | ((y < 0) & (machine_alpha < C))
    return float(yg[up].max() - yg[low].min())


def train_svm_rbf(X: np.ndarray, y: np.ndarray, n_classes: int, cfg: TrainConfig) -> SvmModel:
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    present = np.unique(y)
    if n_classes < 2 or len(present) < 2:
        raise ValueError("SVM training needs at least two classes with samples")
    if len(present) < n_classes:
        missing = sorted(set(range(n_classes)) - set(present.tolist()))
        raise ValueError(f"classes {missing} have no training samples")
    gamma = cfg.gamma if cfg.gamma is not None else 1.0 / X.shape[1]
    kernel = KernelRows(X, gamma, cfg.cache_mb)
    targets = [1] if n_classes == 2 else range(n_classes)
    machines = []
    for c in targets:
        yc = np.where(y == c, 1, -1)
        m = solve_binary(kernel, yc, cfg.C, cfg.tol, cfg.max_iter)
        logger.info("class %d: %d SVs, %d iterations, KKT gap %.2e", c, len(m.dual_coef), m.iterations, m.kkt_gap)
        machines.append(m)
    return SvmModel(machines, gamma, cfg.C, n_classes, X.shape[1])


def svm_decision(model: SvmModel, x: np.ndarray) -> np.ndarray:
    return model.decision(x)
