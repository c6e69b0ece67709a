from __future__ import annotations

from dataclasses import dataclass


class TrainingDiverged(RuntimeError):
    def __init__(self, message: str, epoch: int):
        super().__init__(message)
        self.epoch = epoch


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for both victim models.

    ``gamma=None`` means 1/d at training time.
    """

    epochs: int = 30
    batch_size: int = 64
    learning_rate: float = 0.01
    seed: int = 0
    hidden: tuple[int, ...] = (100, 100, 100, 100)
    C: float = 1.0
    gamma: float | None = None
    tol: float = 1e-3
    max_iter: int = 10_000_000
    cache_mb: int = 256

    def __post_init__(self):
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        for name in ("batch_size", "learning_rate", "C", "tol", "max_iter", "cache_mb"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")
        if any(h <= 0 for h in self.hidden):
            raise ValueError("hidden layer sizes must be positive")

    def to_dict(self) -> dict:
        return {
            "epochs": self.epochs, "batch_size": self.batch_size,
            "learning_rate": self.learning_rate, "seed": self.seed,
            "hidden": list(self.hidden), "C": self.C, "gamma": self.gamma,
            "tol": self.tol, "max_iter": self.max_iter, "cache_mb": self.cache_mb,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainConfig":
        data = dict(data)
        if "hidden" in data:
            data["hidden"] = tuple(data["hidden"])
        return cls(**data)
