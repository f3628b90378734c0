"""Trainer hyperparameters."""

import hashlib
import json
from dataclasses import asdict, dataclass


@dataclass(frozen=True)
class TrainerConfig:
    hidden_dim: int = 128
    encoder_layers: int = 2
    learning_rate: float = 1e-4
    cosine_decay: bool = True  # anneal the lr to ~0 across the epoch budget
    batch_size: int = 32
    epochs: int = 15
    seq_len: int = 50
    n_max: int = 10
    seed: int = 0

    def __post_init__(self):
        for name in ("hidden_dim", "encoder_layers", "batch_size", "epochs", "seq_len", "n_max"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(asdict(self), sort_keys=True).encode()).hexdigest()
