"""Adam with bias correction, plus the shared training hyperparameter bundle."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from .core import Parameter


@dataclass
class OptimizerConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    max_epoch: int = 1000
    batch_size: int = 64
    patience: int = 15

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ConfigError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if not (0 < self.beta1 < 1 and 0 < self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie strictly between 0 and 1")
        if self.patience < 1:
            raise ConfigError(f"patience must be >= 1, got {self.patience}")
        if self.max_epoch < 1 or self.batch_size < 1:
            raise ConfigError("max_epoch and batch_size must be >= 1")


class Adam:
    """Standard Adam update; gradients are zeroed after each step."""

    def __init__(self, params: list[Parameter], config: OptimizerConfig):
        self.params = list(params)
        self.config = config

    def step(self):
        cfg = self.config
        for p in self.params:
            p.step_count += 1
            g = p.grad
            p.adam_m = cfg.beta1 * p.adam_m + (1 - cfg.beta1) * g
            p.adam_v = cfg.beta2 * p.adam_v + (1 - cfg.beta2) * (g * g)
            m_hat = p.adam_m / (1 - cfg.beta1 ** p.step_count)
            v_hat = p.adam_v / (1 - cfg.beta2 ** p.step_count)
            p.data -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
            p.grad = np.zeros_like(p.data)

    def zero_grad(self):
        for p in self.params:
            p.grad = np.zeros_like(p.data)
