"""Adam with decoupled weight decay, plus the cosine learning-rate schedule."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, NumericError, ParameterError
from .tensor import Tensor


@dataclass
class AdamState:
    """Per-parameter first/second moment estimates and step counter."""

    m: np.ndarray
    v: np.ndarray
    step: int = 0

    @classmethod
    def fresh(cls, shape: tuple[int, ...]) -> "AdamState":
        return cls(m=np.zeros(shape), v=np.zeros(shape), step=0)


def adam_step(
    param: Tensor,
    grad: np.ndarray,
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
    weight_decay: float = 0.0,
) -> tuple[Tensor, AdamState]:
    """One bias-corrected Adam update with decoupled weight decay.

    Decay multiplies the parameter by (1 - lr * weight_decay) before the
    moment update, so a zero gradient still shrinks the parameter. The update
    is fully deterministic for identical inputs.
    """
    if not (0.0 <= beta1 < 1.0 and 0.0 <= beta2 < 1.0):
        raise ParameterError(f"adam betas must lie in [0, 1): got {beta1}, {beta2}")
    grad = np.asarray(grad, dtype=np.float64)
    if grad.shape != param.shape:
        raise DimensionError(f"adam grad shape {grad.shape} does not match param {param.shape}")
    if state.m.shape != param.shape or state.v.shape != param.shape:
        raise DimensionError(f"adam state shape does not match param {param.shape}")
    if not np.all(np.isfinite(grad)):
        raise NumericError(f"non-finite gradient for parameter {param.name or '<unnamed>'}")

    data = param.data
    if weight_decay:
        data = data * (1.0 - lr * weight_decay)
    state.step += 1
    state.m = beta1 * state.m + (1.0 - beta1) * grad
    state.v = beta2 * state.v + (1.0 - beta2) * grad * grad
    m_hat = state.m / (1.0 - beta1 ** state.step)
    v_hat = state.v / (1.0 - beta2 ** state.step)
    param.data = data - lr * m_hat / (np.sqrt(v_hat) + eps)
    return param, state


@dataclass
class LrSchedule:
    """Cosine annealing parameters; the emitted rate stays in [eta_min, base_lr]."""

    base_lr: float = 1e-5
    t_max: int = 50
    eta_min: float = 0.0

    def __post_init__(self) -> None:
        if self.base_lr <= 0:
            raise ParameterError(f"base_lr must be positive, got {self.base_lr}")
        if self.t_max <= 0:
            raise ParameterError(f"t_max must be positive, got {self.t_max}")
        if self.eta_min < 0 or self.eta_min > self.base_lr:
            raise ParameterError(f"eta_min must lie in [0, base_lr], got {self.eta_min}")


def cosine_lr(schedule: LrSchedule, step: int) -> float:
    """Cosine-annealed learning rate at ``step``.

    Reaches eta_min at step == t_max and oscillates back with period
    2 * t_max beyond it, matching the closed form of the usual cosine
    annealing schedulers evaluated past the horizon.
    """
    if step < 0:
        raise ParameterError(f"schedule step must be non-negative, got {step}")
    phase = step % (2 * schedule.t_max)
    cos = np.cos(np.pi * phase / schedule.t_max)
    return schedule.eta_min + 0.5 * (schedule.base_lr - schedule.eta_min) * (1.0 + cos)


class Adam:
    """Bookkeeping wrapper applying adam_step to a named parameter set."""

    def __init__(
        self,
        params: dict[str, Tensor],
        lr: float,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
        weight_decay: float = 0.0,
    ):
        self.params = params
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.weight_decay = weight_decay
        self.state = {name: AdamState.fresh(p.shape) for name, p in params.items()}

    def step(self) -> None:
        for name, p in self.params.items():
            if p.grad is None:
                continue
            adam_step(
                p,
                p.grad,
                self.state[name],
                lr=self.lr,
                beta1=self.beta1,
                beta2=self.beta2,
                eps=self.eps,
                weight_decay=self.weight_decay,
            )

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.grad = None
