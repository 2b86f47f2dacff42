"""Adam optimizer: a pure per-array step plus a named-parameter wrapper."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Mapping

import numpy as np

from .arrays import AutodiffError, DenseArray


@dataclass(frozen=True)
class AdamState:
    """Moment estimates for one parameter array."""

    t: int
    m: DenseArray
    v: DenseArray
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.t < 0:
            raise AutodiffError(f"Adam step count must be >= 0, got {self.t}")
        if self.m.shape != self.v.shape:
            raise AutodiffError(f"Adam moments disagree: {self.m.shape} vs {self.v.shape}")
        if not (0.0 < self.beta1 < 1.0 and 0.0 < self.beta2 < 1.0):
            raise AutodiffError("Adam betas must lie in (0, 1)")

    @classmethod
    def zeros(cls, shape: tuple[int, ...], **hyper: float) -> "AdamState":
        return cls(0, np.zeros(shape), np.zeros(shape), **hyper)


def adam_step(
    params: DenseArray,
    grads: DenseArray,
    state: AdamState,
    *,
    name: str = "parameter",
) -> tuple[DenseArray, AdamState]:
    """One bias-corrected Adam update; inputs are left untouched."""

    if params.shape != grads.shape or params.shape != state.m.shape:
        raise AutodiffError(
            f"{name}: shapes disagree (params {params.shape}, grads {grads.shape}, "
            f"state {state.m.shape})"
        )
    if not np.all(np.isfinite(grads)):
        raise AutodiffError(f"non-finite gradient for {name}")

    t = state.t + 1
    m = state.beta1 * state.m + (1.0 - state.beta1) * grads
    v = state.beta2 * state.v + (1.0 - state.beta2) * grads * grads
    m_hat = m / (1.0 - state.beta1**t)
    v_hat = v / (1.0 - state.beta2**t)
    updated = params - state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps)
    return updated, replace(state, t=t, m=m, v=v)


@dataclass
class Adam:
    """Keeps one :class:`AdamState` per named parameter."""

    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    states: dict[str, AdamState] = field(default_factory=dict)

    def step(
        self, params: Mapping[str, DenseArray], grads: Mapping[str, DenseArray]
    ) -> dict[str, DenseArray]:
        updated: dict[str, DenseArray] = {}
        for name, value in params.items():
            if name not in grads:
                updated[name] = value
                continue
            state = self.states.get(name)
            if state is None:
                state = AdamState.zeros(
                    value.shape,
                    learning_rate=self.learning_rate,
                    beta1=self.beta1,
                    beta2=self.beta2,
                    eps=self.eps,
                )
            updated[name], self.states[name] = adam_step(
                value, grads[name], state, name=name
            )
        return updated


__all__ = ["Adam", "AdamState", "adam_step"]
