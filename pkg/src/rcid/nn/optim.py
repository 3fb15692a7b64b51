"""Named parameter collections and an Adam optimizer step."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .tensor import Tensor, parameter


@dataclass(frozen=True)
class AdamConfig:
    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def __post_init__(self) -> None:
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not (0.0 <= self.beta1 < 1.0 and 0.0 <= self.beta2 < 1.0):
            raise ValueError("betas must lie in [0, 1)")
        if self.eps <= 0:
            raise ValueError("eps must be positive")


class ParameterStore:
    """Ordered name -> Tensor map with per-parameter Adam moments."""

    def __init__(self) -> None:
        self._params: dict[str, Tensor] = {}
        self._m: dict[str, np.ndarray] = {}
        self._v: dict[str, np.ndarray] = {}
        self.step_count = 0

    def add(self, name: str, data) -> Tensor:
        if name in self._params:
            raise ValueError(f"duplicate parameter name {name!r}")
        t = data if isinstance(data, Tensor) else parameter(data)
        t.requires_grad = True
        self._params[name] = t
        self._m[name] = np.zeros_like(t.data)
        self._v[name] = np.zeros_like(t.data)
        return t

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __len__(self) -> int:
        return len(self._params)

    def names(self) -> list[str]:
        return list(self._params)

    def items(self):
        return self._params.items()

    def tensors(self) -> list[Tensor]:
        return list(self._params.values())

    def zero_grads(self) -> None:
        for t in self._params.values():
            t.grad = None

    def state_arrays(self) -> dict[str, np.ndarray]:
        return {name: t.data for name, t in self._params.items()}

    def clone(self) -> "ParameterStore":
        other = ParameterStore()
        for name, t in self._params.items():
            other.add(name, t.data.copy())
        other.step_count = self.step_count
        return other

    def copy_from(self, other: "ParameterStore") -> None:
        """Overwrite parameter values in place; moments are untouched."""
        if self.names() != other.names():
            raise ValueError("parameter stores have different layouts")
        for name, t in self._params.items():
            np.copyto(t.data, other[name].data)


def adam_step(store: ParameterStore, config: AdamConfig) -> None:
    """One bias-corrected Adam update; gradients are zeroed afterward.

    Parameters with no gradient this round are treated as zero-gradient,
    so their moments still decay.
    """
    store.step_count += 1
    t = store.step_count
    c1 = 1.0 - config.beta1**t
    c2 = 1.0 - config.beta2**t
    for name, p in store.items():
        g = p.grad if p.grad is not None else np.zeros_like(p.data)
        m = store._m[name]
        v = store._v[name]
        m *= config.beta1
        m += (1.0 - config.beta1) * g
        v *= config.beta2
        v += (1.0 - config.beta2) * (g * g)
        p.data -= config.lr * (m / c1) / (np.sqrt(v / c2) + config.eps)
        p.grad = None
