"""Fixed-capacity transition buffer with uniform sampling."""

from __future__ import annotations

import numpy as np

from ..env import Transition


class BufferTooSmall(RuntimeError):
    """Raised when a sample is requested from a buffer with too few items."""


class ReplayBuffer:
    """Ring buffer. Once full, new transitions overwrite the oldest ones."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._items: list[Transition] = []
        self._cursor = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, transition: Transition) -> None:
        if len(self._items) < self.capacity:
            self._items.append(transition)
        else:
            self._items[self._cursor] = transition
            self._cursor = (self._cursor + 1) % self.capacity

    def extend(self, transitions) -> None:
        for t in transitions:
            self.push(t)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        """Uniform sample without replacement."""
        if batch_size > len(self._items):
            raise BufferTooSmall(
                f"requested {batch_size} transitions, buffer holds {len(self._items)}"
            )
        picks = rng.choice(len(self._items), size=batch_size, replace=False)
        return [self._items[int(i)] for i in picks]
