"""Finite-difference verification of analytic gradients.

``finite_diff_check`` evaluates a scalar-valued closure, runs the backward
sweep, then probes sampled parameter coordinates with central differences.
Relative error is |g_a - g_n| / max(1e-8, |g_a| + |g_n|).

Central differences are meaningless where a piecewise activation crosses
its kink inside the probe interval, so each coordinate is screened first:
if the forward and backward one-sided differences disagree strongly the
coordinate is skipped and counted in ``skipped`` instead of failing.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .optim import ParameterStore
from .tensor import Tensor, backward


@dataclass
class GradCheckReport:
    max_rel_error: float
    tolerance: float
    checked: int
    skipped: int
    worst_param: str = ""
    worst_index: tuple[int, ...] = field(default_factory=tuple)

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.max_rel_error <= self.tolerance


def finite_diff_check(
    f: Callable[[], Tensor],
    store: ParameterStore,
    epsilon: float = 1e-5,
    tolerance: float = 1e-4,
    rng: np.random.Generator | None = None,
    max_coords_per_param: int = 4,
    kink_screen: float = 0.05,
) -> GradCheckReport:
    """Compare analytic gradients of ``f`` against central differences.

    ``f`` must be a pure function of the parameters in ``store`` returning
    a scalar Tensor. Up to ``max_coords_per_param`` coordinates per
    parameter are probed (all of them when the tensor is small).
    """
    if rng is None:
        rng = np.random.default_rng(0)

    store.zero_grads()
    loss = f()
    backward(loss)
    base = loss.item()
    analytic = {
        name: (p.grad.copy() if p.grad is not None else np.zeros_like(p.data))
        for name, p in store.items()
    }
    store.zero_grads()

    report = GradCheckReport(0.0, tolerance, 0, 0)
    for name, p in store.items():
        flat = p.data.reshape(-1)
        n = flat.size
        if n <= max_coords_per_param:
            coords = np.arange(n)
        else:
            coords = rng.choice(n, size=max_coords_per_param, replace=False)
        for c in coords:
            original = flat[c]
            flat[c] = original + epsilon
            up = f().item()
            flat[c] = original - epsilon
            down = f().item()
            flat[c] = original

            forward_diff = (up - base) / epsilon
            backward_diff = (base - down) / epsilon
            side_gap = abs(forward_diff - backward_diff)
            side_scale = max(1e-8, abs(forward_diff) + abs(backward_diff))
            if side_gap / side_scale > kink_screen:
                report.skipped += 1
                continue

            numeric = (up - down) / (2.0 * epsilon)
            g_a = analytic[name].reshape(-1)[c]
            rel = abs(g_a - numeric) / max(1e-8, abs(g_a) + abs(numeric))
            report.checked += 1
            if rel > report.max_rel_error:
                report.max_rel_error = rel
                report.worst_param = name
                report.worst_index = np.unravel_index(c, p.data.shape)
    return report
