"""Linear maximization over an L∞ box intersected with the probability simplex."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass
class OptimisticBox:
    center: np.ndarray
    half_width: float
    values: np.ndarray

    @property
    def lower(self):
        return np.clip(np.asarray(self.center, float) - self.half_width, 0.0, 1.0)

    @property
    def upper(self):
        return np.clip(np.asarray(self.center, float) + self.half_width, 0.0, 1.0)


def optimistic_batch(center, half_width, values):
    """Greedy solution of max ⟨p, values⟩ s.t. |p - center| <= half_width, p in the simplex.

    All arguments broadcast over leading axes; the simplex runs along the last
    axis. Starting from the lower bounds, the remaining mass goes to entries in
    decreasing value order (stable, so lower indices win ties), each capped at
    its upper bound. Returns ``(p, value)``.
    """
    center = np.asarray(center, dtype=float)
    values = np.asarray(values, dtype=float)
    center, values = np.broadcast_arrays(center, values)
    hw = np.asarray(half_width, dtype=float)[..., None]
    lo = np.clip(center - hw, 0.0, 1.0)
    hi = np.clip(center + hw, 0.0, 1.0)
    rem = np.maximum(1.0 - lo.sum(axis=-1, keepdims=True), 0.0)
    order = np.argsort(-values, axis=-1, kind="stable")
    cap = np.take_along_axis(hi - lo, order, axis=-1)
    before = np.cumsum(cap, axis=-1) - cap
    add = np.clip(rem - before, 0.0, cap)
    p = lo.copy()
    np.put_along_axis(p, order, np.take_along_axis(lo, order, axis=-1) + add, axis=-1)
    return p, (p * values).sum(axis=-1)


def optimistic_expectation(box: OptimisticBox):
    p, value = optimistic_batch(box.center, box.half_width, box.values)
    return p, float(value)
