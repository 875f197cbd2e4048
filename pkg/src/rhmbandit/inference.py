"""Empirical counts, plug-in estimators and confidence widths."""
from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import ContractViolation
from .validation import check_alpha

confidence_width = _kernels.confidence_width


@dataclass(frozen=True)
class ConfidenceParams:
    alpha: float = 3.1

    def __post_init__(self):
        object.__setattr__(self, "alpha", check_alpha(self.alpha))


class CountTables:
    """Visit counts N_t(s), N_t(s̃, š), N_t(b, s) and N_t(b, s, θ).

    ``t`` is the current time. Counts cover the steps before ``t``; the very
    first step (``t = 0``) contributes no counts and is registered with
    :meth:`tick`.
    """

    def __init__(self, theta_sizes, t=0):
        self.theta_sizes = np.asarray(theta_sizes, dtype=np.int64)
        B, S = self.theta_sizes.shape
        self.n_state = np.zeros(S, dtype=np.int64)
        self.n_trans = np.zeros((S, S), dtype=np.int64)
        self.n_arm_state = np.zeros((B, S), dtype=np.int64)
        self.n_theta = np.zeros((B, S, int(self.theta_sizes.max())), dtype=np.int64)
        self.t = t

    @property
    def num_states(self):
        return self.n_state.size

    @property
    def num_arms(self):
        return self.n_arm_state.shape[0]

    def tick(self):
        self.t += 1

    def record_transition(self, s_prev, s_next, arm, theta_index):
        if not 0 <= theta_index < self.theta_sizes[arm, s_next]:
            raise ContractViolation(
                f"θ index {theta_index} out of range for arm {arm}, state {s_next}"
            )
        _kernels.record_counts(self.n_state, self.n_trans, self.n_arm_state, self.n_theta,
                               s_prev, s_next, arm, theta_index)
        self.t += 1

    def copy(self):
        return copy.deepcopy(self)


def est_transition(c: CountTables) -> np.ndarray:
    S = c.num_states
    n = c.n_state[:, None].astype(float)
    with np.errstate(invalid="ignore", divide="ignore"):
        P = np.where(n > 0, c.n_trans / n, 1.0 / S)
    return P


def est_theta(c: CountTables, b, s) -> np.ndarray:
    k = int(c.theta_sizes[b, s])
    n = c.n_arm_state[b, s]
    if n == 0:
        return np.full(k, 1.0 / k)
    return c.n_theta[b, s, :k] / n


def conf_s(c: CountTables, params: ConfidenceParams, s) -> float:
    S = c.num_states
    return confidence_width(float(c.t), params.alpha, float(S * S), int(c.n_state[s]))


def conf_theta(c: CountTables, params: ConfidenceParams, b, s) -> float:
    card = float(c.theta_sizes[b, s] * c.num_arms * c.num_states)
    return confidence_width(float(c.t), params.alpha, card, int(c.n_arm_state[b, s]))


def conf_s_all(c: CountTables, params: ConfidenceParams) -> np.ndarray:
    return np.array([conf_s(c, params, s) for s in range(c.num_states)])


def conf_theta_all(c: CountTables, params: ConfidenceParams) -> np.ndarray:
    return np.array([[conf_theta(c, params, b, s) for s in range(c.num_states)]
                     for b in range(c.num_arms)])
