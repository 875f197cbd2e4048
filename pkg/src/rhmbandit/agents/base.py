"""Shared machinery of the round-based learners: perturbed play, state recovery, rounds."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .. import _kernels
from ..exceptions import ContractViolation
from ..geometry import PerturbationSchedule
from ..validation import argmax_first, check_alpha, check_random_state

logger = logging.getLogger(__name__)


@dataclass
class RoundPolicy:
    """Per previous-state plan fixed for one round, plus the round-start confidence snapshot."""

    arms: np.ndarray
    vertex_indices: np.ndarray
    actions: np.ndarray
    values: np.ndarray
    t_start: int
    snapshot: dict = field(default_factory=dict)


def confidence_width_array(t, alpha, card, n):
    """Vectorized ``_kernels.confidence_width``."""
    n = np.asarray(n, dtype=float)
    card = np.broadcast_to(np.asarray(card, dtype=float), n.shape)
    if t <= 1:
        return np.ones(n.shape)
    with np.errstate(divide="ignore"):
        width = np.sqrt(np.log(4.0 * (t - 1.0) ** alpha * card) / (2.0 * n))
    return np.where(n > 0, np.minimum(width, 1.0), 1.0)


def select_policy(values, vertices):
    """Argmax over (arm, vertex) per previous state with deterministic tie-breaking.

    ``values`` has shape (S, B, V) with vertices already in lexicographic
    order, so the first near-maximal flat index is the smallest arm and then
    the lexicographically smallest vertex.
    """
    S, B, V = values.shape
    arms = np.empty(S, dtype=np.int64)
    verts = np.empty(S, dtype=np.int64)
    best = np.empty(S)
    for s in range(S):
        idx, _ = argmax_first(values[s].ravel())
        arms[s], verts[s] = divmod(idx, V)
        best[s] = values[s, arms[s], verts[s]]
    return arms, verts, vertices[verts], best


class RecoveringLearner(BaseEstimator):
    """Base class for learners that plan on vertices, play ε-perturbed actions and
    recover the hidden state from each reward.

    Subclasses provide the statistics they keep (``_init_stats``), the policy
    computed at each round start (``_compute_policy``), the confidence
    snapshot (``_snapshot``) and the compiled per-step update
    (``_record_kernel`` with its argument tuple ``_record_state``).

    Parameters
    ----------
    alpha : float
        Confidence exponent, must exceed 3.
    epsilon, alpha_eps, gamma : float
        Perturbation radius schedule ``epsilon / (gamma t^alpha_eps max ||θ||_1)``.
    min_radius : float
        Floor on the perturbation radius. ``0`` follows the schedule exactly.
    ambiguity_tol : float
        Relative gap between the best and second-best reward residual below
        which a recovery is reported as ambiguous.
    max_attempts : int
        Rejection-sampling attempts before the interior-segment fallback.
    random_state : None, int or numpy Generator
        Source of the perturbations.
    """

    tag = "base"
    _record_kernel = None

    def __init__(self, alpha=3.1, epsilon=0.5, alpha_eps=1.5, gamma=1.0, min_radius=1e-6,
                 ambiguity_tol=1e-14, max_attempts=64, random_state=None):
        self.alpha = alpha
        self.epsilon = epsilon
        self.alpha_eps = alpha_eps
        self.gamma = gamma
        self.min_radius = min_radius
        self.ambiguity_tol = ambiguity_tol
        self.max_attempts = max_attempts
        self.random_state = random_state

    # ------------------------------------------------------------------ setup

    def reset(self, knowledge, random_state=None):
        """Forget everything and prepare to play against a model with ``knowledge``."""
        self.alpha_ = check_alpha(self.alpha)
        self.knowledge_ = knowledge
        S, B = knowledge.num_states, knowledge.num_arms
        V = np.asarray(knowledge.actions.vertices, dtype=float)
        self.vertices_ = np.ascontiguousarray(V[np.lexsort(V.T[::-1])])

        sizes = knowledge.theta_sizes()
        cmax = int(sizes.sum(axis=1).max())
        N = knowledge.dim
        self._cand_theta = np.zeros((B, cmax, N))
        self._cand_state = np.zeros((B, cmax), dtype=np.int64)
        self._cand_local = np.zeros((B, cmax), dtype=np.int64)
        self._n_cand = sizes.sum(axis=1).astype(np.int64)
        for b in range(B):
            c = 0
            for s in range(S):
                for k, th in enumerate(knowledge.thetas[b][s]):
                    self._cand_theta[b, c] = th
                    self._cand_state[b, c] = s
                    self._cand_local[b, c] = k
                    c += 1
        self._geom = knowledge.actions._kernel_geometry()
        self.schedule_ = PerturbationSchedule(self.epsilon, self.alpha_eps, self.gamma,
                                              knowledge.theta_norm_max)
        self._sched = (float(self.epsilon), float(self.alpha_eps), float(self.gamma),
                       float(knowledge.theta_norm_max), float(self.min_radius))
        seed = self.random_state if random_state is None else random_state
        self.rng_ = check_random_state(seed)
        self.t_ = 0
        self.s_prev_ = 0
        self.round_starts_ = []
        self.diagnostics_ = 0
        self._pending = None
        self._init_stats()
        self._start_round()
        return self

    def _start_round(self):
        policy = self._compute_policy()
        policy.t_start = self.t_
        policy.snapshot = self._snapshot()
        self.policy_ = policy
        self.round_starts_.append(self.t_)
        self._st = self._record_state()

    @property
    def n_rounds_(self):
        return len(self.round_starts_)

    # --------------------------------------------------------- subclass hooks

    def _init_stats(self):
        raise NotImplementedError

    def _compute_policy(self) -> RoundPolicy:
        raise NotImplementedError

    def _snapshot(self) -> dict:
        raise NotImplementedError

    def _record_state(self) -> tuple:
        raise NotImplementedError

    # ---------------------------------------------------------- online play

    def act(self):
        """Arm and perturbed action for the current step."""
        check_is_fitted(self, "policy_")
        arm = int(self.policy_.arms[self.s_prev_])
        vertex = int(self.policy_.vertex_indices[self.s_prev_])
        radius = _kernels.perturbation_radius(self.t_ + 1.0, *self._sched)
        H, h, mode, lower, upper, verts = self._geom
        action = np.empty(self.vertices_.shape[1])
        _kernels.perturb(self.vertices_[vertex], radius, H, h, mode, lower, upper, verts,
                         int(self.max_attempts), self.rng_, action)
        self._pending = (arm, vertex, action)
        return arm, action.copy()

    def observe(self, reward):
        """Recover (θ index within its family, state) from the reward of the last ``act``."""
        if self._pending is None:
            raise ContractViolation("observe() called without a preceding act()")
        arm, vertex, action = self._pending
        self._pending = None
        s_hat, best, diag, ended = _kernels.agent_observe(
            float(reward), arm, vertex, action, self._cand_theta, self._cand_state,
            self._cand_local, self._n_cand, float(self.ambiguity_tol), self.s_prev_, self.t_,
            self._record_kernel, self._st)
        if diag:
            self.diagnostics_ += 1
            logger.debug("recovery diagnostic %d at t=%d", diag, self.t_)
        self.s_prev_ = int(s_hat)
        self.t_ += 1
        if ended:
            self._start_round()
        return int(self._cand_local[arm, best]), int(s_hat)

    # ------------------------------------------------------- estimator API

    def fit(self, env, horizon, random_state=None):
        """Interact with ``env`` for ``horizon`` steps from scratch."""
        from ..simulation import simulate

        self.reset(env.knowledge, random_state)
        log = simulate(self, env, horizon)
        self.rewards_ = log.rewards
        return self

    def predict(self, prev_states):
        """(arms, vertex actions) the current round plays after each previous state."""
        check_is_fitted(self, "policy_")
        prev_states = np.asarray(prev_states, dtype=np.int64)
        return self.policy_.arms[prev_states], self.policy_.actions[prev_states]
