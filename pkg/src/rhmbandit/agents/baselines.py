"""Comparison learners: joint (š, θ) confidence sets, and flat UCRL over (arm, vertex) cells.

Both reuse the perturbed play, state recovery and halving round rule of
:class:`~rhmbandit.agents.base.RecoveringLearner`.
"""
from __future__ import annotations

import numpy as np

from .. import _kernels
from .base import RecoveringLearner, RoundPolicy, confidence_width_array, select_policy
from .optimism import optimistic_batch


class JointConfidenceUCRL(RecoveringLearner):
    """One confidence family on the joint law of (next state, θ) per (previous state, arm).

    The transition matrix is no longer shared across arms: every (s̃, b)
    estimates P(š, θ | s̃, b) from its own samples.
    """

    tag = "joint"
    _record_kernel = _kernels.joint_record

    def _init_stats(self):
        kn = self.knowledge_
        S, B = kn.num_states, kn.num_arms
        sizes = kn.theta_sizes()
        self._joint_size = sizes.sum(axis=1)
        self._joint_card = (S * S * B * self._joint_size).astype(float)
        self.n_joint_ = np.zeros((S, B, S, int(sizes.max())), dtype=np.int64)
        self.n_sb_ = np.zeros((S, B), dtype=np.int64)
        # valid (š, θ) cells of each arm, in the same order as the recovery candidates
        self._cells = [(self._cand_state[b, :self._n_cand[b]], self._cand_local[b, :self._n_cand[b]])
                       for b in range(B)]
        self._values = [self.vertices_ @ self._cand_theta[b, :self._n_cand[b]].T for b in range(B)]

    def joint_estimate(self, s_prev, arm):
        """Empirical P(š, θ | s̃, b) over the arm's alphabet (uniform before any sample)."""
        ss, kk = self._cells[arm]
        n = self.n_sb_[s_prev, arm]
        if n == 0:
            return np.full(len(ss), 1.0 / len(ss))
        return self.n_joint_[s_prev, arm, ss, kk] / n

    def joint_conf(self):
        return confidence_width_array(self.t_, self.alpha_, self._joint_card[None, :], self.n_sb_)

    def _compute_policy(self):
        S, B = self.n_sb_.shape
        V = len(self.vertices_)
        conf = self.joint_conf()
        values = np.empty((S, B, V))
        for s in range(S):
            for b in range(B):
                _, values[s, b] = optimistic_batch(self.joint_estimate(s, b), conf[s, b],
                                                   self._values[b])
        arms, verts, actions, best = select_policy(values, self.vertices_)
        return RoundPolicy(arms, verts, actions, best, self.t_)

    def _snapshot(self):
        return {"conf_joint": self.joint_conf()}

    def _record_state(self):
        return (self.n_joint_, self.n_sb_, self._joint_card, self.policy_.snapshot["conf_joint"],
                float(self.alpha_))


class FlatUCRL(RecoveringLearner):
    """UCRL-style learner that treats every (arm, vertex) pair as an unrelated action.

    Keeps a transition estimate P(š | s̃, b, v) and a mean-reward estimate
    r(b, v, š) per cell, each with its own confidence width. Rewards are
    rescaled to [0, 1] with the range implied by the known θ sets and the
    action polytope. Plays are attributed to the planned vertex while the
    perturbed action is what the environment sees.
    """

    tag = "flat_ucrl"
    _record_kernel = _kernels.flat_record

    def _init_stats(self):
        kn = self.knowledge_
        S, B = kn.num_states, kn.num_arms
        V = len(self.vertices_)
        self.n_sba_ = np.zeros((S, B, V), dtype=np.int64)
        self.n_sbas_ = np.zeros((S, B, V, S), dtype=np.int64)
        self.n_bas_ = np.zeros((B, V, S), dtype=np.int64)
        self.r_bas_ = np.zeros((B, V, S))
        self._card_p = float(S * S * B * V)
        self._card_r = float(S * B * V)
        allv = np.concatenate([self._cand_theta[b, :self._n_cand[b]] for b in range(B)])
        r = self.vertices_ @ allv.T
        self.reward_low_ = float(r.min())
        span = float(r.max() - r.min())
        self.reward_span_ = span if span > 0 else 1.0

    def transition_estimate(self):
        n = self.n_sba_[..., None].astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(n > 0, self.n_sbas_ / n, 1.0 / self.n_sbas_.shape[-1])

    def reward_estimate(self):
        with np.errstate(invalid="ignore", divide="ignore"):
            return np.where(self.n_bas_ > 0, self.r_bas_ / self.n_bas_, 0.0)

    def _confs(self):
        conf_p = confidence_width_array(self.t_, self.alpha_, self._card_p, self.n_sba_)
        conf_r = confidence_width_array(self.t_, self.alpha_, self._card_r, self.n_bas_)
        return conf_p, conf_r

    def _compute_policy(self):
        conf_p, conf_r = self._confs()
        optimistic_reward = self.reward_estimate() + conf_r  # (B, V, S)
        _, values = optimistic_batch(self.transition_estimate(), conf_p,
                                     optimistic_reward[None, ...])
        arms, verts, actions, best = select_policy(values, self.vertices_)
        return RoundPolicy(arms, verts, actions, best, self.t_)

    def _snapshot(self):
        conf_p, conf_r = self._confs()
        return {"conf_p": conf_p, "conf_r": conf_r}

    def _record_state(self):
        snap = self.policy_.snapshot
        return (self.n_sba_, self.n_sbas_, self.n_bas_, self.r_bas_, snap["conf_p"], snap["conf_r"],
                self._card_p, self._card_r, self.reward_low_, self.reward_span_, float(self.alpha_))
