"""The optimistic learner with separate transition and θ-distribution confidence sets."""
from __future__ import annotations

import numpy as np

from .. import _kernels
from ..inference import (
    ConfidenceParams,
    CountTables,
    conf_s_all,
    conf_theta_all,
    est_theta,
    est_transition,
)
from .base import RecoveringLearner, RoundPolicy, select_policy
from .optimism import optimistic_batch


def optimistic_vertex_values(counts, params, theta_vertex_values):
    """m[b, š, v]: optimistic E⟨v, θ⟩ under P_Θ(b, š) for every vertex.

    ``theta_vertex_values[b][s]`` is the (V, k) table of ⟨v, θ⟩.
    """
    conf = conf_theta_all(counts, params)
    B, S = conf.shape
    V = theta_vertex_values[0][0].shape[0]
    m = np.empty((B, S, V))
    for b in range(B):
        for s in range(S):
            _, m[b, s] = optimistic_batch(est_theta(counts, b, s), conf[b, s],
                                          theta_vertex_values[b][s])
    return m


def compute_policy(counts: CountTables, knowledge, params: ConfidenceParams, vertices=None):
    """Round policy: for every previous state the (arm, vertex) maximizing

        Σ_š P̂(s̃, š) · max_{p̃ in box(b, š)} Σ_θ p̃(θ) ⟨v, θ⟩

    where the box is centred at the empirical θ distribution with the θ
    confidence width. The transition estimate enters as is.
    """
    if vertices is None:
        V = np.asarray(knowledge.actions.vertices, dtype=float)
        vertices = V[np.lexsort(V.T[::-1])]
    tv = [[vertices @ th.T for th in row] for row in knowledge.thetas]
    m = optimistic_vertex_values(counts, params, tv)
    values = np.einsum("ij,bjv->ibv", est_transition(counts), m)
    arms, verts, actions, best = select_policy(values, vertices)
    return RoundPolicy(arms, verts, actions, best, counts.t)


def round_should_end(counts: CountTables, policy: RoundPolicy, params: ConfidenceParams):
    """True iff some confidence width is at most half its value at the round start."""
    snap = policy.snapshot
    return bool(np.any(conf_s_all(counts, params) <= 0.5 * snap["conf_s"])
                or np.any(conf_theta_all(counts, params) <= 0.5 * snap["conf_theta"]))


class HiddenMarkovUCRL(RecoveringLearner):
    """Round-based optimistic learner for the restless hidden Markov bandit.

    The transition matrix is estimated jointly over all arms; each (arm, state)
    pair keeps its own θ distribution estimate with an optimistic box. A round
    ends as soon as any confidence width has halved since the round started.

    Examples
    --------
    >>> from rhmbandit.harness.presets import load_preset
    >>> from rhmbandit.env import HiddenMarkovBanditEnv
    >>> spec = load_preset("1a").sample(np.random.default_rng(0))
    >>> agent = HiddenMarkovUCRL(random_state=0).fit(HiddenMarkovBanditEnv(spec, seed=1), 500)
    >>> agent.predict([0, 1])[0].shape
    (2,)
    """

    tag = "hucrl"
    _record_kernel = _kernels.hucrl_record

    def _init_stats(self):
        self.params_ = ConfidenceParams(self.alpha_)
        self.counts_ = CountTables(self.knowledge_.theta_sizes())
        self._tv = [[self.vertices_ @ th.T for th in row] for row in self.knowledge_.thetas]

    def _compute_policy(self):
        self.counts_.t = self.t_
        m = optimistic_vertex_values(self.counts_, self.params_, self._tv)
        values = np.einsum("ij,bjv->ibv", est_transition(self.counts_), m)
        arms, verts, actions, best = select_policy(values, self.vertices_)
        return RoundPolicy(arms, verts, actions, best, self.t_)

    def _snapshot(self):
        self.counts_.t = self.t_
        return {"conf_s": conf_s_all(self.counts_, self.params_),
                "conf_theta": conf_theta_all(self.counts_, self.params_)}

    def _record_state(self):
        c = self.counts_
        snap = self.policy_.snapshot
        return (c.n_state, c.n_trans, c.n_arm_state, c.n_theta, c.theta_sizes,
                snap["conf_s"], snap["conf_theta"], float(self.alpha_))

    def round_should_end(self):
        self.counts_.t = self.t_
        return round_should_end(self.counts_, self.policy_, self.params_)
