"""Drive a learner against an environment and keep the truth log next to it."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .env import HiddenMarkovBanditEnv


@dataclass
class SimulationLog:
    rewards: np.ndarray
    true_states: np.ndarray
    recovered_states: np.ndarray
    diagnostics: np.ndarray
    arms: np.ndarray
    round_starts: np.ndarray

    @property
    def recovery_failures(self):
        """Steps whose recovered state differs from the hidden one."""
        return self.recovered_states != self.true_states

    @property
    def n_diagnostics(self):
        return int(np.count_nonzero(self.diagnostics))


def _empty_log(horizon):
    return (np.empty(horizon), np.empty(horizon, dtype=np.int64), np.empty(horizon, dtype=np.int64),
            np.zeros(horizon, dtype=np.int8), np.empty(horizon, dtype=np.int64))


def simulate(agent, env, horizon, step_by_step=False):
    """Play ``horizon`` steps of ``agent`` (already reset) against ``env``.

    With ``step_by_step`` (or for environments other than
    :class:`HiddenMarkovBanditEnv`) the public ``act``/``step``/``observe``
    calls are used; otherwise the compiled loop runs whole rounds at once.
    Both paths give identical results for the same seeds.
    """
    rewards, true_states, rec_states, diags, arms = _empty_log(horizon)
    t0 = agent.t_
    if step_by_step or not isinstance(env, HiddenMarkovBanditEnv):
        for i in range(horizon):
            arm, action = agent.act()
            reward, s_true, _ = env.step(arm, action, check=False)
            diag_before = agent.diagnostics_
            _, s_hat = agent.observe(reward)
            rewards[i], true_states[i], rec_states[i], arms[i] = reward, s_true, s_hat, arm
            diags[i] = agent.diagnostics_ != diag_before
    else:
        trans_cdf, theta_cdf, vecs = env.spec._packed()
        H, h, mode, lower, upper, verts = agent._geom
        # logs are indexed by absolute learner time inside the kernel
        buf = [np.empty(t0 + horizon), np.empty(t0 + horizon, dtype=np.int64),
               np.empty(t0 + horizon, dtype=np.int64), np.zeros(t0 + horizon, dtype=np.int8),
               np.empty(t0 + horizon, dtype=np.int64)]
        t, t_end = t0, t0 + horizon
        while t < t_end:
            t, s_prev, ended = _kernels.run_steps(
                trans_cdf, theta_cdf, vecs, env._state, env.trans_rng, env.theta_rng,
                agent.vertices_, agent.policy_.arms, agent.policy_.vertex_indices,
                agent._cand_theta, agent._cand_state, agent._cand_local, agent._n_cand,
                H, h, mode, lower, upper, agent._sched, int(agent.max_attempts),
                float(agent.ambiguity_tol), agent.rng_, agent.s_prev_,
                agent._record_kernel, agent._st,
                t, t_end, *buf)
            agent.t_ = int(t)
            agent.s_prev_ = int(s_prev)
            if ended:
                agent._start_round()
        env.t += horizon
        rewards, true_states, rec_states, diags, arms = (b[t0:] for b in buf)
        agent.diagnostics_ += int(np.count_nonzero(diags))
    starts = np.array([s for s in agent.round_starts_ if s >= t0], dtype=np.int64)
    return SimulationLog(rewards, true_states, rec_states, diags, arms, starts)


def simulate_known_state(env, arms, actions, horizon):
    """Play the fixed policy ``(arms[s], actions[s])`` of the true previous state."""
    rewards = np.empty(horizon)
    true_states = np.empty(horizon, dtype=np.int64)
    trans_cdf, theta_cdf, vecs = env.spec._packed()
    _kernels.run_known_state(trans_cdf, theta_cdf, vecs, env._state, env.trans_rng, env.theta_rng,
                             np.asarray(arms, dtype=np.int64),
                             np.ascontiguousarray(actions, dtype=float),
                             0, horizon, rewards, true_states)
    env.t += horizon
    return rewards, true_states
