import math

import numpy as np
import pytest

from rhmbandit import oracle
from rhmbandit.agents import HiddenMarkovUCRL, compute_policy, round_should_end
from rhmbandit.env import EnvironmentSpec, HiddenMarkovBanditEnv
from rhmbandit.exceptions import ConfigurationError, ContractViolation
from rhmbandit.inference import ConfidenceParams, CountTables, conf_s_all, conf_theta_all


def lex_vertices(kn):
    V = np.asarray(kn.actions.vertices, dtype=float)
    return V[np.lexsort(V.T[::-1])]


def test_zero_data_policy_is_best_case_average(spec_1a):
    kn = spec_1a.knowledge()
    V = lex_vertices(kn)
    pol = compute_policy(CountTables(kn.theta_sizes()), kn, ConfidenceParams(), V)
    # uniform P̂ and full-width boxes: value = mean over š of max_θ ⟨v, θ⟩
    expect = np.array([[np.mean([(V @ th.T).max(axis=1) for th in row], axis=0)
                        for row in kn.thetas]])
    best = expect.reshape(-1).max()
    np.testing.assert_allclose(pol.values, best)


def test_singleton_thetas_give_plug_in_argmax():
    rng = np.random.default_rng(3)
    from rhmbandit.geometry import Hypercube

    thetas = [[rng.integers(-5, 6, size=(1, 2)).astype(float) + 20 * s for s in range(2)]
              for _ in range(2)]
    spec = EnvironmentSpec(np.array([[0.3, 0.7], [0.6, 0.4]]), thetas,
                           [[[1.0]] * 2] * 2, Hypercube.unit(2))
    c = CountTables(spec.knowledge().theta_sizes(), t=10)
    for s_prev, s_next in [(0, 1), (0, 1), (0, 0), (1, 0)]:
        c.record_transition(s_prev, s_next, 0, 0)
    pol = compute_policy(c, spec.knowledge(), ConfidenceParams())
    P_hat = np.array([[1 / 3, 2 / 3], [1.0, 0.0]])
    V = lex_vertices(spec.knowledge())
    g = oracle.state_action_values(spec, V, transition=P_hat)
    for s in range(2):
        assert pol.values[s] == pytest.approx(g[s].max())
        assert g[s, pol.arms[s], pol.vertex_indices[s]] == pytest.approx(g[s].max())


def test_true_parameters_with_tight_confidence_give_optimal_set(spec_1a):
    """Counts whose estimates equal the truth, with widths below Δ/2."""
    kn = spec_1a.knowledge()
    delta = oracle.gap_delta(spec_1a)
    n = 10 ** 7
    c = CountTables(kn.theta_sizes(), t=2 * n)
    c.n_state[:] = n
    c.n_trans[:] = np.rint(spec_1a.transition * n).astype(np.int64)
    for b in range(2):
        for s in range(2):
            c.n_arm_state[b, s] = n
            c.n_theta[b, s, :2] = np.rint(spec_1a.theta_probs[b][s] * n).astype(np.int64)
    params = ConfidenceParams()
    assert conf_theta_all(c, params).max() < delta / 2
    pol = compute_policy(c, kn, params)
    opt = oracle.optimal_policy(spec_1a)
    for s in range(2):
        assert (pol.arms[s], pol.vertex_indices[s]) in opt.tie_sets[s]


def test_round_should_end_rules():
    c = CountTables([[2, 2]], t=100)
    c.n_state[:] = [10, 10]
    c.n_arm_state[:] = [10, 10]
    params = ConfidenceParams()
    from rhmbandit.agents.base import RoundPolicy

    pol = RoundPolicy(None, None, None, None, 100,
                      {"conf_s": conf_s_all(c, params), "conf_theta": conf_theta_all(c, params)})
    assert not round_should_end(c, pol, params)           # t = t_k
    c.t = 10_000
    assert not round_should_end(c, pol, params)           # frozen counts, growing t
    c.t = 100
    c.n_state[0] = 40
    assert round_should_end(c, pol, params)               # ×4 count at the same t


def _step_run(agent, env, horizon):
    """Drive the public API, checking the policy and halving invariants at every round."""
    params = ConfidenceParams(agent.alpha)
    kn = env.knowledge
    start_counts = agent.counts_.copy()
    n_rounds = agent.n_rounds_
    for _ in range(horizon):
        arm, action = agent.act()
        assert env.spec.actions.contains(action)
        reward, s_true, _ = env.step(arm, action)
        _, s_hat = agent.observe(reward)
        assert s_hat == s_true
        if agent.n_rounds_ != n_rounds:
            n_rounds = agent.n_rounds_
            snap = agent.policy_.snapshot
            # a width halved only where the count at least quadrupled
            c = agent.counts_.copy()
            c.t = agent.t_
            old = agent.round_starts_[-2]
            old_c = start_counts
            old_c.t = old
            halved_s = conf_s_all(c, params) <= 0.5 * conf_s_all(old_c, params)
            assert np.all(c.n_state[halved_s] >= 4 * old_c.n_state[halved_s])
            halved_t = conf_theta_all(c, params) <= 0.5 * conf_theta_all(old_c, params)
            assert np.all(c.n_arm_state[halved_t] >= 4 * old_c.n_arm_state[halved_t])
            # the new policy is the optimistic argmax at the round start
            ref = compute_policy(c, kn, params, agent.vertices_)
            np.testing.assert_array_equal(ref.arms, agent.policy_.arms)
            np.testing.assert_array_equal(ref.vertex_indices, agent.policy_.vertex_indices)
            np.testing.assert_allclose(ref.values, agent.policy_.values, atol=1e-9)
            np.testing.assert_allclose(snap["conf_s"], conf_s_all(c, params))
            start_counts = c
    return agent


def test_round_invariants_step_by_step(spec_1a):
    env = HiddenMarkovBanditEnv(spec_1a, seed=3)
    agent = HiddenMarkovUCRL(random_state=4).reset(spec_1a.knowledge())
    _step_run(agent, env, 3000)
    S, B, T = 2, 2, 3000
    assert agent.n_rounds_ <= S * B * (math.log2(T / (S * B) + 1) + 1)
    assert agent.n_rounds_ > 1


def test_policy_actions_are_vertices(spec_2a):
    agent = HiddenMarkovUCRL(random_state=0).fit(HiddenMarkovBanditEnv(spec_2a, seed=0), 2000)
    V = {tuple(v) for v in spec_2a.actions.vertices}
    arms, actions = agent.predict([0, 1, 2])
    assert all(tuple(a) in V for a in actions)
    assert set(arms) <= {0, 1, 2, 3}


def test_first_step_records_nothing(spec_1a):
    agent = HiddenMarkovUCRL(random_state=0).reset(spec_1a.knowledge())
    env = HiddenMarkovBanditEnv(spec_1a, seed=0)
    arm, a = agent.act()
    agent.observe(env.step(arm, a)[0])
    assert agent.counts_.n_state.sum() == 0
    arm, a = agent.act()
    agent.observe(env.step(arm, a)[0])
    assert agent.counts_.n_state.sum() == 1


def test_action_within_schedule_radius(spec_1a):
    agent = HiddenMarkovUCRL(random_state=0, min_radius=0.0).reset(spec_1a.knowledge())
    env = HiddenMarkovBanditEnv(spec_1a, seed=0)
    for t in range(1, 200):
        arm, a = agent.act()
        planned = agent.policy_.actions[agent.s_prev_]
        assert np.linalg.norm(a - planned) <= agent.schedule_.at(t) * (1 + 1e-12)
        agent.observe(env.step(arm, a)[0])


def test_actions_differ_between_draws(spec_1a):
    agent = HiddenMarkovUCRL(random_state=0).reset(spec_1a.knowledge())
    _, a1 = agent.act()
    agent._pending = None
    _, a2 = agent.act()
    assert not np.array_equal(a1, a2)


def test_observe_without_act(spec_1a):
    agent = HiddenMarkovUCRL().reset(spec_1a.knowledge())
    with pytest.raises(ContractViolation):
        agent.observe(1.0)


def test_bad_alpha_rejected_at_reset(spec_1a):
    with pytest.raises(ConfigurationError, match="alpha > 3"):
        HiddenMarkovUCRL(alpha=2.0).reset(spec_1a.knowledge())


def test_estimator_params_round_trip():
    agent = HiddenMarkovUCRL(alpha=3.5, gamma=2.0)
    params = agent.get_params()
    assert params["alpha"] == 3.5 and params["gamma"] == 2.0
    assert HiddenMarkovUCRL(**params).get_params() == params
