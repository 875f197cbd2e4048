import numpy as np
import pytest

from rhmbandit.env import EnvironmentSpec, HiddenMarkovBanditEnv, env_init, env_step
from rhmbandit.exceptions import ConfigurationError, ContractViolation, ModelError
from rhmbandit.geometry import Hypercube


def test_spec_validation(tiny_spec):
    P = tiny_spec.transition
    with pytest.raises(ModelError):
        EnvironmentSpec(np.array([[0.5, 0.4], [0.5, 0.5]]), tiny_spec.thetas,
                        tiny_spec.theta_probs, tiny_spec.actions)
    # θ shared between two states of the same arm
    bad = [[[[1.0, 0.0]], [[0.0, 2.0], [1.0, 0.0]]], tiny_spec.thetas[1]]
    with pytest.raises(ModelError, match="disjoint"):
        EnvironmentSpec(P, bad, tiny_spec.theta_probs, tiny_spec.actions)
    with pytest.raises(ModelError, match="duplicate"):
        EnvironmentSpec(P, [[[[1.0, 0.0]], [[0.0, 2.0], [0.0, 2.0]]], tiny_spec.thetas[1]],
                        tiny_spec.theta_probs, tiny_spec.actions)
    # the same θ under two different arms is allowed
    EnvironmentSpec(P, [tiny_spec.thetas[0], [[[1.0, 0.0], [2.0, 2.0]], [[0.0, -1.0]]]],
                    tiny_spec.theta_probs, tiny_spec.actions)
    # reducible chain
    with pytest.raises(ModelError):
        EnvironmentSpec(np.eye(2), tiny_spec.thetas, tiny_spec.theta_probs, tiny_spec.actions)


def test_spec_round_trip(tiny_spec):
    again = EnvironmentSpec.from_dict(tiny_spec.to_dict())
    np.testing.assert_array_equal(again.transition, tiny_spec.transition)
    assert again.to_dict() == tiny_spec.to_dict()
    with pytest.raises(ConfigurationError):
        EnvironmentSpec.from_dict({"transition": [[1.0]]})


def test_reward_is_inner_product(tiny_spec):
    env = env_init(tiny_spec, seed=5, initial_state=0)
    a = np.array([0.3, 0.8])
    for _ in range(200):
        r, s, theta = env_step(env, 1, a)
        assert r == pytest.approx(a @ theta)
        assert any(np.array_equal(theta, th) for th in tiny_spec.thetas[1][s])


def test_action_outside_polytope_rejected(tiny_spec):
    env = HiddenMarkovBanditEnv(tiny_spec, seed=0)
    with pytest.raises(ContractViolation):
        env.step(0, [1.5, 0.0])


def test_state_law_ignores_actions(tiny_spec):
    """Restless: the state path depends on the seed only."""
    a = HiddenMarkovBanditEnv(tiny_spec, seed=11)
    b = HiddenMarkovBanditEnv(tiny_spec, seed=11)
    rng = np.random.default_rng(0)
    for _ in range(500):
        _, sa, _ = a.step(0, [0.0, 0.0])
        _, sb, _ = b.step(int(rng.integers(2)), rng.random(2))
        assert sa == sb


def test_empirical_transition_frequencies(tiny_spec):
    env = HiddenMarkovBanditEnv(tiny_spec, seed=2, initial_state=0)
    n = np.zeros((2, 2))
    prev = env.state
    for _ in range(40_000):
        _, s, _ = env.step(0, [0.5, 0.5], check=False)
        n[prev, s] += 1
        prev = s
    est = n / n.sum(axis=1, keepdims=True)
    np.testing.assert_allclose(est, tiny_spec.transition, atol=0.015)


def test_theta_frequencies(tiny_spec):
    env = HiddenMarkovBanditEnv(tiny_spec, seed=4)
    hits = []
    for _ in range(30_000):
        _, s, theta = env.step(1, [0.5, 0.5], check=False)
        if s == 0:
            hits.append(np.array_equal(theta, [2.0, 2.0]))
    assert np.mean(hits) == pytest.approx(0.75, abs=0.015)


def test_mean_theta_shape(spec_2a):
    assert spec_2a.mean_theta().shape == (4, 3, 5)


def test_unknown_initial_state(tiny_spec):
    with pytest.raises(ConfigurationError):
        HiddenMarkovBanditEnv(tiny_spec, initial_state="uniform")
    with pytest.raises(ConfigurationError):
        HiddenMarkovBanditEnv(tiny_spec, initial_state=7)


def test_knowledge_hides_probabilities(tiny_spec):
    kn = tiny_spec.knowledge()
    assert not hasattr(kn, "transition") and not hasattr(kn, "theta_probs")
    np.testing.assert_array_equal(kn.theta_sizes(), [[1, 2], [2, 1]])
    assert kn.theta_norm_max == 4.0
    assert Hypercube.unit(2).dim == kn.dim
