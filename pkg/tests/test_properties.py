import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from rhmbandit._kernels import recover
from rhmbandit.agents.optimism import optimistic_batch
from rhmbandit.geometry import Hypercube, sample_perturbed_action
from rhmbandit.oracle import regret_trace
from rhmbandit.reference import brute_force_optimistic
from rhmbandit.validation import is_primitive

probs = st.lists(st.floats(0.0, 1.0), min_size=1, max_size=5).filter(lambda x: sum(x) > 1e-3)


@given(probs, st.floats(0.0, 1.0), st.data())
@settings(max_examples=300, deadline=None)
def test_optimistic_lp_is_feasible_and_optimal(weights, width, data):
    c = np.array(weights) / sum(weights)
    vals = np.array(data.draw(st.lists(st.integers(-5, 5), min_size=len(c), max_size=len(c))),
                    dtype=float)
    p, v = optimistic_batch(c, width, vals)
    assert abs(p.sum() - 1) < 1e-12
    assert np.all(p >= 0) and np.all(np.abs(p - c) <= width + 1e-12)
    assert abs(v - brute_force_optimistic(c, width, vals)[1]) < 1e-10
    # never below the plug-in value
    assert v >= c @ vals - 1e-12


@given(st.integers(0, 2**31), st.integers(1, 6), st.integers(2, 8))
@settings(max_examples=200, deadline=None)
def test_recovery_with_perturbed_vertex(seed, dim, k):
    """Distinct integer θ are told apart from ⟨a, θ⟩ at a perturbed cube vertex."""
    rng = np.random.default_rng(seed)
    thetas = np.unique(rng.integers(-10, 16, size=(k, dim)), axis=0).astype(float)
    cube = Hypercube.unit(dim)
    vertex = rng.integers(0, 2, size=dim).astype(float)
    a = sample_perturbed_action(cube, vertex, 1e-6, rng)
    truth = int(rng.integers(len(thetas)))
    best, diag = recover(float(a @ thetas[truth]), a, thetas, len(thetas), 1e-14)
    assert best == truth and diag == 0


@given(st.integers(1, 6), st.integers(0, 2**31))
@settings(max_examples=100, deadline=None)
def test_positive_matrices_are_primitive(n, seed):
    P = np.random.default_rng(seed).random((n, n)) + 0.01
    assert is_primitive(P > 0)


def test_permutation_is_not_primitive():
    assert not is_primitive(np.array([[0, 1], [1, 0]]) > 0)


@given(st.lists(st.floats(-50, 50), min_size=1, max_size=200), st.floats(-10, 10))
@settings(max_examples=100, deadline=None)
def test_regret_trace_consistency(rewards, rho):
    tr = regret_trace(rewards, rho)
    np.testing.assert_allclose(tr.regret + tr.reward, tr.t * rho, atol=1e-9)
    assert list(tr.t) == list(range(1, len(rewards) + 1))
