"""Exact quantities of a known model: stationary law, optimal policy, constants, regret."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve

from .agents.optimism import optimistic_batch
from .exceptions import ModelError
from .validation import TIE_TOL, argmax_first, is_primitive


def stationary_distribution(P) -> np.ndarray:
    """Solve μP = μ, Σμ = 1 with the last balance equation replaced by the normalization."""
    P = np.asarray(P, dtype=float)
    if not is_primitive(P):
        raise ModelError("stationary distribution requires an irreducible, aperiodic chain")
    n = P.shape[0]
    A = P.T - np.eye(n)
    A[-1, :] = 1.0
    b = np.zeros(n)
    b[-1] = 1.0
    mu = solve(A, b)
    # one step of iterative refinement
    mu -= solve(A, A @ mu - b)
    return mu


def power_iteration(P, steps=100) -> np.ndarray:
    """Rows of P^steps; independent cross-check of the stationary law."""
    return np.linalg.matrix_power(np.asarray(P, dtype=float), steps)


def state_action_values(spec, vertices=None, transition=None, theta_probs=None):
    """g[s̃, b, v] = Σ_š P(s̃, š) Σ_θ P_Θ(b, š, θ) ⟨v, θ⟩ over the vertex list.

    ``transition`` and ``theta_probs`` default to the true model and can be
    replaced by estimates.
    """
    V = spec.actions.vertices if vertices is None else vertices
    P = spec.transition if transition is None else transition
    probs = spec.theta_probs if theta_probs is None else theta_probs
    m = np.array([[V @ (p @ th) for th, p in zip(row, prow)]
                  for row, prow in zip(spec.thetas, probs)])  # (B, S, V)
    return np.einsum("ij,bjv->ibv", P, m)


@dataclass
class OptimalPolicy:
    arms: np.ndarray
    actions: np.ndarray
    vertex_indices: np.ndarray
    values: np.ndarray
    tie_sets: list  # per s̃: list of (arm, vertex index) within TIE_TOL of the maximum
    vertices: np.ndarray


def _lex_vertices(spec):
    V = np.asarray(spec.actions.vertices, dtype=float)
    return V[np.lexsort(V.T[::-1])]


def optimal_policy(spec) -> OptimalPolicy:
    """Exhaustive argmax over arms and vertices of the one-step expected reward."""
    V = _lex_vertices(spec)
    g = state_action_values(spec, V)
    S, B, nV = g.shape
    arms = np.empty(S, dtype=np.int64)
    verts = np.empty(S, dtype=np.int64)
    values = np.empty(S)
    ties = []
    for s in range(S):
        idx, mask = argmax_first(g[s].ravel())
        arms[s], verts[s] = divmod(idx, nV)
        values[s] = g[s].ravel()[idx]
        ties.append([divmod(int(i), nV) for i in np.flatnonzero(mask)])
    return OptimalPolicy(arms, V[verts], verts, values, ties, V)


def average_reward(spec, arms, actions) -> float:
    """Long-run average reward of the policy s̃ -> (arms[s̃], actions[s̃])."""
    mu = stationary_distribution(spec.transition)
    actions = np.asarray(actions, dtype=float)
    mean_theta = spec.mean_theta()  # (B, S, N)
    per_state = np.array([spec.transition[s] @ (mean_theta[arms[s]] @ actions[s])
                          for s in range(spec.num_states)])
    return float(mu @ per_state)


def hitting_times(P) -> np.ndarray:
    """E[T_{i→j}]: expected steps to first reach j from i (j ≠ i), and mean return time on the diagonal."""
    P = np.asarray(P, dtype=float)
    n = P.shape[0]
    H = np.empty((n, n))
    for j in range(n):
        A = np.eye(n) - P
        A[j, :] = 0.0
        A[j, j] = 1.0
        rhs = np.ones(n)
        rhs[j] = 0.0
        h = solve(A, rhs)
        H[:, j] = h
        H[j, j] = 1.0 + P[j] @ h
    return H


@dataclass
class ModelConstants:
    T_M: float
    T_S: float
    r_max: float
    C_theta_max: int
    Delta: float | None


def compute_constants(spec, with_delta=True) -> ModelConstants:
    H = hitting_times(spec.transition)
    off = ~np.eye(spec.num_states, dtype=bool)
    T_M = float(H[off].max()) if off.any() else 1.0
    P = spec.transition
    T_S = float(1.0 / P[P > 0].min())
    V = spec.actions.vertices
    all_theta = np.concatenate([th for row in spec.thetas for th in row])
    r = V @ all_theta.T
    r_max = float(r.max() - r.min())
    c_max = max(len(th) for row in spec.thetas for th in row)
    delta = gap_delta(spec) if with_delta else None
    return ModelConstants(max(T_M, 1.0), T_S, r_max, c_max, delta)


# ---------------------------------------------------------------------------
# stability radius of the optimal set


def _worst_case_difference(spec, s_prev, best, other, delta, V):
    """min over estimates within ``delta`` of g(best) - g(other) at previous state s_prev.

    Estimates range over valid distributions with every entry within ``delta``
    of the truth. For a fixed transition row the θ distributions separate per
    next state, and for fixed θ parts the transition row enters linearly, so
    both inner problems are box-simplex LPs solved greedily.
    """
    (b1, v1), (b2, v2) = best, other
    S = spec.num_states
    d = np.empty(S)
    for s in range(S):
        th1, p1 = spec.thetas[b1][s], spec.theta_probs[b1][s]
        th2, p2 = spec.thetas[b2][s], spec.theta_probs[b2][s]
        if b1 == b2:
            # shared distribution: minimize Σ p(θ) ⟨v1 - v2, θ⟩
            _, worst = optimistic_batch(p1, delta, -(th1 @ (V[v1] - V[v2])))
            d[s] = -worst
        else:
            _, lo1 = optimistic_batch(p1, delta, -(th1 @ V[v1]))
            _, hi2 = optimistic_batch(p2, delta, th2 @ V[v2])
            d[s] = -lo1 - hi2
    _, worst = optimistic_batch(spec.transition[s_prev], delta, -d)
    return -float(worst)


def delta_preserves(spec, delta, policy=None) -> bool:
    """True when every estimate within ``delta`` keeps each optimal set unchanged."""
    policy = optimal_policy(spec) if policy is None else policy
    V = policy.vertices
    B, nV = spec.num_arms, len(V)
    for s in range(spec.num_states):
        ties = policy.tie_sets[s]
        if len(ties) > 1:
            return False
        best = ties[0]
        for b in range(B):
            for v in range(nV):
                if (b, v) == best:
                    continue
                if _worst_case_difference(spec, s, best, (b, v), delta, V) <= TIE_TOL:
                    return False
    return True


def gap_delta(spec, tol=1e-10) -> float:
    """Largest δ such that all estimates within δ (entrywise) keep the optimal sets.

    Zero when some previous state already has several optimal (arm, vertex)
    pairs, since arbitrarily small perturbations then split the tie.
    """
    policy = optimal_policy(spec)
    if any(len(t) > 1 for t in policy.tie_sets):
        return 0.0
    lo, hi = 0.0, 1.0
    if delta_preserves(spec, hi, policy):
        return hi
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if delta_preserves(spec, mid, policy):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# regret


@dataclass
class RegretTrace:
    t: np.ndarray
    regret: np.ndarray
    reward: np.ndarray


def regret_trace(rewards, rho_star, checkpoints=None) -> RegretTrace:
    """R(t) = t ρ* - Σ_{τ<=t} r_τ, at every step or at the given 1-based checkpoints."""
    cum = np.cumsum(np.asarray(rewards, dtype=float))
    t = np.arange(1, len(cum) + 1)
    if checkpoints is not None:
        idx = np.asarray(checkpoints, dtype=np.int64) - 1
        t, cum = t[idx], cum[idx]
    return RegretTrace(t, t * rho_star - cum, cum)


def geometric_checkpoints(horizon):
    """1, 2, 4, ... up to ``horizon``, plus ``horizon`` itself."""
    pts = [1 << k for k in range(int(np.log2(horizon)) + 1) if (1 << k) <= horizon]
    if pts[-1] != horizon:
        pts.append(horizon)
    return np.array(pts, dtype=np.int64)
