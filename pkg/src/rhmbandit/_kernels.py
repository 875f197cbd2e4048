"""Compiled per-step primitives.

Everything that runs once per time step lives here so that the interactive
``act``/``observe`` path and the batch simulation loop execute the very same
machine code and consume random streams identically.
"""
import math

import numpy as np
from numba import njit

BOX = 0
HULL = 1

DIAG_RESIDUAL = 1
DIAG_AMBIGUOUS = 2


# --------------------------------------------------------------------------
# geometry


@njit(cache=True)
def inside(x, H, h):
    for i in range(H.shape[0]):
        acc = 0.0
        for j in range(x.shape[0]):
            acc += H[i, j] * x[j]
        if acc > h[i]:
            return False
    return True


@njit(cache=True)
def perturb(a_star, radius, H, h, mode, lower, upper, verts, max_attempts, rng, out):
    """Fill ``out`` with a random point of B(a_star, radius) ∩ A.

    Returns the number of rejection attempts used, negated when the rejection
    stage was exhausted and the interior-segment fallback produced the point.
    """
    n = a_star.shape[0]
    if H.shape[0] > 0:
        for attempt in range(max_attempts):
            norm = 0.0
            for j in range(n):
                out[j] = rng.standard_normal()
                norm += out[j] * out[j]
            norm = math.sqrt(norm)
            scale = radius * rng.random() ** (1.0 / n) / norm
            for j in range(n):
                out[j] = a_star[j] + scale * out[j]
            if inside(out, H, h):
                return attempt + 1
    # fallback: a random interior point q, then a random point of the
    # segment from a_star towards q that stays inside the ball
    if mode == BOX:
        for j in range(n):
            out[j] = lower[j] + rng.random() * (upper[j] - lower[j])
    else:
        total = 0.0
        for j in range(n):
            out[j] = 0.0
        for v in range(verts.shape[0]):
            w = rng.standard_exponential()
            total += w
            for j in range(n):
                out[j] += w * verts[v, j]
        for j in range(n):
            out[j] /= total
    dist = 0.0
    for j in range(n):
        dist += (out[j] - a_star[j]) ** 2
    dist = math.sqrt(dist)
    lam_max = 1.0 if dist <= radius else radius / dist
    lam = lam_max * rng.random()
    for j in range(n):
        out[j] = a_star[j] + lam * (out[j] - a_star[j])
    return -max_attempts


@njit(cache=True)
def dot(a, theta):
    acc = 0.0
    for j in range(a.shape[0]):
        acc += a[j] * theta[j]
    return acc


# --------------------------------------------------------------------------
# environment


@njit(cache=True)
def env_step(trans_cdf, theta_cdf, thetas, env_state, trans_rng, theta_rng, arm, action):
    """Advance the hidden chain, draw θ at the arrived state, return the reward.

    ``env_state[0]`` holds the current hidden state and is updated in place.
    Returns ``(reward, new_state, theta_index)``.
    """
    u = trans_rng.random()
    s_new = np.searchsorted(trans_cdf[env_state[0]], u, side="right")
    v = theta_rng.random()
    k = np.searchsorted(theta_cdf[arm, s_new], v, side="right")
    env_state[0] = s_new
    return dot(action, thetas[arm, s_new, k]), s_new, k


# --------------------------------------------------------------------------
# state recovery


@njit(cache=True)
def recover(reward, action, cand_theta, n_cand, amb_tol):
    """Match ``reward`` against ⟨action, θ⟩ for every candidate θ of one arm.

    Returns ``(best, diagnostic)`` where ``diagnostic`` is 0, or a bit mask of
    DIAG_RESIDUAL (best residual above 1e-6) and DIAG_AMBIGUOUS (runner-up
    residual within ``amb_tol`` of the best).
    """
    best = -1
    best_res = np.inf
    second = np.inf
    scale = 0.0
    for c in range(n_cand):
        res = abs(reward - dot(action, cand_theta[c]))
        if res < best_res:
            second = best_res
            best_res = res
            best = c
        elif res < second:
            second = res
    for j in range(action.shape[0]):
        m = 0.0
        for c in range(n_cand):
            m = max(m, abs(cand_theta[c, j]))
        scale += abs(action[j]) * m
    diag = 0
    if best_res > 1e-6:
        diag |= DIAG_RESIDUAL
    if second - best_res <= amb_tol * max(scale, 1.0):
        diag |= DIAG_AMBIGUOUS
    return best, diag


# --------------------------------------------------------------------------
# confidence widths and count updates


@njit(cache=True)
def confidence_width(t, alpha, card, n):
    """min{1, sqrt(log(4 (t-1)^alpha card) / (2 n))}, equal to 1 when t <= 1 or n == 0."""
    if t <= 1 or n <= 0:
        return 1.0
    arg = 4.0 * (t - 1.0) ** alpha * card
    width = math.sqrt(math.log(arg) / (2.0 * n))
    return 1.0 if width > 1.0 else width


@njit(cache=True)
def record_counts(n_state, n_trans, n_arm_state, n_theta, s_prev, s_next, arm, theta_index):
    n_state[s_prev] += 1
    n_trans[s_prev, s_next] += 1
    n_arm_state[arm, s_next] += 1
    n_theta[arm, s_next, theta_index] += 1


@njit(cache=True)
def hucrl_record(st, t, s_prev, s_hat, arm, vertex, theta_local, reward):
    n_state, n_trans, n_arm_state, n_theta, theta_sizes, snap_s, snap_theta, alpha = st
    if t < 1:
        return False
    record_counts(n_state, n_trans, n_arm_state, n_theta, s_prev, s_hat, arm, theta_local)
    n_s = n_state.shape[0]
    n_b = n_arm_state.shape[0]
    tn = t + 1.0
    if confidence_width(tn, alpha, n_s * n_s, n_state[s_prev]) <= 0.5 * snap_s[s_prev]:
        return True
    card = theta_sizes[arm, s_hat] * n_b * n_s
    if confidence_width(tn, alpha, card, n_arm_state[arm, s_hat]) <= 0.5 * snap_theta[arm, s_hat]:
        return True
    return False


@njit(cache=True)
def joint_record(st, t, s_prev, s_hat, arm, vertex, theta_local, reward):
    n_joint, n_sb, joint_card, snap, alpha = st
    if t < 1:
        return False
    n_joint[s_prev, arm, s_hat, theta_local] += 1
    n_sb[s_prev, arm] += 1
    width = confidence_width(t + 1.0, alpha, joint_card[arm], n_sb[s_prev, arm])
    return width <= 0.5 * snap[s_prev, arm]


@njit(cache=True)
def flat_record(st, t, s_prev, s_hat, arm, vertex, theta_local, reward):
    n_sba, n_sbas, n_bas, r_bas, snap_p, snap_r, card_p, card_r, r_lo, r_span, alpha = st
    if t < 1:
        return False
    n_sba[s_prev, arm, vertex] += 1
    n_sbas[s_prev, arm, vertex, s_hat] += 1
    n_bas[arm, vertex, s_hat] += 1
    r_bas[arm, vertex, s_hat] += (reward - r_lo) / r_span
    tn = t + 1.0
    if confidence_width(tn, alpha, card_p, n_sba[s_prev, arm, vertex]) <= 0.5 * snap_p[s_prev, arm, vertex]:
        return True
    return confidence_width(tn, alpha, card_r, n_bas[arm, vertex, s_hat]) <= 0.5 * snap_r[arm, vertex, s_hat]


# --------------------------------------------------------------------------
# learner step pieces


@njit(cache=True)
def perturbation_radius(t, epsilon, alpha_eps, gamma, theta_norm_max, min_radius):
    r = epsilon / (gamma * t ** alpha_eps * theta_norm_max)
    return r if r > min_radius else min_radius


@njit(cache=True)
def agent_observe(reward, arm, vertex, action, cand_theta, cand_state, cand_local, n_cand,
                  amb_tol, s_prev, t, record, st):
    best, diag = recover(reward, action, cand_theta[arm], n_cand[arm], amb_tol)
    s_hat = cand_state[arm, best]
    ended = record(st, t, s_prev, s_hat, arm, vertex, cand_local[arm, best], reward)
    return s_hat, best, diag, ended


@njit(cache=True)
def run_steps(
    # environment
    trans_cdf, theta_cdf, thetas, env_state, trans_rng, theta_rng,
    # learner
    verts, policy_arm, policy_vertex, cand_theta, cand_state, cand_local, n_cand,
    H, h, mode, lower, upper, sched, max_attempts, amb_tol, agent_rng, s_prev,
    record, st,
    # loop control and logs (indexed by absolute step t)
    t, t_end, rewards, true_states, rec_states, diags, arms,
):
    """Run interaction steps until a round ends or ``t_end`` is reached.

    The environment and the learner only meet through the scalar reward; the
    true state returned by ``env_step`` is written to the logs and nowhere else.
    Returns ``(t, s_prev, round_ended)``.
    """
    n = verts.shape[1]
    action = np.empty(n)
    epsilon, alpha_eps, gamma, theta_norm_max, min_radius = sched
    while t < t_end:
        arm = policy_arm[s_prev]
        vertex = policy_vertex[s_prev]
        radius = perturbation_radius(t + 1.0, epsilon, alpha_eps, gamma, theta_norm_max, min_radius)
        perturb(verts[vertex], radius, H, h, mode, lower, upper, verts, max_attempts, agent_rng, action)

        reward, s_true, _ = env_step(trans_cdf, theta_cdf, thetas, env_state, trans_rng, theta_rng, arm, action)

        s_hat, _, diag, ended = agent_observe(reward, arm, vertex, action, cand_theta, cand_state,
                                              cand_local, n_cand, amb_tol, s_prev, t, record, st)
        rewards[t] = reward
        true_states[t] = s_true
        rec_states[t] = s_hat
        diags[t] = diag
        arms[t] = arm
        s_prev = s_hat
        t += 1
        if ended:
            return t, s_prev, True
    return t, s_prev, False


@njit(cache=True)
def run_known_state(trans_cdf, theta_cdf, thetas, env_state, trans_rng, theta_rng,
                    policy_arm, policy_action, t, t_end, rewards, true_states):
    """Play a fixed policy of the true previous state, without perturbation."""
    while t < t_end:
        s = env_state[0]
        reward, s_true, _ = env_step(trans_cdf, theta_cdf, thetas, env_state, trans_rng, theta_rng,
                                     policy_arm[s], policy_action[s])
        rewards[t] = reward
        true_states[t] = s_true
        t += 1
    return t
