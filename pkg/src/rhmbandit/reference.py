"""Slow brute-force references used by the self-test and the test-suite.

They share no code with the fast paths they check.
"""
from __future__ import annotations

import itertools

import numpy as np


def box_simplex_corners(center, half_width):
    """All vertices of {l <= p <= u, Σp = 1} with l, u the clipped box around ``center``.

    A vertex has at least n - 1 coordinates at a bound; the remaining one is
    fixed by the sum constraint.
    """
    center = np.asarray(center, dtype=float)
    lo = np.clip(center - half_width, 0.0, 1.0)
    hi = np.clip(center + half_width, 0.0, 1.0)
    n = center.size
    if n == 1:
        return np.ones((1, 1))
    corners = []
    for free in range(n):
        others = [i for i in range(n) if i != free]
        for bits in itertools.product((0, 1), repeat=n - 1):
            p = np.empty(n)
            for i, bit in zip(others, bits):
                p[i] = hi[i] if bit else lo[i]
            p[free] = 1.0 - p[others].sum()
            if lo[free] - 1e-12 <= p[free] <= hi[free] + 1e-12:
                corners.append(p)
    return np.array(corners)


def brute_force_optimistic(center, half_width, values):
    """max over the box-simplex corners of Σ p_i values_i, as ``(p, value)``."""
    corners = box_simplex_corners(center, half_width)
    scores = corners @ np.asarray(values, dtype=float)
    i = int(np.argmax(scores))
    return corners[i], float(scores[i])


def brute_force_policy_values(P_hat, theta_hat, conf_theta, thetas, vertices):
    """values[s̃, b, v] by enumerating every (arm, vertex) and every box corner per (b, š).

    ``theta_hat[b][s]`` is the empirical θ distribution, ``conf_theta[b, s]``
    its width and ``thetas[b][s]`` the (k, N) θ array.
    """
    S = P_hat.shape[0]
    B = len(thetas)
    V = np.asarray(vertices, dtype=float)
    out = np.zeros((S, B, len(V)))
    for b in range(B):
        for vi, v in enumerate(V):
            inner = np.array([
                max(c @ (thetas[b][s] @ v) for c in box_simplex_corners(theta_hat[b][s], conf_theta[b, s]))
                for s in range(S)
            ])
            out[:, b, vi] = P_hat @ inner
    return out
