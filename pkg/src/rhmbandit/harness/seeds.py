"""Counter-based child seeds.

Every random stream of an experiment is keyed by its position in the run
grid, so a run can be reproduced in isolation and its output does not
depend on scheduling order:

* realization ``r``: ``SeedSequence(master, spawn_key=(0, r))`` draws the θ vectors;
* trajectory ``j`` of realization ``r``: ``(1, r, j)`` drives the environment
  and is shared by every agent (paired comparison);
* agent ``a`` on that trajectory: ``(2, r, j, code(a))`` drives its perturbations.

``SeedSequence`` hashes the master entropy together with the spawn key, so
distinct keys give independent, non-colliding streams.
"""
from __future__ import annotations

import numpy as np

AGENT_CODES = {"hucrl": 0, "joint": 1, "flat_ucrl": 2, "oracle_known_state": 3}

_REALIZATION, _TRAJECTORY, _AGENT = 0, 1, 2


def realization_seed(master, r) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(_REALIZATION, r))


def trajectory_seed(master, r, j) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(_TRAJECTORY, r, j))


def agent_seed(master, r, j, agent) -> np.random.SeedSequence:
    return np.random.SeedSequence(master, spawn_key=(_AGENT, r, j, AGENT_CODES[agent]))


def seed_words(ss: np.random.SeedSequence, n=2) -> tuple:
    """Short fingerprint of a child seed, printed when a run fails."""
    return tuple(int(w) for w in ss.generate_state(n, dtype=np.uint32))
