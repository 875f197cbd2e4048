"""The four benchmark setups and random θ-realization sampling."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..env import EnvironmentSpec
from ..exceptions import ConfigurationError
from ..geometry import Hypercube, Polytope

# theta_probs[b][s] with arms and states 0-based
_SETUP_1A = dict(
    transition=[[0.4, 0.6], [0.75, 0.25]],
    theta_probs=[[[0.4, 0.6], [0.7, 0.3]],
                 [[0.7, 0.3], [0.5, 0.5]]],
    grid=(-7, 10), dim=2,
)
_SETUP_1B = dict(
    transition=[[0.8, 0.2], [0.45, 0.55]],
    theta_probs=[[[0.8, 0.2], [0.3, 0.7]],
                 [[0.45, 0.55], [0.4, 0.6]]],
    grid=(-10, 15), dim=2,
)
_SETUP_2A = dict(
    transition=[[0.4, 0.3, 0.3], [0.25, 0.5, 0.25], [0.3, 0.25, 0.45]],
    theta_probs=[[[0.4, 0.6], [0.7, 0.3], [0.75, 0.25]],
                 [[0.7, 0.3], [0.5, 0.5], [0.1, 0.9]],
                 [[0.25, 0.75], [0.2, 0.8], [0.6, 0.4]],
                 [[0.35, 0.65], [0.45, 0.55], [0.32, 0.68]]],
    grid=(-7, 10), dim=5,
)
_SETUP_2B = dict(
    transition=[[0.25, 0.55, 0.2], [0.35, 0.25, 0.4], [0.2, 0.1, 0.7]],
    theta_probs=[[[0.8, 0.2], [0.3, 0.7], [0.4, 0.6]],
                 [[0.45, 0.55], [0.14, 0.86], [0.72, 0.28]],
                 [[0.9, 0.1], [0.76, 0.24], [0.18, 0.82]],
                 [[0.6, 0.4], [0.5, 0.5], [0.53, 0.47]]],
    grid=(-10, 15), dim=5,
)
PRESETS = {"1a": _SETUP_1A, "1b": _SETUP_1B, "2a": _SETUP_2A, "2b": _SETUP_2B}


@dataclass(frozen=True)
class SetupRecipe:
    """Everything about a setup except the θ vectors, which are drawn per realization.

    Each θ is uniform on the integer grid ``{grid_low, ..., grid_high}^N``;
    a family is redrawn whenever it repeats a vector or meets another
    state's family of the same arm.
    """

    transition: np.ndarray
    theta_probs: tuple
    grid_low: int
    grid_high: int
    actions: Polytope
    name: str = "custom"

    @property
    def num_states(self):
        return len(self.transition)

    @property
    def num_arms(self):
        return len(self.theta_probs)

    def sample(self, rng) -> EnvironmentSpec:
        N = self.actions.dim
        thetas = []
        for b in range(self.num_arms):
            used = set()
            row = []
            for s in range(self.num_states):
                k = len(self.theta_probs[b][s])
                while True:
                    th = rng.integers(self.grid_low, self.grid_high + 1, size=(k, N))
                    keys = {tuple(v) for v in th}
                    if len(keys) == k and not keys & used:
                        break
                used |= keys
                row.append(th.astype(float))
            thetas.append(row)
        return EnvironmentSpec(np.asarray(self.transition, dtype=float), thetas,
                               self.theta_probs, self.actions)


def load_preset(name) -> SetupRecipe:
    try:
        p = PRESETS[name]
    except KeyError:
        raise ConfigurationError(
            f"unknown preset {name!r}; choose one of {sorted(PRESETS)}"
        ) from None
    lo, hi = p["grid"]
    return SetupRecipe(
        transition=np.array(p["transition"], dtype=float),
        theta_probs=tuple(tuple(np.array(q, dtype=float) for q in row) for row in p["theta_probs"]),
        grid_low=lo, grid_high=hi,
        actions=Hypercube.unit(p["dim"]),
        name=name,
    )


def random_recipe(num_states, num_arms, dim, thetas_per_set, grid_low, grid_high, rng,
                  transition=None, theta_probs=None) -> SetupRecipe:
    """Recipe with Dirichlet(1) transition rows and θ probabilities unless given."""
    if transition is None:
        transition = rng.dirichlet(np.ones(num_states), size=num_states)
        # keep the chain primitive
        transition = 0.9 * transition + 0.1 / num_states
    if theta_probs is None:
        theta_probs = [[rng.dirichlet(np.ones(thetas_per_set)) for _ in range(num_states)]
                       for _ in range(num_arms)]
    n_grid = (grid_high - grid_low + 1) ** dim
    if n_grid < num_states * thetas_per_set:
        raise ConfigurationError("θ grid too small for disjoint families")
    return SetupRecipe(np.asarray(transition, dtype=float),
                       tuple(tuple(np.asarray(q, dtype=float) for q in row) for row in theta_probs),
                       int(grid_low), int(grid_high), Hypercube.unit(dim))
