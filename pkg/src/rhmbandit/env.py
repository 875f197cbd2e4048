"""Ground-truth restless hidden Markov bandit with linear rewards."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .exceptions import ConfigurationError, ContractViolation, ModelError
from .geometry import Polytope, polytope_from_dict
from .validation import (
    THETA_TOL,
    check_index,
    check_probability_vector,
    check_transition_matrix,
)


@dataclass(frozen=True)
class ModelKnowledge:
    """What a learner is told in advance: the state, arm and θ sets and the action polytope.

    Transition probabilities and θ distributions are deliberately absent.
    """

    num_states: int
    num_arms: int
    thetas: tuple  # thetas[b][s] -> (k, N) array
    actions: Polytope

    @property
    def dim(self):
        return self.actions.dim

    @property
    def theta_norm_max(self):
        return max(float(np.abs(th).sum(axis=1).max()) for row in self.thetas for th in row)

    def theta_sizes(self):
        return np.array([[len(th) for th in row] for row in self.thetas], dtype=np.int64)


@dataclass(frozen=True)
class EnvironmentSpec:
    """Transition matrix, θ families with their distributions, and the action polytope.

    ``thetas[b][s]`` is a ``(k, N)`` array of coefficient vectors and
    ``theta_probs[b][s]`` the matching probability vector.
    """

    transition: np.ndarray
    thetas: tuple
    theta_probs: tuple
    actions: Polytope
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        P = check_transition_matrix(self.transition)
        object.__setattr__(self, "transition", P)
        S = P.shape[0]
        N = self.actions.dim
        if len(self.thetas) == 0 or len(self.thetas) != len(self.theta_probs):
            raise ModelError("thetas and theta_probs must list the same, non-zero number of arms")
        thetas, probs = [], []
        for b, (row, prow) in enumerate(zip(self.thetas, self.theta_probs)):
            if len(row) != S or len(prow) != S:
                raise ModelError(f"arm {b} must define a θ family for each of the {S} states")
            trow, qrow = [], []
            for s, (th, p) in enumerate(zip(row, prow)):
                th = np.atleast_2d(np.asarray(th, dtype=float))
                if th.shape[1] != N or th.shape[0] == 0:
                    raise ModelError(f"Θ[{b}][{s}] must be a non-empty (k, {N}) array")
                p = check_probability_vector(p, f"P_Θ[{b}][{s}]")
                if p.size != th.shape[0]:
                    raise ModelError(f"P_Θ[{b}][{s}] has {p.size} entries for {th.shape[0]} vectors")
                if th.shape[0] > 1 and _min_pairwise(th, th, skip_diagonal=True) <= THETA_TOL:
                    raise ModelError(f"Θ[{b}][{s}] contains duplicate vectors")
                th.setflags(write=False)
                p.setflags(write=False)
                trow.append(th)
                qrow.append(p)
            for s1 in range(S):
                for s2 in range(s1 + 1, S):
                    if _min_pairwise(trow[s1], trow[s2]) <= THETA_TOL:
                        raise ModelError(
                            f"θ families of arm {b} for states {s1} and {s2} are not disjoint"
                        )
            thetas.append(tuple(trow))
            probs.append(tuple(qrow))
        object.__setattr__(self, "thetas", tuple(thetas))
        object.__setattr__(self, "theta_probs", tuple(probs))
        P.setflags(write=False)

    @property
    def num_states(self):
        return self.transition.shape[0]

    @property
    def num_arms(self):
        return len(self.thetas)

    @property
    def dim(self):
        return self.actions.dim

    def knowledge(self) -> ModelKnowledge:
        return ModelKnowledge(self.num_states, self.num_arms, self.thetas, self.actions)

    def mean_theta(self):
        """(B, S, N) array of E[θ] under P_Θ for every (arm, state)."""
        return np.array([[p @ th for th, p in zip(row, prow)]
                         for row, prow in zip(self.thetas, self.theta_probs)])

    def _packed(self):
        """Padded arrays for the compiled step: transition CDF, θ CDFs and θ vectors."""
        if "packed" not in self._cache:
            S, B, N = self.num_states, self.num_arms, self.dim
            kmax = max(len(th) for row in self.thetas for th in row)
            trans_cdf = np.cumsum(self.transition, axis=1)
            trans_cdf[:, -1] = 1.0
            theta_cdf = np.ones((B, S, kmax))
            vecs = np.zeros((B, S, kmax, N))
            for b in range(B):
                for s in range(S):
                    k = len(self.thetas[b][s])
                    cdf = np.cumsum(self.theta_probs[b][s])
                    cdf[-1] = 1.0
                    theta_cdf[b, s, :k] = cdf
                    vecs[b, s, :k] = self.thetas[b][s]
            self._cache["packed"] = (trans_cdf, theta_cdf, vecs)
        return self._cache["packed"]

    def to_dict(self) -> dict:
        return {
            "transition": self.transition.tolist(),
            "thetas": [[th.tolist() for th in row] for row in self.thetas],
            "theta_probs": [[p.tolist() for p in row] for row in self.theta_probs],
            "actions": self.actions.to_dict(),
        }

    @classmethod
    def from_dict(cls, d) -> "EnvironmentSpec":
        try:
            return cls(
                transition=np.asarray(d["transition"], dtype=float),
                thetas=d["thetas"],
                theta_probs=d["theta_probs"],
                actions=polytope_from_dict(d["actions"]),
            )
        except KeyError as exc:
            raise ConfigurationError(f"environment spec is missing key {exc.args[0]!r}") from None


def _min_pairwise(x, y, skip_diagonal=False):
    d = np.abs(x[:, None, :] - y[None, :, :]).max(axis=-1)
    if skip_diagonal:
        np.fill_diagonal(d, np.inf)
    return float(d.min())


class HiddenMarkovBanditEnv:
    """Simulator holding the hidden state and the random streams.

    Three independent streams are spawned from ``seed``: the initial state,
    the state transitions and the θ draws. Each step consumes exactly one
    uniform from each of the last two regardless of the arm and action, so
    learners run against the same seed face the same hidden trajectory.
    """

    def __init__(self, spec: EnvironmentSpec, seed=None, initial_state="stationary"):
        self.spec = spec
        if not isinstance(seed, np.random.SeedSequence):
            seed = np.random.SeedSequence(seed)
        init_ss, trans_ss, theta_ss = seed.spawn(3)
        self.trans_rng = np.random.default_rng(trans_ss)
        self.theta_rng = np.random.default_rng(theta_ss)
        if isinstance(initial_state, str):
            if initial_state != "stationary":
                raise ConfigurationError(f"unknown initial state {initial_state!r}")
            from .oracle import stationary_distribution

            mu = stationary_distribution(spec.transition)
            s0 = int(np.random.default_rng(init_ss).choice(spec.num_states, p=mu))
        else:
            s0 = check_index(initial_state, spec.num_states, "initial_state")
        self._state = np.array([s0], dtype=np.int64)
        self.t = 0

    @property
    def state(self) -> int:
        return int(self._state[0])

    @property
    def knowledge(self) -> ModelKnowledge:
        return self.spec.knowledge()

    def step(self, arm, action, check=True):
        """Move to the next hidden state, draw θ there and return ``(reward, state, theta)``.

        The state and θ are returned for truth logging only.
        """
        arm = check_index(arm, self.spec.num_arms, "arm")
        action = np.ascontiguousarray(action, dtype=float)
        if check and not self.spec.actions.contains(action, THETA_TOL):
            raise ContractViolation(f"action {action.tolist()} lies outside the action polytope")
        trans_cdf, theta_cdf, vecs = self.spec._packed()
        reward, s_new, k = _kernels.env_step(trans_cdf, theta_cdf, vecs, self._state,
                                             self.trans_rng, self.theta_rng, arm, action)
        self.t += 1
        return float(reward), int(s_new), vecs[arm, s_new, k].copy()


def env_init(spec, seed, initial_state="stationary") -> HiddenMarkovBanditEnv:
    return HiddenMarkovBanditEnv(spec, seed, initial_state)


def env_step(env: HiddenMarkovBanditEnv, arm, action):
    return env.step(arm, action)
