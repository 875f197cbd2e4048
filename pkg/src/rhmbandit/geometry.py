"""Polytope action sets, linear maximization and perturbed-action sampling."""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from scipy.optimize import linprog
from scipy.spatial import ConvexHull, QhullError

from . import _kernels
from .exceptions import ConfigurationError, ContractViolation
from .validation import THETA_TOL, TIE_TOL

MAX_ENUM_DIM = 25
MAX_EXTREME_CHECK = 64
DEFAULT_ATTEMPTS = 64


class Polytope:
    """Compact convex action set in vertex representation."""

    dim: int

    @property
    def vertices(self) -> np.ndarray:
        raise NotImplementedError

    def argmax_linear(self, c):
        raise NotImplementedError

    def contains(self, x, tol=THETA_TOL) -> bool:
        raise NotImplementedError

    def _kernel_geometry(self):
        """(H, h, mode, lower, upper, verts) as consumed by ``_kernels.perturb``."""
        raise NotImplementedError

    def to_dict(self) -> dict:
        raise NotImplementedError


class Hypercube(Polytope):
    """Axis-aligned box ``lower <= x <= upper``."""

    def __init__(self, lower, upper):
        lower = np.atleast_1d(np.asarray(lower, dtype=float))
        upper = np.atleast_1d(np.asarray(upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape:
            raise ConfigurationError("hypercube bounds must be 1-d arrays of equal length")
        if not np.all(lower < upper):
            raise ConfigurationError("hypercube bounds need lower < upper in every coordinate")
        self.lower = lower
        self.upper = upper
        self.dim = lower.size

    @classmethod
    def unit(cls, dim):
        return cls(np.zeros(dim), np.ones(dim))

    @cached_property
    def vertices(self):
        if self.dim > MAX_ENUM_DIM:
            raise ConfigurationError(
                f"refusing to enumerate 2^{self.dim} hypercube vertices; use argmax_linear"
            )
        corners = itertools.product(*zip(self.lower, self.upper))
        return np.array(list(corners), dtype=float).reshape(-1, self.dim)

    def argmax_linear(self, c):
        c = np.asarray(c, dtype=float)
        v = np.where(c > 0, self.upper, self.lower)
        return v, float(v @ c)

    def contains(self, x, tol=THETA_TOL):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def _kernel_geometry(self):
        eye = np.eye(self.dim)
        H = np.vstack([eye, -eye])
        h = np.concatenate([self.upper, -self.lower])
        return H, h, _kernels.BOX, self.lower, self.upper, np.zeros((0, self.dim))

    def to_dict(self):
        return {"type": "hypercube", "lower": self.lower.tolist(), "upper": self.upper.tolist()}

    def __repr__(self):
        return f"Hypercube(lower={self.lower.tolist()}, upper={self.upper.tolist()})"


class VertexPolytope(Polytope):
    """Convex hull of an explicit list of extreme points."""

    def __init__(self, points, validate=True):
        points = np.asarray(points, dtype=float)
        if points.ndim != 2 or points.shape[0] == 0:
            raise ConfigurationError("vertex list must be a non-empty 2-d array")
        diff = np.abs(points[:, None, :] - points[None, :, :]).max(axis=-1)
        np.fill_diagonal(diff, np.inf)
        if np.any(diff <= THETA_TOL):
            raise ConfigurationError("vertex list contains duplicate points")
        self.points = points
        self.dim = points.shape[1]
        if validate and len(points) <= MAX_EXTREME_CHECK:
            for i in range(len(points)):
                others = np.delete(points, i, axis=0)
                if len(others) and _in_hull(others, points[i], 0.0):
                    raise ConfigurationError(f"point {i} is not an extreme point of the hull")

    @property
    def vertices(self):
        return self.points

    def argmax_linear(self, c):
        c = np.asarray(c, dtype=float)
        values = self.points @ c
        ties = np.flatnonzero(values >= values.max() - TIE_TOL)
        order = np.lexsort(self.points[ties].T[::-1])
        best = ties[order[0]]
        return self.points[best].copy(), float(values[best])

    def contains(self, x, tol=THETA_TOL):
        return _in_hull(self.points, np.asarray(x, dtype=float), tol)

    @cached_property
    def _halfspaces(self):
        n = self.dim
        if n == 1:
            lo, hi = self.points.min(), self.points.max()
            return np.array([[1.0], [-1.0]]), np.array([hi, -lo])
        try:
            hull = ConvexHull(self.points)
        except (QhullError, ValueError):
            # lower-dimensional set: a ball sample lands inside with probability 0
            return np.zeros((0, n)), np.zeros(0)
        return hull.equations[:, :-1].copy(), -hull.equations[:, -1]

    def _kernel_geometry(self):
        H, h = self._halfspaces
        empty = np.zeros(self.dim)
        return H, h, _kernels.HULL, empty, empty, self.points

    def to_dict(self):
        return {"type": "vertices", "points": self.points.tolist()}

    def __repr__(self):
        return f"VertexPolytope({len(self.points)} points in R^{self.dim})"


def _in_hull(points, x, tol):
    """LP feasibility of x = Σ w_i p_i, w >= 0, Σ w = 1, with slack ``tol`` per coordinate."""
    k, n = points.shape
    if x.shape != (n,):
        raise ContractViolation(f"point has shape {x.shape}, expected ({n},)")
    # variables: w (k), slack s (n) with |P^T w - x| <= s, minimize Σ s
    c = np.concatenate([np.zeros(k), np.ones(n)])
    A_ub = np.block([[points.T, -np.eye(n)], [-points.T, -np.eye(n)]])
    b_ub = np.concatenate([x, -x])
    A_eq = np.concatenate([np.ones(k), np.zeros(n)])[None, :]
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0], bounds=(0, None), method="highs")
    if res.status != 0:
        return False
    return bool(res.x[k:].max(initial=0.0) <= tol + 1e-12)


def polytope_from_dict(d) -> Polytope:
    kind = d.get("type")
    if kind == "hypercube":
        return Hypercube(d["lower"], d["upper"])
    if kind == "vertices":
        return VertexPolytope(d["points"])
    raise ConfigurationError(f"unknown polytope type {kind!r}")


def vertices(p: Polytope) -> np.ndarray:
    return p.vertices


def argmax_linear(p: Polytope, c):
    return p.argmax_linear(c)


def contains(p: Polytope, x, tol=THETA_TOL) -> bool:
    if tol < 0:
        raise ContractViolation("tolerance must be non-negative")
    return p.contains(x, tol)


def sample_perturbed_action(p: Polytope, a_star, radius, rng, max_attempts=DEFAULT_ATTEMPTS,
                            return_attempts=False):
    """Random point of B(a_star, radius) ∩ A with a density on its support.

    Uniform rejection sampling from the ball first; after ``max_attempts``
    misses, a point on the segment from ``a_star`` to a random interior point.
    """
    if not radius > 0:
        raise ContractViolation("radius must be positive")
    a_star = np.asarray(a_star, dtype=float)
    H, h, mode, lower, upper, verts = p._kernel_geometry()
    out = np.empty(p.dim)
    attempts = _kernels.perturb(a_star, float(radius), H, h, mode, lower, upper, verts,
                                int(max_attempts), rng, out)
    if return_attempts:
        return out, attempts
    return out


@dataclass(frozen=True)
class PerturbationSchedule:
    """Radius of the exploration ball around the planned vertex at step ``t``."""

    epsilon: float = 0.5
    alpha_eps: float = 1.5
    gamma: float = 1.0
    theta_norm_max: float = 1.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError("epsilon must be positive")
        if not self.alpha_eps > 1:
            raise ConfigurationError("alpha_eps must exceed 1")
        if not self.gamma > 0:
            raise ConfigurationError("gamma must be positive")
        if not self.theta_norm_max > 0:
            raise ConfigurationError("theta_norm_max must be positive")

    def at(self, t):
        if t < 1:
            raise ContractViolation(f"epsilon schedule is defined for t >= 1 (got {t})")
        return self.epsilon / (self.gamma * t ** self.alpha_eps * self.theta_norm_max)


def epsilon_at(sched: PerturbationSchedule, t) -> float:
    return sched.at(t)
