"""Input validation helpers shared by the model, the learners and the harness."""
from __future__ import annotations

import numbers

import numpy as np

from .exceptions import ConfigurationError, ModelError

PROB_TOL = 1e-12
THETA_TOL = 1e-9
TIE_TOL = 1e-12


def check_random_state(seed) -> np.random.Generator:
    """Turn ``seed`` into a :class:`numpy.random.Generator`.

    ``None`` gives fresh OS entropy, an int or a ``SeedSequence`` seeds a new
    PCG64 generator and an existing generator is passed through untouched.
    """
    if seed is None or isinstance(seed, (numbers.Integral, np.random.SeedSequence)):
        return np.random.default_rng(seed)
    if isinstance(seed, np.random.Generator):
        return seed
    raise ConfigurationError(f"cannot build a random generator from {seed!r}")


def check_probability_vector(p, name="probabilities", tol=PROB_TOL) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 1 or p.size == 0:
        raise ModelError(f"{name} must be a non-empty 1-d array, got shape {p.shape}")
    if not np.all(np.isfinite(p)) or np.any(p < 0) or np.any(p > 1):
        raise ModelError(f"{name} entries must lie in [0, 1]")
    if abs(p.sum() - 1.0) > tol:
        raise ModelError(f"{name} must sum to 1 (sum={p.sum()!r})")
    return p


def is_primitive(adjacency) -> bool:
    """True if the non-negative matrix is irreducible and aperiodic.

    Uses repeated boolean squaring until the exponent reaches ``n**2``, which
    exceeds Wielandt's bound ``(n-1)**2 + 1``.
    """
    a = (np.asarray(adjacency) > 0).astype(np.int64)
    n = a.shape[0]
    power = a.copy()
    exponent = 1
    while exponent < n * n:
        power = np.minimum(power @ power, 1)
        exponent *= 2
    # A primitive matrix keeps all entries positive for every larger power.
    return bool(np.all(power > 0))


def check_transition_matrix(P, tol=PROB_TOL) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    if P.ndim != 2 or P.shape[0] != P.shape[1] or P.shape[0] == 0:
        raise ModelError(f"transition matrix must be square, got shape {P.shape}")
    if not np.all(np.isfinite(P)) or np.any(P < 0) or np.any(P > 1):
        raise ModelError("transition matrix entries must lie in [0, 1]")
    row_err = np.abs(P.sum(axis=1) - 1.0)
    if np.any(row_err > tol):
        bad = int(np.argmax(row_err))
        raise ModelError(f"transition matrix row {bad} sums to {P[bad].sum()!r}, not 1")
    if not is_primitive(P):
        raise ModelError("transition matrix must be irreducible and aperiodic")
    return P


def check_index(value, size, name) -> int:
    if isinstance(value, (bool, np.bool_)) or not isinstance(value, numbers.Integral):
        raise ConfigurationError(f"{name} must be an integer, got {value!r}")
    if not 0 <= int(value) < size:
        raise ConfigurationError(f"{name}={value} out of range [0, {size})")
    return int(value)


def check_alpha(alpha) -> float:
    alpha = float(alpha)
    if not alpha > 3:
        raise ConfigurationError(f"confidence alpha must satisfy alpha > 3 (got {alpha})")
    return alpha


def argmax_first(values, tol=TIE_TOL):
    """Index of the first entry within ``tol`` of the maximum, plus the tie mask."""
    values = np.asarray(values, dtype=float)
    best = values.max()
    ties = values >= best - tol
    return int(np.argmax(ties)), ties
