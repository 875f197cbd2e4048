from .base import RecoveringLearner, RoundPolicy
from .baselines import FlatUCRL, JointConfidenceUCRL
from .hucrl import HiddenMarkovUCRL, compute_policy, round_should_end
from .optimism import OptimisticBox, optimistic_batch, optimistic_expectation

LEARNERS = {
    "hucrl": HiddenMarkovUCRL,
    "joint": JointConfidenceUCRL,
    "flat_ucrl": FlatUCRL,
}

__all__ = [
    "FlatUCRL",
    "HiddenMarkovUCRL",
    "JointConfidenceUCRL",
    "LEARNERS",
    "OptimisticBox",
    "RecoveringLearner",
    "RoundPolicy",
    "compute_policy",
    "optimistic_batch",
    "optimistic_expectation",
    "round_should_end",
]
