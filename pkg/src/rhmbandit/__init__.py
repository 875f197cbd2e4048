"""Learning in restless hidden Markov bandits with linear rewards."""
from .agents import FlatUCRL, HiddenMarkovUCRL, JointConfidenceUCRL
from .env import EnvironmentSpec, HiddenMarkovBanditEnv, ModelKnowledge
from .geometry import Hypercube, PerturbationSchedule, VertexPolytope

__version__ = "0.1.0"

__all__ = [
    "EnvironmentSpec",
    "FlatUCRL",
    "HiddenMarkovBanditEnv",
    "HiddenMarkovUCRL",
    "Hypercube",
    "JointConfidenceUCRL",
    "ModelKnowledge",
    "PerturbationSchedule",
    "VertexPolytope",
]
