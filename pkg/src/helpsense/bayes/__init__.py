"""Discrete Bayesian user models and exact inference."""

from .model import (
    CptNode,
    Network,
    NoisyOrNode,
    Posterior,
    ValidationIssue,
    Variable,
    expand_noisy_or,
    most_probable,
    validate,
)
from .infer import infer

__all__ = [
    "CptNode",
    "Network",
    "NoisyOrNode",
    "Posterior",
    "ValidationIssue",
    "Variable",
    "expand_noisy_or",
    "infer",
    "most_probable",
    "validate",
]
