"""Performability evaluation of head-node/computing-node clusters with failures and repairs."""
from .approx import initial_field
from .des import SimConfig, simulate
from .model import Metrics, ProbabilityField, Semantics, StateIndex, SystemParams, metrics_from, validate_params
from .oracle import build_generator, solve_exact, stationary
from .solver import SolverConfig, solve

__all__ = [
    "Metrics", "ProbabilityField", "Semantics", "SimConfig", "SolverConfig", "StateIndex",
    "SystemParams", "build_generator", "initial_field", "metrics_from", "simulate", "solve",
    "solve_exact", "stationary", "validate_params",
]
