"""Macroscopic Hausdorff dimension of lattice sets: exact and heuristic shell
cover costs, truncated dimension estimates, energy and mass-distribution
certificates, constructive extraction pipelines and projection experiments."""

__version__ = "0.1.0"

from .core import Ball, ShellSet, SparseSet, load_set, shell_of, store_set
from .cover import CoverSolution, beta, cover_verify, nu_exact, nu_greedy, solve
from .dimension import DimEstimate, dimension, estimate_dim, nu_profile, s_grid
from .errors import (BudgetExceeded, CapExceeded, DimensionMismatch, EmptyPipeline, EmptyShell,
                     HypothesisFailed, InsufficientData, MacroDimError, ParseError)
from .measure import AtomicMeasure, energy, mdp_certify, potential

__all__ = [
    "AtomicMeasure", "Ball", "BudgetExceeded", "CapExceeded", "CoverSolution", "DimEstimate",
    "DimensionMismatch", "EmptyPipeline", "EmptyShell", "HypothesisFailed", "InsufficientData",
    "MacroDimError", "ParseError", "ShellSet", "SparseSet", "beta", "cover_verify", "dimension",
    "energy", "estimate_dim", "load_set", "mdp_certify", "nu_exact", "nu_greedy", "nu_profile",
    "potential", "s_grid", "shell_of", "solve", "store_set",
]
