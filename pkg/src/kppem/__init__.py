"""Penalized mixture-of-regressions fitting by space-alternating Kullback-proximal iterations."""

from .data import SimSpec, baseball_like, load_csv, simulate, standardize, write_csv
from .diagnostics import audit_trace, compare_runs, kkt_residual
from .errors import KPPError
from .model import Dataset, MixtureParams, log_likelihood, responsibilities
from .penalty import PenaltySpec, scad_prox
from .solver import Constant, GeometricDecay, InitStrategy, SolverConfig, fit

__all__ = [
    "Constant", "Dataset", "GeometricDecay", "InitStrategy", "KPPError", "MixtureParams",
    "PenaltySpec", "SimSpec", "SolverConfig", "audit_trace", "baseball_like", "compare_runs",
    "fit", "kkt_residual", "load_csv", "log_likelihood", "responsibilities", "scad_prox",
    "simulate", "standardize", "write_csv",
]
