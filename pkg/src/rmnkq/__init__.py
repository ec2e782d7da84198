"""RMNK landscapes, Pauli-Z cost Hamiltonians, an exact QAOA-style simulator and
QMOO with Pareto archiving and dominated-solution substitution, plus NSGA-II/III
baselines and exhaustive ground-truth analysis."""

from .analysis import ExactFront, bitflip_components, connectivity_sweep, exact_front, normalize_trace
from .errors import (
    ConfigurationError,
    FormatError,
    InputError,
    ResourceError,
    RmnkError,
    UndefinedCorrelationError,
    VersionError,
)
from .evolutionary import GaConfig, crowding_distance, das_dennis, fast_nondominated_sort, nsga2_run, nsga3_run
from .landscape import RmnkConfig, RmnkLandscape, evaluate, evaluate_all, generate, load, measured_correlation, save
from .pareto import ParetoArchive, dominates, hypervolume, non_dominated_filter, reference_point
from .pauli_map import PauliZSum, PauliZTerm, build_hamiltonian, component_coefficients, diagonal
from .qmoo import QmooHyperparams, optimize, substitute_candidates
from .quantum import AnsatzParams, ShotCounts, run_ansatz, sample, top_candidates
from .trace import RunTrace, read_trace

__version__ = "0.1.0"

__all__ = [
    "AnsatzParams",
    "ConfigurationError",
    "ExactFront",
    "FormatError",
    "GaConfig",
    "InputError",
    "ParetoArchive",
    "PauliZSum",
    "PauliZTerm",
    "QmooHyperparams",
    "ResourceError",
    "RmnkConfig",
    "RmnkError",
    "RmnkLandscape",
    "RunTrace",
    "ShotCounts",
    "UndefinedCorrelationError",
    "VersionError",
    "bitflip_components",
    "build_hamiltonian",
    "component_coefficients",
    "connectivity_sweep",
    "crowding_distance",
    "das_dennis",
    "diagonal",
    "dominates",
    "evaluate",
    "evaluate_all",
    "exact_front",
    "fast_nondominated_sort",
    "generate",
    "hypervolume",
    "load",
    "measured_correlation",
    "non_dominated_filter",
    "normalize_trace",
    "nsga2_run",
    "nsga3_run",
    "optimize",
    "read_trace",
    "reference_point",
    "run_ansatz",
    "sample",
    "save",
    "substitute_candidates",
    "top_candidates",
]
