"""Joint measurability of qubit spin observables on single and multi-copy registers."""

from .jointmeas import (
    BUILTIN_POVMS, Configuration, MarginalReport, Povm, UnsupportedConfiguration,
    povm_marginal, prop2_transform, statistics_check, target_marginal, verify_povm,
)
from .observables import ObservableSet, mub, n_sytet, orthogonal_pair, sytet, sytri, theta_family
from .sdp import (
    SolveReport, SolverError, assemble_threshold_sdp, conjecture_scan, index_of_incompatibility,
    reversal_regions, solve, sweep_theta, threshold,
)
from .symspace import prop1_orthogonality_witness

__version__ = "0.1.0"

__all__ = [
    "BUILTIN_POVMS", "Configuration", "MarginalReport", "Povm", "UnsupportedConfiguration",
    "povm_marginal", "prop2_transform", "statistics_check", "target_marginal", "verify_povm",
    "ObservableSet", "mub", "n_sytet", "orthogonal_pair", "sytet", "sytri", "theta_family",
    "SolveReport", "SolverError", "assemble_threshold_sdp", "conjecture_scan",
    "index_of_incompatibility", "reversal_regions", "solve", "sweep_theta", "threshold",
    "prop1_orthogonality_witness",
]
