"""Sparse GLM solvers with extrapolated dual certificates.

Coordinate descent, proximal gradient and block coordinate descent for the
Lasso, l1 logistic regression and the multitask Lasso; Gap Safe screening;
a working-set outer loop; a prox-Newton inner solver; and a path benchmark.
"""

from .celer import CelerParams, WorkingSet, celer_solve, create_working_set, feature_scores
from .datafit import (DualCertificate, ModelKind, dual_objective, duality_gap,
                      grad_F, lambda_max, null_value, primal_value, rescale_dual)
from .dataset import (Dataset, DesignMatrix, LibsvmParseError, load_libsvm,
                      normalize_columns, parse_libsvm, prune_rare_features,
                      synth_gaussian)
from .extrapolation import ResidualBuffer, best_dual, extrapolate
from .pathbench import PathConfig, PathResult, emit_report, run_path, trace_gaps
from .proxnewton import PNParams, backtracking, newton_direction, pn_solve
from .solvers import ActiveSet, SolveReport, SolverParams, gap_safe_screen, solve

__all__ = [
    "ActiveSet", "CelerParams", "Dataset", "DesignMatrix", "DualCertificate",
    "LibsvmParseError", "ModelKind", "PNParams", "PathConfig", "PathResult",
    "ResidualBuffer", "SolveReport", "SolverParams", "WorkingSet", "backtracking",
    "best_dual", "celer_solve", "create_working_set", "dual_objective", "duality_gap",
    "emit_report", "extrapolate", "feature_scores", "gap_safe_screen", "grad_F",
    "lambda_max", "load_libsvm", "newton_direction", "normalize_columns",
    "null_value", "parse_libsvm", "pn_solve", "primal_value", "prune_rare_features",
    "rescale_dual", "run_path", "solve", "synth_gaussian", "trace_gaps",
]

__version__ = "0.1.0"
