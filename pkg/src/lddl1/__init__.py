"""Sparse coding and neural-network layers with a log-determinant plus L1
regularizer that pushes basis vectors toward near-orthogonal, weakly
overlapping supports."""

from .errors import (ConvergenceWarning, DimensionMismatch, EmptyCorpus, EmptyTrainingSet,
                     LddError, NotPositiveDefinite, ParseError, TooFewVectors)
from .lasso import SolverOptions, soft_threshold, solve_lasso, solve_lasso_batch
from .overlap import OverlapReport, overlap_score, pairwise_overlap
from .regularizer import ldd_gradient, ldd_value, lddl1_subgradient, lddl1_value
from .sc import ScModel, ScProblem, infer_codes, init_dictionary, objective, solve_w, train

__version__ = "0.1.0"

__all__ = [
    "ConvergenceWarning", "DimensionMismatch", "EmptyCorpus", "EmptyTrainingSet",
    "LddError", "NotPositiveDefinite", "ParseError", "TooFewVectors",
    "SolverOptions", "soft_threshold", "solve_lasso", "solve_lasso_batch",
    "OverlapReport", "overlap_score", "pairwise_overlap",
    "ldd_gradient", "ldd_value", "lddl1_subgradient", "lddl1_value",
    "ScModel", "ScProblem", "infer_codes", "init_dictionary", "objective", "solve_w", "train",
]
