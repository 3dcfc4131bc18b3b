"""Semantic information G measure: truth functions, R(G), freshness and purposive information."""

from .errors import (
    DegenerateTruthError,
    FitError,
    GMeasureError,
    InfeasibleError,
    NumericalError,
    ParameterError,
    RangeError,
    SupportError,
    ZeroLabelError,
)
from .prob_core import (
    Dist,
    GaussianTruth,
    Grid,
    LogisticTruth,
    SemanticChannel,
    ShannonChannel,
    TableTruth,
    TruthFn,
    eval_truth_family,
    logical_probability,
    semantic_bayes,
    truth_from_likelihood,
)

__version__ = "0.1.0"
