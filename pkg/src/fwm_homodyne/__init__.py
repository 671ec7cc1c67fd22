"""Exact degenerate four-wave mixing with number-conserving homodyne criteria."""

__version__ = "0.1.0"

from .criteria import ALL as CRITERIA, CriteriaReport, CriterionResult, evaluate_all
from .dynamics import ModelParams, ReducedState, evolve, evolve_many, fock_start_evolution, mode_populations
from .ensembles import build_distribution, ensemble_moments
from .errors import ContractViolation, DegenerateNormalizationError, ResourceError
from .fock import BeamSplitterSpec, SparseState, apply_beam_splitter, expectation
from .homodyne import MeasuredQuadratureSet, QuadratureMoments, quadrature_moments, split_local_oscillator
from .pump import PumpApproxMoments, pump_criteria_curve, small_time_consistency

__all__ = [
    "__version__", "CRITERIA", "CriteriaReport", "CriterionResult", "evaluate_all",
    "ModelParams", "ReducedState", "evolve", "evolve_many", "fock_start_evolution", "mode_populations",
    "build_distribution", "ensemble_moments",
    "ContractViolation", "DegenerateNormalizationError", "ResourceError",
    "BeamSplitterSpec", "SparseState", "apply_beam_splitter", "expectation",
    "MeasuredQuadratureSet", "QuadratureMoments", "quadrature_moments", "split_local_oscillator",
    "PumpApproxMoments", "pump_criteria_curve", "small_time_consistency",
]
