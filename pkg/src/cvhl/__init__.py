"""Continuous-variable homodyne toolkit: OPO squeezing model, homodyne trace
synthesis, pattern-function tomography and phase-space analysis."""

from ._validation import DataQualityError, NumericalError
from .analysis import (
    nonclassical_depth,
    purity,
    quadrature_variance_curve,
    squeezing_db,
    wigner_function,
)
from .gaussian import (
    GaussianState,
    apply_loss,
    build_state,
    gaussian_ncd,
    gaussian_purity,
    quadrature_stats,
)
from .opo import (
    EfficiencyBudget,
    OPOParams,
    effective_output_state,
    electronic_efficiency_from_clearance,
    noise_spectrum,
    total_efficiency,
)
from .phasefit import PhaseModelFitter, fit_phase_model
from .scan import HomodyneTrace, PhaseScanModel, calibrate_shot_noise, phase_at, synthesize_trace
from .tomography import DensityMatrix, PatternFunctionTomography, estimate_density_matrix

__version__ = "0.1.0"

__all__ = [
    "DataQualityError",
    "DensityMatrix",
    "EfficiencyBudget",
    "GaussianState",
    "HomodyneTrace",
    "NumericalError",
    "OPOParams",
    "PatternFunctionTomography",
    "PhaseModelFitter",
    "PhaseScanModel",
    "apply_loss",
    "build_state",
    "calibrate_shot_noise",
    "effective_output_state",
    "electronic_efficiency_from_clearance",
    "estimate_density_matrix",
    "fit_phase_model",
    "gaussian_ncd",
    "gaussian_purity",
    "noise_spectrum",
    "nonclassical_depth",
    "phase_at",
    "purity",
    "quadrature_stats",
    "quadrature_variance_curve",
    "squeezing_db",
    "synthesize_trace",
    "total_efficiency",
    "wigner_function",
]
