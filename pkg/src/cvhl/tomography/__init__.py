"""Pattern-function tomography: oscillator eigenfunctions, kernels and the sampling estimator."""

from .density import DensityMatrix, project_psd
from .estimator import (
    CoverageError,
    PatternFunctionTomography,
    bootstrap_errors,
    estimate_density_matrix,
    integral_oracle,
)
from .hermite import eigenfunction_psi, irregular_phi, wronskian
from .kernels import PatternKernel, build_kernel, pattern_function

__all__ = [
    "CoverageError",
    "DensityMatrix",
    "PatternFunctionTomography",
    "PatternKernel",
    "bootstrap_errors",
    "build_kernel",
    "eigenfunction_psi",
    "estimate_density_matrix",
    "integral_oracle",
    "irregular_phi",
    "pattern_function",
    "project_psd",
    "wronskian",
]
