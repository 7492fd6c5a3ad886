"""Weighted composition operators on large weighted Bergman spaces."""

from .errors import (AccuracyError, BlabError, ConfigurationError, DomainError,
                     InapplicableError, NotSelfMapError, ResolutionError, TruncationError)
from .kernel import KernelTable, build_kernel_table, kernel_eval, normalized_kernel
from .numerics import DiskQuadrature, build_quadrature, hermitian_eigenvalues, log_moments
from .operators import (DiscreteMeasure, classify, pullback_measure, schatten_criterion,
                        schatten_norm)
from .symbols import MapSpec, MultiplierSpec, angular_derivative
from .weights import WeightSpec, check_class_W, m_tau

__version__ = "0.1.0"

__all__ = [
    "AccuracyError", "BlabError", "ConfigurationError", "DomainError", "InapplicableError",
    "NotSelfMapError", "ResolutionError", "TruncationError", "KernelTable",
    "build_kernel_table", "kernel_eval", "normalized_kernel", "DiskQuadrature",
    "build_quadrature", "hermitian_eigenvalues", "log_moments", "DiscreteMeasure", "classify",
    "pullback_measure", "schatten_criterion", "schatten_norm", "MapSpec", "MultiplierSpec",
    "angular_derivative", "WeightSpec", "check_class_W", "m_tau",
]
