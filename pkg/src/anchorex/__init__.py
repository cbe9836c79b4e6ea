"""Extrapolation error certificates and anchor-based projection for basis expansions."""

from .bases import (BasisFamily, CoefficientVector, OrthonormalBasis, chebyshev_affine, legendre_affine,
                    orthonormalize_on, real_spherical_harmonics, sine2d)
from .conditioning import CertificationReport, certify, kappa_classical, kappa_r, kappa_spec, symmetric_eigen
from .errors import (AnchorexError, EmptyIntersectionSuspected, NonConvergence, NotOrthogonalOnOmega,
                     NumericalError, SingularGram, ValidationError)
from .feasibility import (Anchor, FeasibleSet, ProjectionResult, create_anchors, improvement_bounds, project_ball,
                          project_intersection)
from .fitting import FitResult, SampleSet, fit, fit_lasso, fit_ls, fit_ridge, synthesize_noisy_samples
from .geometry import Region, build_grid, gram_matrices
from .pchip import PchipSurrogate
from .probabilistic import BetaParams, ProbRadiusReport, beta_quantile, kappa_rho

__version__ = "0.1.0"

__all__ = [
    "Anchor", "AnchorexError", "BasisFamily", "BetaParams", "CertificationReport", "CoefficientVector",
    "EmptyIntersectionSuspected", "FeasibleSet", "FitResult", "NonConvergence", "NotOrthogonalOnOmega",
    "NumericalError", "OrthonormalBasis", "PchipSurrogate", "ProbRadiusReport", "ProjectionResult", "Region",
    "SampleSet", "SingularGram", "ValidationError", "beta_quantile", "build_grid", "certify",
    "chebyshev_affine", "create_anchors", "fit", "fit_lasso", "fit_ls", "fit_ridge", "gram_matrices",
    "improvement_bounds", "kappa_classical", "kappa_r", "kappa_rho", "kappa_spec", "legendre_affine",
    "orthonormalize_on", "project_ball", "project_intersection", "real_spherical_harmonics", "sine2d",
    "symmetric_eigen", "synthesize_noisy_samples",
]
