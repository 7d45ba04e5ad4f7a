"""Boundary-element spectra of the Neumann-Poincare operator and the
surface localization of the associated plasmons on closed 3-D surfaces."""

__version__ = "0.1.0"

from .assembly import (
    OperatorPair,
    assemble_np_adjoint,
    assemble_operator_pair,
    assemble_single_layer,
    calderon_residual,
    dlp_kernel,
    gamma,
    grad_gamma,
)
from .calr import energy_series, sweep_and_classify
from .errors import ConfigError, NumericalError
from .meshing import PanelMesh, distance_to_solid, triangulate
from .pipeline import RunConfig, compare_report, run_pipeline
from .plasmons import (
    axisymmetry_score,
    decay_fit,
    detect_outliers,
    evaluate_plasmon,
    evaluate_plasmon_gradient,
    kernel_expansion_residual,
    region_l2_norms,
)
from .quadrature import QuadratureRule, triangle_rule
from .regions import CrossSectionRegion, build_region
from .spectrum import Spectrum, almost_sure_fraction, solve_spectrum, weyl_fit
from .surfaces import (
    CurvatureSample,
    ParametricSurface,
    build_surface,
    curvature_at,
    symbol_positivity,
    willmore_energy,
)

__all__ = [
    "ConfigError",
    "CrossSectionRegion",
    "CurvatureSample",
    "NumericalError",
    "OperatorPair",
    "PanelMesh",
    "ParametricSurface",
    "QuadratureRule",
    "RunConfig",
    "Spectrum",
    "almost_sure_fraction",
    "assemble_np_adjoint",
    "assemble_operator_pair",
    "assemble_single_layer",
    "axisymmetry_score",
    "build_region",
    "build_surface",
    "calderon_residual",
    "compare_report",
    "curvature_at",
    "decay_fit",
    "detect_outliers",
    "distance_to_solid",
    "dlp_kernel",
    "energy_series",
    "evaluate_plasmon",
    "evaluate_plasmon_gradient",
    "gamma",
    "grad_gamma",
    "kernel_expansion_residual",
    "region_l2_norms",
    "run_pipeline",
    "solve_spectrum",
    "sweep_and_classify",
    "symbol_positivity",
    "triangle_rule",
    "triangulate",
    "weyl_fit",
    "willmore_energy",
]
