"""Exterior calculus for pullbacks under Sobolev maps.

Forms, maps and test forms are sampled on midpoint grids; the weak chain
rule ``d f^*alpha = f^* d alpha`` is checked by residuals that either decay
under refinement or plateau at a point mass.
"""
from .domain import Domain
from .exterior import Covector, MultiIndex, basis, rank, unrank, wedge
from .forms import (FormField, TestForm, angle_form, bump_test_form, constant_form, d_smooth, polynomial_form,
                    scalar_field)
from .maps import (MapModel, compound, constant, identity, jacobian, lambda_norm, linear, minor_matrix, polynomial,
                   radial_power, sobolev_report, winding)
from .mollify import kdagger_diagnostic, mollify, stability_diagnostic
from .pullback import norm_inequality_check, pullback_field, pullback_point
from .quadrature import QuadratureGrid, integrate, refine_and_extrapolate
from .weakcalc import (ResidualReport, default_battery, leibniz_residual, naturality_decomposed_residual,
                       naturality_residual, pairing, tau_convergence_report, weak_closedness_residual,
                       weak_derivative_residual)

__version__ = "0.1.0"

__all__ = [
    "Domain", "Covector", "MultiIndex", "basis", "rank", "unrank", "wedge",
    "FormField", "TestForm", "angle_form", "bump_test_form", "constant_form", "d_smooth", "polynomial_form",
    "scalar_field",
    "MapModel", "compound", "constant", "identity", "jacobian", "lambda_norm", "linear", "minor_matrix",
    "polynomial", "radial_power", "sobolev_report", "winding",
    "kdagger_diagnostic", "mollify", "stability_diagnostic",
    "norm_inequality_check", "pullback_field", "pullback_point",
    "QuadratureGrid", "integrate", "refine_and_extrapolate",
    "ResidualReport", "default_battery", "leibniz_residual", "naturality_decomposed_residual",
    "naturality_residual", "pairing", "tau_convergence_report", "weak_closedness_residual", "weak_derivative_residual",
]
