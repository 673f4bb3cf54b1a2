"""Numerical laboratory for Riesz transforms of measures with density.

Evaluation of ``R^s mu``, sphere fluxes, sup-norm searches and the explicit
measure families used to probe the maximum principle.
"""

__version__ = "0.1.0"

from .errors import (InvalidPower, NegativityViolation, NormalizationFailure, NoWitness,  # noqa: E402
                     RegimeViolation, RieszLabError, RouteDisagreement, ToleranceNotMet,
                     UnsupportedBall, UnsupportedDimension)
from .measures import (AnalyticDensity, Ball, LatticeDensity, Measure, Params,  # noqa: E402
                       RadialProfile, Symmetry, mass_in_ball, radial_measure, total_mass)
from .quadrature import DEFAULT_SPEC, QuadratureSpec, sphere_rule  # noqa: E402
from .riesz import (RieszValue, potential, riesz_potential, riesz_radial_component,  # noqa: E402
                    riesz_truncated, riesz_vector)
from .flux import FluxReport, divergence_flux, flux_report, lemma_rhs, surface_flux  # noqa: E402
from .maxprinciple import (MPReport, SupSearchSpec, mp_report, radial_witness, sup_norm,  # noqa: E402
                           theta_sup)

__all__ = [
    "__version__", "Params", "Ball", "Symmetry", "RadialProfile", "AnalyticDensity",
    "LatticeDensity", "Measure", "radial_measure", "mass_in_ball", "total_mass",
    "QuadratureSpec", "DEFAULT_SPEC", "sphere_rule", "RieszValue", "riesz_vector",
    "riesz_truncated", "riesz_radial_component", "potential", "riesz_potential",
    "FluxReport", "surface_flux", "divergence_flux", "lemma_rhs", "flux_report",
    "SupSearchSpec", "MPReport", "sup_norm", "theta_sup", "radial_witness", "mp_report",
    "RieszLabError", "ToleranceNotMet", "RegimeViolation", "InvalidPower",
    "UnsupportedDimension", "UnsupportedBall", "NegativityViolation", "NoWitness",
    "RouteDisagreement", "NormalizationFailure",
]
