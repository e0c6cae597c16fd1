"""Scrambled geometric nets for quadrature over products of triangles, disks,
spherical triangles and intervals."""

from geonets.digits import DigitVector, default_depth, digits_to_value, int_to_digits, radical_inverse
from geonets.nets import NetSpec, PointSet, digital_net, faure_net, net_for, vdc_points, verify_net
from geonets.scramble import ScrambleKey, scramble_point_set, uniformity_check
from geonets.regions import (
    Interval,
    ProductSpace,
    PolarCell,
    SphericalTriangle,
    SplitScheme,
    Triangle,
    aspect_ratio,
    measure_preservation_check,
    phi,
    representative,
    spherical_area,
    sphericity_probe,
    split_cell,
)
from geonets.quad import (
    EstimateReport,
    SigmaTable,
    anova_components,
    estimate,
    gain_coefficients,
    mr_sigma,
    replicate_variance,
    variance_identity_check,
)
from geonets.integrands import Integrand, make_integrand
from geonets.study import StudyRow, convergence_study, fit_slope

__version__ = "0.1.0"

__all__ = [
    "DigitVector",
    "default_depth",
    "digits_to_value",
    "int_to_digits",
    "radical_inverse",
    "NetSpec",
    "PointSet",
    "digital_net",
    "faure_net",
    "net_for",
    "vdc_points",
    "verify_net",
    "ScrambleKey",
    "scramble_point_set",
    "uniformity_check",
    "Interval",
    "ProductSpace",
    "PolarCell",
    "SphericalTriangle",
    "SplitScheme",
    "Triangle",
    "aspect_ratio",
    "measure_preservation_check",
    "phi",
    "representative",
    "spherical_area",
    "sphericity_probe",
    "split_cell",
    "EstimateReport",
    "SigmaTable",
    "anova_components",
    "estimate",
    "gain_coefficients",
    "mr_sigma",
    "replicate_variance",
    "variance_identity_check",
    "Integrand",
    "make_integrand",
    "StudyRow",
    "convergence_study",
    "fit_slope",
]
