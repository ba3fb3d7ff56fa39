"""Toolkit for spherical mixed p-spin glass models.

Computes Parisi measures by minimizing the Crisanti-Sommers functional
(closed forms where available, k-step RSB numerics otherwise), certifies
optimality, decides temperature-chaos conditions for temperature pairs,
and validates predictions against small-N Monte Carlo sampling of the
Gaussian Hamiltonian on the sphere.
"""

from parisphere.mixture import MixtureSpec, parse_mixture, xi_eval, xi_derivative, curvature_class
from parisphere.measures import StepCDF, FrsbClosedForm, measure_from_json
from parisphere.functional import Certificate, cs_value, certify, krsb_minimize
from parisphere.solver import ParisiSolution, SolveOptions, parisi_solve, rs_check
from parisphere.chaos import ChaosReport, theorem1_check, theorem2_check, frsb_coupling_demo
from parisphere.montecarlo import SimConfig, McmcParams, chaos_experiment, covariance_selftest

__version__ = "0.1.0"

__all__ = [
    "MixtureSpec",
    "parse_mixture",
    "xi_eval",
    "xi_derivative",
    "curvature_class",
    "StepCDF",
    "FrsbClosedForm",
    "measure_from_json",
    "Certificate",
    "cs_value",
    "certify",
    "krsb_minimize",
    "ParisiSolution",
    "SolveOptions",
    "parisi_solve",
    "rs_check",
    "ChaosReport",
    "theorem1_check",
    "theorem2_check",
    "frsb_coupling_demo",
    "SimConfig",
    "McmcParams",
    "chaos_experiment",
    "covariance_selftest",
    "__version__",
]
