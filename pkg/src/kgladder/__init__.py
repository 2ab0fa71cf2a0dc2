"""Complex resonance ladder of the absorbing inverse-square radial problem.

Modules
-------
model       couplings, regimes, near-origin branches, currents
specfun     complex log-Gamma, Bessel J and Hankel functions of imaginary order
rootfind    argument-principle zero counting and Muller polishing
spectrum    closed-form matching determinant and ladder search
odesolve    independent log-coordinate integration of the radial equation
timedomain  leapfrog Klein-Gordon evolution and matrix-pencil ringdown fits
cli         command-line front end
"""
__version__ = "0.1.0"

from .model import (  # noqa: E402
    Branch,
    ComplexEnergy,
    CouplingData,
    ModelParams,
    Regime,
    coupling_from,
    effective_temperature,
    radial_current,
)
from .spectrum import MatchingProblem, find_ladder, fit_ladder, matching_determinant  # noqa: E402

__all__ = [
    "Branch",
    "ComplexEnergy",
    "CouplingData",
    "MatchingProblem",
    "ModelParams",
    "Regime",
    "coupling_from",
    "effective_temperature",
    "find_ladder",
    "fit_ladder",
    "matching_determinant",
    "radial_current",
]
