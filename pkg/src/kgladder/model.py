"""Model parameters and the coupling algebra of the inverse-square radial problem.

Units are natural (hbar = c = k_B = 1).  With the scalar potential chosen so
that ``m + V(r) = i*gamma/r`` the rest mass cancels and the stationary radial
equation is

    -u'' - alpha/r**2 * u = E**2 * u,     alpha = gamma**2 - ell*(ell + 1).

For alpha > 1/4 the two solutions near the origin behave as
``r**(1/2 -+ i*sigma)`` with ``sigma = sqrt(alpha - 1/4)``.
"""
from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass
from typing import Optional

from .errors import CouplingRegimeError, DomainError

CRITICAL_TOL = 1e-12


class Regime(enum.Enum):
    SUPERCRITICAL = "supercritical"
    CRITICAL = "critical"
    SUBCRITICAL = "subcritical"


class Branch(enum.Enum):
    """Near-origin solution branch.

    OUTGOING is ``r**(1/2 - i*sigma)``: its radial current is -sigma, i.e. flux
    into the absorber at r = 0.  INGOING is ``r**(1/2 + i*sigma)``.
    """

    OUTGOING = "outgoing"
    INGOING = "ingoing"


@dataclass(frozen=True)
class ModelParams:
    gamma: float
    ell: int = 0
    mass: float = 0.0  # cancelled by the potential; kept for bookkeeping only
    r0: float = 1.0

    def __post_init__(self):
        if not (self.r0 > 0):
            raise DomainError(f"r0 must be positive, got {self.r0}")
        if int(self.ell) != self.ell or self.ell < 0:
            raise DomainError(f"ell must be a non-negative integer, got {self.ell}")
        if not math.isfinite(self.gamma):
            raise DomainError("gamma must be finite")


@dataclass(frozen=True)
class CouplingData:
    alpha: float
    sigma: Optional[float]
    regime: Regime

    @property
    def supercritical(self) -> bool:
        return self.regime is Regime.SUPERCRITICAL

    def require_supercritical(self) -> float:
        """Return sigma, or raise with the alpha > 1/4 requirement spelled out."""
        if self.regime is not Regime.SUPERCRITICAL:
            raise CouplingRegimeError(
                f"alpha = {self.alpha:.17g} is {self.regime.value}; the resonance "
                "ladder requires alpha > 1/4 (alpha <= 1/4 has no log-periodic tower)"
            )
        return self.sigma


def coupling_from(params: ModelParams) -> CouplingData:
    """Effective coupling, sigma and regime for ``params``.

    ``params.mass`` is deliberately not read.
    """
    ell = int(params.ell)
    alpha = params.gamma * params.gamma - ell * (ell + 1)
    return coupling_from_alpha(alpha)


def coupling_from_alpha(alpha: float) -> CouplingData:
    excess = alpha - 0.25
    if abs(excess) <= CRITICAL_TOL:
        return CouplingData(alpha=alpha, sigma=None, regime=Regime.CRITICAL)
    if excess > 0:
        return CouplingData(alpha=alpha, sigma=math.sqrt(excess), regime=Regime.SUPERCRITICAL)
    return CouplingData(alpha=alpha, sigma=None, regime=Regime.SUBCRITICAL)


def effective_potential(r: float, c: CouplingData) -> float:
    """Net radial potential ``(ell(ell+1) - gamma**2)/r**2 = -alpha/r**2``."""
    if not (r > 0):
        raise DomainError(f"effective potential needs r > 0, got {r}")
    return -c.alpha / (r * r)


def exponent(sigma: float, branch: Branch) -> complex:
    """Local power ``p`` of the near-origin solution ``r**p``."""
    return complex(0.5, -sigma) if branch is Branch.OUTGOING else complex(0.5, sigma)


def near_origin_mode(r: float, sigma: float, branch: Branch = Branch.OUTGOING) -> complex:
    """``r**(1/2 -+ i*sigma)`` on the principal branch of the logarithm."""
    if not (r > 0):
        raise DomainError(f"near-origin mode needs r > 0, got {r}")
    return cmath.exp(exponent(sigma, branch) * math.log(r))


def near_origin_mode_derivative(r: float, sigma: float, branch: Branch = Branch.OUTGOING) -> complex:
    if not (r > 0):
        raise DomainError(f"near-origin mode needs r > 0, got {r}")
    p = exponent(sigma, branch)
    return p * cmath.exp((p - 1) * math.log(r))


def radial_current(u: complex, du: complex) -> float:
    """Radial probability current ``Im(conj(u) * du)``."""
    return (u.conjugate() * du).imag


@dataclass(frozen=True)
class ComplexEnergy:
    value: complex

    @property
    def omega(self) -> float:
        return self.value.real

    @property
    def width(self) -> float:
        return -2.0 * self.value.imag

    @property
    def physical(self) -> bool:
        return self.width >= 0.0


def effective_temperature(E0: complex, sigma: float) -> float:
    """Kinematic temperature ``|E0| / (2*pi*sigma)`` (k_B = 1)."""
    return abs(E0) / (2.0 * math.pi * sigma)
