"""Direct integration of the radial equation, independent of special functions.

In ``x = ln r`` with ``y = (u, v)``, ``v = r u'``, the equation
``u'' + (alpha/r**2 + E**2) u = 0`` becomes

    u_x = v,    v_x = v - (alpha + E**2 r**2) u,

whose only explicit x-dependence is the E**2 r**2 term.  The solution is started
at large r from the asymptotic form ``e^{+-iEr} (1 + c1/z + c2/z**2 + ...)`` and
carried inward with a Dormand-Prince 5(4) pair.  For Im E < 0 the decaying
far-field wave e^{-iEr} grows inward, so the inward direction is the stable
one for it.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .errors import DomainError, IntegratorOverflow, StepUnderflow
from .model import CouplingData
from .rootfind import refine_root

# Dormand-Prince 5(4) tableau
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B5 = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_B4 = (5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40)
_BERR = tuple(b5 - b4 for b5, b4 in zip(_B5, _B4))

_RESCALE = 1e100
_OVERFLOW = 1e250
_MAX_DAMPING = 30.0  # |Im E| r_outer bound


@dataclass(frozen=True)
class IntegratorConfig:
    """Inward integration settings.

    Parameters
    ----------
    r_outer : float, optional
        Start radius; ``None`` means ``start_kr / |E|``.
    start_kr : float
        |E| r at the start when r_outer is not given.
    steps_per_decade : int
        Minimum number of steps per decade of r (caps the step in x).  In
        fixed-step mode, the exact number of steps per decade.
    abs_tol, rel_tol : float
        Local error tolerances of the 5(4) pair.
    asymptotic_terms : int
        Terms kept in the large-r series (4 = 1 + c1/z + c2/z**2 + c3/z**3).
    fixed_step : bool
        Uniform steps in x, no error control (for convergence studies).
    initial_scale : complex
        Overall factor on the starting data.
    """

    r_outer: Optional[float] = None
    start_kr: float = 25.0
    steps_per_decade: int = 200
    abs_tol: float = 1e-13
    rel_tol: float = 1e-12
    asymptotic_terms: int = 4
    fixed_step: bool = False
    initial_scale: complex = 1.0
    max_steps: int = 200_000

    def __post_init__(self):
        if self.steps_per_decade < 200:
            raise ValueError("steps_per_decade must be >= 200")
        if self.r_outer is not None and not self.r_outer > 0:
            raise ValueError("r_outer must be positive")
        if self.start_kr < 20:
            raise ValueError("start_kr must be >= 20 (asymptotic start)")
        if self.asymptotic_terms < 1:
            raise ValueError("asymptotic_terms must be >= 1")
        if not (self.abs_tol > 0 and self.rel_tol > 0):
            raise ValueError("tolerances must be positive")

    def outer_radius(self, E: complex) -> float:
        r = self.start_kr / abs(E) if self.r_outer is None else self.r_outer
        if abs(E) * r < 20.0 * (1 - 1e-12):
            raise DomainError(f"|E| r_outer = {abs(E) * r:.4g} < 20: asymptotic start invalid")
        return r


@dataclass
class InwardResult:
    """Solution at r_stop.  True values are ``u * exp(log_scale)`` etc."""

    u: complex
    du: complex
    log_scale: float
    steps: int
    rejected: int

    @property
    def values(self):
        try:
            f = math.exp(self.log_scale)
        except OverflowError:
            f = math.inf
        if not math.isfinite(f):
            raise IntegratorOverflow(f"solution magnitude exp({self.log_scale:.4g}) not representable")
        return self.u * f, self.du * f


def asymptotic_start(E: complex, r: float, alpha: float, sign: int, terms: int = 4):
    """``u = e^{sign i E r} S(E r)`` and ``du/dr`` from the large-argument series.

    ``S = sum_k c_k z**-k`` with ``c_0 = 1``,
    ``c_k = c_{k-1} (k(k-1) + alpha) / (2 i sign k)``.
    """
    z = E * r
    c = [1.0 + 0j]
    for k in range(1, terms):
        c.append(c[-1] * (k * (k - 1) + alpha) / (2j * sign * k))
    S = sum(ck * z ** (-k) for k, ck in enumerate(c))
    dS = sum(-k * ck * z ** (-k - 1) for k, ck in enumerate(c) if k)
    ph = cmath.exp(sign * 1j * z)
    return ph * S, E * ph * (sign * 1j * S + dS)


def integrate_radial(E: complex, alpha: float, cfg: IntegratorConfig, r_stop: float,
                     channel: str = "decaying") -> InwardResult:
    """Integrate inward from the asymptotic start to ``r_stop`` for any alpha.

    ``channel`` picks the start: ``"decaying"`` e^{-iEr}, ``"outgoing"`` e^{iEr}.
    This entry point does not check the coupling regime (alpha = 0 gives the
    free equation).
    """
    E = complex(E)
    if E == 0:
        raise DomainError("E must be nonzero")
    if channel not in ("decaying", "outgoing"):
        raise ValueError("channel must be 'decaying' or 'outgoing'")
    r_out = cfg.outer_radius(E)
    if not (0 < r_stop < r_out):
        raise DomainError(f"need 0 < r_stop < r_outer = {r_out:.6g}, got {r_stop}")
    if abs(E.imag) * r_out > _MAX_DAMPING:
        raise DomainError(
            f"|Im E| r_outer = {abs(E.imag) * r_out:.4g} exceeds {_MAX_DAMPING} (overflow guard)"
        )
    sign = 1 if channel == "outgoing" else -1
    u, du = asymptotic_start(E, r_out, alpha, sign, cfg.asymptotic_terms)
    # the overall factor goes straight into the log-scale accumulator
    scale = complex(cfg.initial_scale)
    if scale == 0 or not cmath.isfinite(scale):
        raise ValueError("initial_scale must be finite and nonzero")
    y0, y1 = u * (scale / abs(scale)), r_out * du * (scale / abs(scale))
    E2 = E * E

    def rhs(x, a, b):
        return b, b - (alpha + E2 * math.exp(2.0 * x)) * a

    x, x_end = math.log(r_out), math.log(r_stop)
    span = x - x_end
    h_max = math.log(10.0) / cfg.steps_per_decade
    if cfg.fixed_step:
        n_steps = max(1, math.ceil(span / h_max - 1e-9))
        h = -span / n_steps
    else:
        # a few steps per local wavelength to begin with
        h = -min(h_max, 0.1 / max(abs(E) * r_out, 1.0))
    log_scale = math.log(abs(scale))
    steps = rejected = 0
    while x > x_end:
        if steps + rejected >= cfg.max_steps:
            raise StepUnderflow(f"more than {cfg.max_steps} steps before reaching r_stop")
        if x + h < x_end:
            h = x_end - x
        k = []
        for i in range(7):
            ai = _A[i]
            a = y0 + h * sum(aij * kj[0] for aij, kj in zip(ai, k))
            b = y1 + h * sum(aij * kj[1] for aij, kj in zip(ai, k))
            k.append(rhs(x + _C[i] * h, a, b))
        n0 = y0 + h * sum(bi * ki[0] for bi, ki in zip(_B5, k))
        n1 = y1 + h * sum(bi * ki[1] for bi, ki in zip(_B5, k))
        if cfg.fixed_step:
            accept, fac = True, 1.0
        else:
            e0 = h * sum(bi * ki[0] for bi, ki in zip(_BERR, k))
            e1 = h * sum(bi * ki[1] for bi, ki in zip(_BERR, k))
            sc0 = cfg.abs_tol + cfg.rel_tol * max(abs(y0), abs(n0))
            sc1 = cfg.abs_tol + cfg.rel_tol * max(abs(y1), abs(n1))
            err = math.sqrt(0.5 * ((abs(e0) / sc0) ** 2 + (abs(e1) / sc1) ** 2))
            accept = err <= 1.0
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
        if accept:
            x += h
            y0, y1 = n0, n1
            steps += 1
            big = max(abs(y0), abs(y1))
            if not math.isfinite(big) or big > _OVERFLOW:
                raise IntegratorOverflow("solution overflowed within one step")
            if big > _RESCALE or (0 < big < 1 / _RESCALE):
                y0, y1 = y0 / big, y1 / big
                log_scale += math.log(big)
                if not math.isfinite(log_scale):
                    raise IntegratorOverflow("log-scale accumulator overflowed")
        else:
            rejected += 1
        if not cfg.fixed_step:
            h_new = h * fac
            if abs(h_new) > h_max:
                h_new = -h_max
            if abs(h_new) < 1e-14 * max(1.0, abs(x)):
                raise StepUnderflow(f"step size underflow at r = {math.exp(x):.6g}")
            h = h_new
    return InwardResult(u=y0, du=y1 / r_stop, log_scale=log_scale, steps=steps, rejected=rejected)


def integrate_inward(E: complex, c: CouplingData, cfg: IntegratorConfig, r_stop: float,
                     channel: str = "decaying") -> InwardResult:
    """As :func:`integrate_radial` for a supercritical coupling."""
    c.require_supercritical()
    return integrate_radial(E, c.alpha, cfg, r_stop, channel)


def matching_determinant_ode(E: complex, p, cfg: IntegratorConfig = IntegratorConfig()) -> complex:
    """``(u'(r0) - beta u(r0)/r0) / max(|u(r0)|, r0 |u'(r0)|)`` from the integrator.

    ``p`` is a :class:`kgladder.spectrum.MatchingProblem`; the far-field
    channel and beta are taken from it.
    """
    res = integrate_inward(E, p.coupling, cfg, p.r0, channel=p.far_field)
    u, du = res.u, res.du
    norm = max(abs(u), p.r0 * abs(du))
    return (du - p.beta * u / p.r0) / norm


def refine_ladder_ode(p, seeds, cfg: IntegratorConfig = IntegratorConfig(),
                      xtol: float = 1e-13):
    """Polish zeros of the ODE determinant from seed energies (one per seed)."""
    out = []
    for s in seeds:
        s = complex(s)

        def f(E):
            return np.array([matching_determinant_ode(e, p, cfg) for e in np.atleast_1d(E)])

        out.append(refine_root(f, s, step=1e-4 * abs(s), ftol=1e-13, xtol=xtol))
    return out


def with_r_outer(cfg: IntegratorConfig, r_outer: float) -> IntegratorConfig:
    return replace(cfg, r_outer=r_outer)
