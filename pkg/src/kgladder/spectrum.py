"""Closed-form resonance ladder of the supercritical inverse-square problem.

The mode outside the absorber is ``u = sqrt(r) H_{i sigma}(E r)``.  At the
matching radius r0 it must coincide with the local absorber solution

    (r/r0)**p + rho * (r/r0)**q,     p = 1/2 - i sigma,  q = 1/2 + i sigma,

i.e. have log-derivative ``beta / r0`` with

    beta = (p + rho*q) / (1 + rho).

``rho`` is a small reflection amplitude of the absorber.  With ``rho = 0`` and
an outgoing (H1) far field this is the bare outgoing-branch condition, whose
zeros do *not* form a log-periodic ladder (the far-field mode near r0 is
dominated by the r**q branch for small |E r0|).  The default, rho =
exp(-pi sigma / 2) with the spatially decaying (H2) far field, produces a
fourth-quadrant ladder on the ray arg E = -pi/4 with ratio exp(-pi/sigma).

Since ``W * sqrt(r0)`` depends on E and r0 only through ``z = E r0``, the
ladder is searched for in ``w = ln z`` and the spectrum is exactly covariant
under r0 -> lambda r0, E -> E/lambda.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from . import specfun
from .errors import (
    BoundaryZero,
    DegenerateFit,
    DomainError,
    IllConditioned,
    LadderGap,
)
from .model import Branch, ComplexEnergy, CouplingData, effective_temperature, exponent
from .rootfind import SearchRect, refine_root, subdivide_and_locate

FAR_FIELDS = ("decaying", "outgoing")
# Hankel kind for each far-field channel
_KIND = {"outgoing": 1, "decaying": 2}

DEFAULT_WINDOW_UV = 0.5
POLISH_TOL = 1e-10
_ARG_GUARD = 1e-6


@dataclass(frozen=True)
class MatchingProblem:
    """Matching condition at r0 between far-field mode and absorber.

    Parameters
    ----------
    coupling : CouplingData
        Must be supercritical.
    r0 : float
        Matching radius.
    reflection : complex, optional
        Absorber reflection amplitude rho.  ``None`` selects exp(-pi sigma/2).
    far_field : {"decaying", "outgoing"}
        ``"decaying"`` uses H2 (e^{-iEr}, normalisable for Im E < 0);
        ``"outgoing"`` uses H1 (e^{iEr}, Siegert continuation).
    branch : Branch
        Near-origin branch carrying unit amplitude in the absorber solution.
    window_uv : float
        Largest |E| r0 admitted in the ladder.
    """

    coupling: CouplingData
    r0: float = 1.0
    reflection: Optional[complex] = None
    far_field: str = "decaying"
    branch: Branch = Branch.OUTGOING
    window_uv: float = DEFAULT_WINDOW_UV

    def __post_init__(self):
        self.coupling.require_supercritical()
        if not (self.r0 > 0 and math.isfinite(self.r0)):
            raise DomainError(f"r0 must be positive and finite, got {self.r0}")
        if self.far_field not in FAR_FIELDS:
            raise ValueError(f"far_field must be one of {FAR_FIELDS}")
        if not (0 < self.window_uv):
            raise ValueError("window_uv must be positive")
        if self.reflection is not None and complex(self.reflection) == -1:
            raise DomainError("reflection = -1 annihilates the absorber solution at r0")

    @property
    def sigma(self) -> float:
        return self.coupling.sigma

    @property
    def rho(self) -> complex:
        if self.reflection is None:
            return complex(math.exp(-0.5 * math.pi * self.sigma))
        return complex(self.reflection)

    @property
    def beta(self) -> complex:
        """Matching exponent: required value of ``r u'/u`` at r0."""
        p = exponent(self.sigma, self.branch)
        q = complex(0.5, -p.imag)  # the other branch
        rho = self.rho
        return (p + rho * q) / (1.0 + rho)

    @property
    def kind(self) -> int:
        return _KIND[self.far_field]


@dataclass(frozen=True)
class ResonanceEntry:
    n: int
    energy: ComplexEnergy
    determinant_residual: float

    @property
    def E(self) -> complex:
        return self.energy.value


@dataclass(frozen=True)
class LadderFit:
    ratio: float
    log_slope: float
    phase_drift: float
    E0: complex
    T_eff: float
    residual_rms: float
    # line through (n, ln Gamma_n)
    width_slope: float = float("nan")
    width_intercept: float = float("nan")
    width_residual_rms: float = float("nan")


@dataclass(frozen=True)
class AsymptoticDecomposition:
    A: complex
    B: complex
    condition: float = 1.0


def mode_function(E, r, c: CouplingData, channel: str = "outgoing"):
    """Exact far-field mode ``sqrt(r) H_{i sigma}(E r)`` and its r-derivative.

    Parameters
    ----------
    E : complex
    r : float or array of float, > 0
    c : CouplingData
    channel : {"outgoing", "decaying"}
        H1 (~ e^{iEr}) or H2 (~ e^{-iEr}).

    Returns
    -------
    u, du : complex or ndarray
    """
    sigma = c.require_supercritical()
    E = complex(E)
    if E == 0:
        raise DomainError("mode function needs E != 0")
    if channel not in _KIND:
        raise ValueError(f"channel must be one of {tuple(_KIND)}")
    scalar = np.ndim(r) == 0
    r = np.atleast_1d(np.asarray(r, dtype=float))
    if np.any(r <= 0):
        raise DomainError("mode function needs r > 0")
    h, dh = specfun.hankel(1j * sigma, E * r, _KIND[channel], derivative=True)
    sr = np.sqrt(r)
    u = sr * h
    du = 0.5 * h / sr + sr * E * dh
    if scalar:
        return complex(u[0]), complex(du[0])
    return u, du


def _scaled_determinant(z, p: MatchingProblem):
    """``sqrt(r0) * W`` as a function of z = E r0 (vectorised)."""
    h, dh = specfun.hankel(1j * p.sigma, z, p.kind, derivative=True)
    return (0.5 - p.beta) * h + z * dh


def matching_determinant(E, p: MatchingProblem):
    """``W(E) = u'(r0) - beta u(r0) / r0`` for the far-field mode of ``p``.

    Accepts scalar or array ``E``.  With ``reflection=0`` and
    ``far_field="outgoing"``, beta = 1/2 - i sigma and W is the bare
    outgoing-branch mismatch.
    """
    scalar = np.ndim(E) == 0
    E = np.atleast_1d(np.asarray(E, dtype=complex))
    if np.any(E == 0):
        raise DomainError("matching determinant needs E != 0")
    w = _scaled_determinant(E * p.r0, p) / math.sqrt(p.r0)
    return complex(w[0]) if scalar else w


def leading_order_ladder(p: MatchingProblem, count: int, top: Optional[float] = None) -> List[complex]:
    """Small-|E r0| prediction of the ladder, largest |E| first.

    Keeping the leading power of each branch in the small-argument form of
    the Hankel function, the matching condition reads
    ``(z/2)**(2 i sigma) = -kappa / (s G)`` with ``kappa`` the ratio of the
    r**q to r**p amplitudes, ``s = exp(-+pi sigma)`` for H2/H1 and
    ``G = Gamma(1 - i sigma)/Gamma(1 + i sigma)``.

    Parameters
    ----------
    top : float, optional
        Largest |E| r0 admitted; defaults to ``p.window_uv``.
    """
    sigma = p.sigma
    rho = p.rho
    if rho == 0:
        raise LadderGap("no log-periodic ladder without reflection (rho = 0)")
    kappa = rho if p.branch is Branch.OUTGOING else 1.0 / rho
    arg_G = -2.0 * complex(specfun.log_gamma(complex(1.0, sigma))).imag
    if p.far_field == "decaying":
        theta = -0.5 * math.pi - math.log(abs(kappa)) / (2 * sigma)
    else:
        theta = 0.5 * math.pi - math.log(abs(kappa)) / (2 * sigma)
    top = p.window_uv if top is None else top
    base = (cmath.phase(kappa) + math.pi - arg_G) / (2 * sigma)
    step = math.pi / sigma
    # largest k with 2 exp(base + k step) <= top
    k = math.floor((math.log(top / 2.0) - base) / step)
    out = []
    for j in range(count):
        mag = 2.0 * math.exp(base + (k - j) * step)
        out.append(cmath.rect(mag, theta) / p.r0)
    return out


def _strip(p: MatchingProblem):
    # arg z range searched: fourth quadrant for decaying/H2, else whole lower half
    if p.far_field == "decaying":
        return -0.5 * math.pi + _ARG_GUARD, -_ARG_GUARD
    return -math.pi + _ARG_GUARD, -_ARG_GUARD


def _annulus_roots(f, lo: float, hi: float, p: MatchingProblem):
    """Roots of f(w) with Re w in [lo, hi]; shifts the annulus slightly on a boundary hit."""
    im_lo, im_hi = _strip(p)
    width = hi - lo
    for shift in (0.0, 0.013, -0.017, 0.029):
        rect = SearchRect(lo + shift * width, hi + shift * width, im_lo, im_hi, 64)
        try:
            return subdivide_and_locate(f, rect, max_roots=8, ftol=1e-13).roots
        except BoundaryZero:
            continue
    raise LadderGap(f"annulus Re ln(E r0) in [{lo:.4g}, {hi:.4g}] keeps touching a zero")


def find_ladder(p: MatchingProblem, count: int = 5) -> List[ResonanceEntry]:
    """Locate ``count`` consecutive fourth-quadrant resonances below the UV edge.

    The search runs in ``w = ln(E r0)``.  The first annulus spans one full
    predicted period ``pi/sigma`` below ``ln(window_uv)`` and its largest
    root is rung n = 0.  Each later annulus is centred on the previous rung's
    ``ln|E r0|`` minus ``pi/sigma`` with half-width ``pi/(2 sigma)`` and must
    contain exactly one root.  Roots are polished in z to a determinant
    residual of at most 1e-10 (relative to the determinant scale near the
    root).
    """
    if count < 3:
        raise ValueError("count must be >= 3")
    if p.window_uv > DEFAULT_WINDOW_UV:
        raise DomainError(
            f"window_uv = {p.window_uv} exceeds the ladder regime |E| r0 <= {DEFAULT_WINDOW_UV}"
        )
    sigma = p.sigma
    period = math.pi / sigma

    def f(w):
        return _scaled_determinant(np.exp(w), p)

    def fz(z):
        return _scaled_determinant(z, p)

    top = math.log(p.window_uv)
    roots = _annulus_roots(f, top - period, top, p)
    if not roots:
        raise LadderGap(
            f"no resonance with |E| r0 in [{p.window_uv * math.exp(-period):.4g}, {p.window_uv}]"
        )
    z_prev = _polish(fz, np.exp(max(roots, key=lambda w: w.real)))
    zs = [z_prev]
    while len(zs) < count:
        centre = math.log(abs(z_prev)) - period
        roots = _annulus_roots(f, centre - 0.5 * period, centre + 0.5 * period, p)
        if len(roots) != 1:
            raise LadderGap(
                f"rung {len(zs)}: expected one zero near |E| r0 = {math.exp(centre):.4g}, "
                f"found {len(roots)}"
            )
        z_prev = _polish(fz, np.exp(roots[0]))
        zs.append(z_prev)
    entries = []
    for n, z in enumerate(zs):
        E = z / p.r0
        res = abs(complex(matching_determinant(E, p)))
        entries.append(ResonanceEntry(n=n, energy=ComplexEnergy(E), determinant_residual=res))
    return entries


def _polish(fz, z0: complex) -> complex:
    """Muller polish in z; the local scale is set by |f| a small step away."""
    z = refine_root(fz, z0, step=1e-6 * abs(z0), ftol=1e-14, xtol=1e-15)
    scale = abs(complex(fz(np.array([z * (1 + 1e-3)]))[0]))
    resid = abs(complex(fz(np.array([z]))[0]))
    if resid > POLISH_TOL * max(scale, 1.0):
        raise LadderGap(f"root near {z} polished only to residual {resid:.3g}")
    return z


def width_ladder(entries: Sequence[ResonanceEntry]) -> List[float]:
    """Decay widths ``Gamma_n = -2 Im E_n``."""
    if not entries:
        raise ValueError("need at least one entry")
    return [e.energy.width for e in entries]


def consecutive_ratios(values: Sequence[float]) -> List[float]:
    return [values[i + 1] / values[i] for i in range(len(values) - 1)]


def _line(x, y):
    A = np.vstack([x, np.ones_like(x)]).T
    (slope, icept), *_ = np.linalg.lstsq(A, y, rcond=None)
    rms = float(np.sqrt(np.mean((A @ [slope, icept] - y) ** 2)))
    return float(slope), float(icept), rms


def fit_ladder(entries: Sequence[ResonanceEntry], c: CouplingData) -> LadderFit:
    """Least-squares geometric fit of a ladder.

    ``log_slope`` is the slope of ln|E_n| against n, ``ratio = exp(log_slope)``.
    The width line ln Gamma_n = width_intercept + width_slope * n is fitted
    separately (only when every width is positive).
    """
    if len(entries) < 3:
        raise DegenerateFit(f"need >= 3 entries, got {len(entries)}")
    sigma = c.require_supercritical()
    n = np.array([e.n for e in entries], dtype=float)
    E = np.array([e.E for e in entries])
    slope, _, rms = _line(n, np.log(np.abs(E)))
    phases = np.angle(E)
    drift = float(np.max(np.abs(phases - phases.mean())))
    E0 = next((e.E for e in entries if e.n == 0), entries[0].E)
    widths = -2.0 * E.imag
    if np.all(widths > 0):
        wslope, wicept, wrms = _line(n, np.log(widths))
    else:
        wslope = wicept = wrms = float("nan")
    return LadderFit(
        ratio=math.exp(slope),
        log_slope=slope,
        phase_drift=drift,
        E0=complex(E0),
        T_eff=effective_temperature(E0, sigma),
        residual_rms=rms,
        width_slope=wslope,
        width_intercept=wicept,
        width_residual_rms=wrms,
    )


def plane_wave_basis(E: complex, r, c: Optional[CouplingData] = None):
    """Large-r basis ``(w+, w-) ~ e^{+-iEr}``.

    With a coupling, both waves carry the asymptotic corrections
    ``1 + c1/(Er) + c2/(Er)**2`` of the exact equation, which removes the
    O(alpha/(E r)) amplitude drift that would otherwise leak into B.
    """
    r = np.asarray(r, dtype=float)
    z = complex(E) * r
    wp, wm = np.exp(1j * z), np.exp(-1j * z)
    if c is not None:
        wp = wp * asymptotic_series(z, c.alpha, +1)
        wm = wm * asymptotic_series(z, c.alpha, -1)
    return wp, wm


def asymptotic_series(z, alpha: float, sign: int):
    """``1 + c1/z + c2/z**2`` for the solution ~ exp(sign * i z) of u'' + (1 + alpha/z**2) u = 0."""
    c1 = -sign * 0.5j * alpha
    c2 = -alpha * (alpha + 2.0) / 8.0
    return 1.0 + c1 / z + c2 / (z * z)


def asymptotic_split(E: complex, r_pair, u_values, c: Optional[CouplingData] = None,
                     min_kr: float = 20.0) -> AsymptoticDecomposition:
    """Solve ``u(r_i) = A w+(r_i) + B w-(r_i)`` at two probe radii.

    Parameters
    ----------
    E : complex
    r_pair : pair of floats with |E| r >= ``min_kr``
    u_values : pair of complex
    c : CouplingData, optional
        Use corrected plane waves (see :func:`plane_wave_basis`).
    """
    r = np.asarray(r_pair, dtype=float)
    if r.shape != (2,) or np.ndim(u_values) != 1 or len(u_values) != 2:
        raise ValueError("need exactly two probe radii and two values")
    if np.any(abs(complex(E)) * r < min_kr):
        raise DomainError(f"probe radii need |E| r >= {min_kr}")
    wp, wm = plane_wave_basis(E, r, c)
    M = np.column_stack([wp, wm])
    # column scaling keeps cond() about the geometry, not about exp(|Im E| r)
    M = M / np.abs(M).max(axis=0)
    cond = float(np.linalg.cond(M))
    if not math.isfinite(cond) or cond > 1e8:
        raise IllConditioned(
            f"probe separation {r[1] - r[0]:.6g} is near a half-wavelength multiple (cond {cond:.3g})"
        )
    scale_p, scale_m = np.abs(wp).max(), np.abs(wm).max()
    A, B = np.linalg.solve(M, np.asarray(u_values, dtype=complex))
    return AsymptoticDecomposition(A=complex(A / scale_p), B=complex(B / scale_m), condition=cond)


def matched_current(entry: ResonanceEntry, p: MatchingProblem) -> float:
    """Radial current ``Im(conj(u) u')`` of the far-field mode at r0 for a rung."""
    u, du = mode_function(entry.E, p.r0, p.coupling, channel=p.far_field)
    return float((np.conj(u) * du).imag)
