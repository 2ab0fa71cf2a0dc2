"""Complex log-Gamma and Bessel/Hankel functions of complex order.

Only what the radial problem needs: the order is ``nu = i*sigma`` (plus
``nu +- 1`` for recurrences), the argument ``z = E*r`` is complex and kept off
the negative real axis.

Evaluation strategy
-------------------
* ``|z| < crossover_radius``: ascending series for J_nu, summed in extended
  precision (``np.clongdouble``) because on the real axis the terms grow to
  roughly ``exp(|z|)`` before cancelling.  Hankel functions follow from the
  connection formula.
* ``|z| >= crossover_radius``: Hankel large-argument expansion, optimally
  truncated; ``J = (H1 + H2)/2``.

The large-argument expansion is accurate for |arg z| < 3 pi/4, which covers
every z = E r with Im E <= 0 and Re E >= 0.

All public functions accept scalars or arrays for ``z`` and return the same
shape (a Python ``complex`` for scalar input).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    CancellationWarning,
    PoleError,
    SeriesNonConvergence,
    SpecialFunctionOverflow,
)

_LD_PI = np.longdouble("3.14159265358979323846264338327950288")
_HALF_LOG_2PI = 0.5 * math.log(2.0 * math.pi)

# Lanczos approximation, g = 7, n = 9
_LANCZOS_G = 7.0
_LANCZOS_P = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


@dataclass(frozen=True)
class SeriesConfig:
    max_terms: int = 120
    tail_tolerance: float = 1e-16
    crossover_radius: float = 20.0

    def __post_init__(self):
        if self.max_terms < 1:
            raise ValueError("max_terms must be >= 1")
        if not (0.0 < self.tail_tolerance <= 1e-6):
            raise ValueError("tail_tolerance must lie in (0, 1e-6]")
        if not (self.crossover_radius > 0):
            raise ValueError("crossover_radius must be positive")


DEFAULT_CONFIG = SeriesConfig()


def _wrap(out, scalar):
    return complex(out) if scalar else out


def _lanczos_log_gamma(z):
    # valid for Re z >= 0.5
    zm = z - 1.0
    x = np.full(zm.shape, _LANCZOS_P[0], dtype=complex)
    for i, p in enumerate(_LANCZOS_P[1:], start=1):
        x = x + p / (zm + i)
    t = zm + _LANCZOS_G + 0.5
    return _HALF_LOG_2PI + (zm + 0.5) * np.log(t) - t + np.log(x)


def log_gamma(z):
    """Principal branch of log Gamma(z).

    The branch is the analytic continuation from the positive real axis with a
    cut along the negative real axis, so ``log_gamma(z + 1) = log(z) +
    log_gamma(z)`` holds with the principal ``log``.
    """
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    bad = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    if np.any(bad):
        raise PoleError(f"log_gamma has a pole at {z[bad][0]}")
    out = np.empty_like(z)
    right = z.real >= 0.5
    if np.any(right):
        out[right] = _lanczos_log_gamma(z[right])
    if np.any(~right):
        zl = z[~right]
        shift = np.ceil(0.5 - zl.real).astype(int)
        acc = np.zeros_like(zl)
        zs = zl.copy()
        for _ in range(int(shift.max())):
            active = shift > 0
            acc[active] += np.log(zs[active])
            zs[active] += 1.0
            shift[active] -= 1
        out[~right] = _lanczos_log_gamma(zs) - acc
    return _wrap(out[0], True) if scalar else out


def rgamma(z):
    """1/Gamma(z), zero at the poles."""
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    pole = (z.imag == 0) & (z.real <= 0) & (z.real == np.round(z.real))
    out = np.zeros_like(z)
    if np.any(~pole):
        out[~pole] = np.exp(-log_gamma(z[~pole]))
    return _wrap(out[0], True) if scalar else out


# ---------------------------------------------------------------------------
# Ascending series


def _series_sums(nu, z, cfg, derivative):
    """Return (S, D) with J_nu = (z/2)**nu * S and z*J_nu' = (z/2)**nu * D.

    Sums are accumulated in clongdouble.
    """
    zz = np.asarray(z, dtype=np.clongdouble)
    q = -(zz * zz) / 4
    t0 = np.clongdouble(rgamma(nu + 1.0))
    term = np.full(zz.shape, t0, dtype=np.clongdouble)
    s = term.copy()
    d = nu * term if derivative else None
    half = np.abs(z) / 2.0
    done = np.zeros(zz.shape, dtype=bool)
    for k in range(1, cfg.max_terms):
        term = term * q / (k * (nu + k))
        s += term
        if derivative:
            d += (nu + 2 * k) * term
        small = np.abs(term) <= cfg.tail_tolerance * np.abs(s)
        done |= small & (k > half)
        if done.all():
            break
    else:
        if not done.all():
            raise SeriesNonConvergence(
                f"Bessel series did not reach tail tolerance in {cfg.max_terms} terms"
            )
    return s, d


def _power_half(nu, z):
    zz = np.asarray(z, dtype=np.clongdouble)
    return np.exp(np.clongdouble(nu) * np.log(zz / 2))


def _check_finite(x, what):
    if not np.all(np.isfinite(x)):
        raise SpecialFunctionOverflow(f"{what} overflowed the representable range")
    return x


def _j_series_ld(nu, z, cfg, derivative=False):
    s, d = _series_sums(nu, z, cfg, derivative)
    p = _power_half(nu, z)
    j = p * s
    dj = p * d / np.asarray(z, dtype=np.clongdouble) if derivative else None
    return j, dj


# ---------------------------------------------------------------------------
# Large-argument expansion


def _hankel_asymptotic(nu, z, kind, cfg, derivative=False):
    z = np.asarray(z, dtype=complex)
    sgn = 1j if kind == 1 else -1j
    mu = 4.0 * nu * nu
    s = np.ones(z.shape, dtype=complex)
    ds = np.zeros(z.shape, dtype=complex)  # dS/dz
    a = 1.0 + 0j
    prev = np.full(z.shape, np.inf)
    active = np.ones(z.shape, dtype=bool)
    zk = np.ones(z.shape, dtype=complex)
    for k in range(1, 4 * cfg.max_terms):
        a = a * (mu - (2 * k - 1) ** 2) / (8.0 * k)
        zk = zk * z
        term = a * sgn**k / zk
        mag = np.abs(term)
        # optimal truncation: stop before terms start to grow
        active &= mag < prev
        s = np.where(active, s + term, s)
        if derivative:
            ds = np.where(active, ds - k * term / z, ds)
        active &= mag > cfg.tail_tolerance * np.abs(s)
        prev = mag
        if not active.any():
            break
    phase = z - nu * np.pi / 2 - np.pi / 4
    pref = np.sqrt(2.0 / (np.pi * z)) * np.exp(sgn * phase)
    h = pref * s
    if not derivative:
        return _check_finite(h, "Hankel expansion"), None
    dh = pref * ((sgn - 0.5 / z) * s + ds)
    return _check_finite(h, "Hankel expansion"), _check_finite(dh, "Hankel expansion")


# ---------------------------------------------------------------------------
# Public evaluation routines


def _prepare(z):
    scalar = np.ndim(z) == 0
    z = np.atleast_1d(np.asarray(z, dtype=complex))
    if np.any(z == 0):
        raise ValueError("argument z = 0 is a branch point")
    return scalar, z


def _split(z, cfg, method):
    if method == "series":
        return np.ones(z.shape, dtype=bool)
    if method == "asymptotic":
        return np.zeros(z.shape, dtype=bool)
    if method != "auto":
        raise ValueError(f"unknown method {method!r}")
    return np.abs(z) < cfg.crossover_radius


def bessel_j(nu, z, cfg: SeriesConfig = DEFAULT_CONFIG, method="auto", derivative=False):
    """J_nu(z) for complex order nu.

    With ``derivative=True`` returns ``(J, dJ/dz)``.
    """
    nu = complex(nu)
    scalar, z = _prepare(z)
    inner = _split(z, cfg, method)
    j = np.empty_like(z)
    dj = np.empty_like(z) if derivative else None
    if inner.any():
        js, djs = _j_series_ld(nu, z[inner], cfg, derivative)
        j[inner] = _check_finite(js.astype(complex), "Bessel series")
        if derivative:
            dj[inner] = _check_finite(djs.astype(complex), "Bessel series")
    if (~inner).any():
        zo = z[~inner]
        h1, dh1 = _hankel_asymptotic(nu, zo, 1, cfg, derivative)
        h2, dh2 = _hankel_asymptotic(nu, zo, 2, cfg, derivative)
        j[~inner] = 0.5 * (h1 + h2)
        if derivative:
            dj[~inner] = 0.5 * (dh1 + dh2)
    if derivative:
        return (_wrap(j[0], True), _wrap(dj[0], True)) if scalar else (j, dj)
    return _wrap(j[0], True) if scalar else j


def bessel_j_imag_order(nu_im: float, z, cfg: SeriesConfig = DEFAULT_CONFIG, method="auto"):
    """J_{i*nu_im}(z)."""
    return bessel_j(1j * nu_im, z, cfg, method)


def bessel_j_derivative(nu_im: float, z, cfg: SeriesConfig = DEFAULT_CONFIG, method="auto"):
    """d/dz J_{i*nu_im}(z), by term-wise differentiation (or of the expansion)."""
    return bessel_j(1j * nu_im, z, cfg, method, derivative=True)[1]


def _connection_coeffs(nu, kind):
    # H1 = (J_{-nu} - e^{-i pi nu} J_nu) / (i sin(pi nu)),
    # H2 = (J_{-nu} - e^{+i pi nu} J_nu) / (-i sin(pi nu))
    nu_ld = np.clongdouble(nu)
    sign = -1 if kind == 1 else 1
    e = np.exp(sign * 1j * _LD_PI * nu_ld)
    sin = np.sin(_LD_PI * nu_ld)
    denom = (1j if kind == 1 else -1j) * sin
    amp = 1.0 / abs(complex(sin))
    if amp > 1e12:
        warnings.warn(
            f"Hankel connection formula amplifies rounding by {amp:.3g} (order {nu} near an integer)",
            CancellationWarning,
            stacklevel=3,
        )
    return e, denom


def hankel(nu, z, kind=1, cfg: SeriesConfig = DEFAULT_CONFIG, method="auto", derivative=False):
    """Hankel function H^{(kind)}_nu(z) for non-integer complex order."""
    nu = complex(nu)
    if kind not in (1, 2):
        raise ValueError("kind must be 1 or 2")
    scalar, z = _prepare(z)
    inner = _split(z, cfg, method)
    h = np.empty_like(z)
    dh = np.empty_like(z) if derivative else None
    if inner.any():
        zi = z[inner]
        e, denom = _connection_coeffs(nu, kind)
        jp, djp = _j_series_ld(nu, zi, cfg, derivative)
        jm, djm = _j_series_ld(-nu, zi, cfg, derivative)
        h[inner] = _check_finite(((jm - e * jp) / denom).astype(complex), "Hankel connection")
        if derivative:
            dh[inner] = _check_finite(((djm - e * djp) / denom).astype(complex), "Hankel connection")
    if (~inner).any():
        ho, dho = _hankel_asymptotic(nu, z[~inner], kind, cfg, derivative)
        h[~inner] = ho
        if derivative:
            dh[~inner] = dho
    if derivative:
        return (_wrap(h[0], True), _wrap(dh[0], True)) if scalar else (h, dh)
    return _wrap(h[0], True) if scalar else h


def hankel1_imag_order(nu_im: float, z, cfg: SeriesConfig = DEFAULT_CONFIG, method="auto"):
    """H^{(1)}_{i*nu_im}(z): behaves as an outgoing wave exp(i z) at large |z|."""
    if nu_im == 0:
        raise ValueError("imaginary order must be non-zero")
    return hankel(1j * nu_im, z, 1, cfg, method)


def hankel2_imag_order(nu_im: float, z, cfg: SeriesConfig = DEFAULT_CONFIG, method="auto"):
    """H^{(2)}_{i*nu_im}(z): exp(-i z) at large |z|, decaying for Im z < 0."""
    if nu_im == 0:
        raise ValueError("imaginary order must be non-zero")
    return hankel(1j * nu_im, z, 2, cfg, method)


def hankel_derivative(nu_im: float, z, kind=1, cfg: SeriesConfig = DEFAULT_CONFIG, method="auto"):
    """d/dz H^{(kind)}_{i*nu_im}(z), from the differentiated series/expansion."""
    if nu_im == 0:
        raise ValueError("imaginary order must be non-zero")
    return hankel(1j * nu_im, z, kind, cfg, method, derivative=True)[1]
