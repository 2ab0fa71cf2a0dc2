"""Zeros of analytic functions in rectangles of the complex plane.

Counting uses the argument principle with adaptive boundary sampling; location
bisects rectangles until each cell holds a single zero and polishes it with
Muller's method.  No derivatives of ``f`` are needed.

``f`` must accept a numpy array of complex points and return an array of the
same shape (numpy ufunc-style callables qualify).
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, List

import numpy as np

from .errors import BoundaryZero, MaxDepth, NonConvergence

PHASE_STEP = math.pi / 2
MAX_REFINE = 40
MAX_DEPTH = 40


@dataclass(frozen=True)
class SearchRect:
    re_min: float
    re_max: float
    im_min: float
    im_max: float
    boundary_samples: int = 64

    def __post_init__(self):
        if not (self.re_min < self.re_max and self.im_min < self.im_max):
            raise ValueError(f"degenerate rectangle {self}")
        if self.boundary_samples < 64:
            raise ValueError("boundary_samples must be >= 64")

    @property
    def center(self) -> complex:
        return complex(0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max))

    @property
    def width(self):
        return self.re_max - self.re_min

    @property
    def height(self):
        return self.im_max - self.im_min

    def contains(self, z: complex, slack: float = 0.0) -> bool:
        return (
            self.re_min - slack <= z.real <= self.re_max + slack
            and self.im_min - slack <= z.imag <= self.im_max + slack
        )

    def corners(self):
        return (
            complex(self.re_min, self.im_min),
            complex(self.re_max, self.im_min),
            complex(self.re_max, self.im_max),
            complex(self.re_min, self.im_max),
        )


@dataclass
class RootReport:
    roots: List[complex] = field(default_factory=list)
    multiplicity_total: int = 0
    residual_max: float = 0.0
    iterations: int = 0


class _Cached:
    """Memoise f on exact points; contours of neighbouring cells share edges."""

    def __init__(self, f):
        self.f = f
        self.cache = {}
        self.calls = 0

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=complex)
        missing = [p for p in dict.fromkeys(pts.tolist()) if p not in self.cache]
        if missing:
            vals = np.asarray(self.f(np.array(missing, dtype=complex)), dtype=complex)
            self.calls += len(missing)
            self.cache.update(zip(missing, vals.tolist()))
        return np.array([self.cache[p] for p in pts.tolist()], dtype=complex)


def _perimeter(rect: SearchRect, n: int) -> np.ndarray:
    """Parameters in [0, 4) along the counter-clockwise boundary."""
    return np.arange(n) * (4.0 / n)


def _point(rect: SearchRect, s: np.ndarray) -> np.ndarray:
    a, b, c, d = rect.corners()
    s = np.asarray(s, dtype=float)
    side = np.minimum(np.floor(s), 3).astype(int)
    t = s - side
    starts = np.array([a, b, c, d])
    ends = np.array([b, c, d, a])
    return starts[side] + t * (ends[side] - starts[side])


def _winding(f, rect: SearchRect):
    """Return (winding number, min |f|, median |f|) along the boundary.

    A segment is split while its phase increment is >= pi/2 or differs from a
    neighbour's by >= pi/4; the count must then survive one global doubling
    of the samples.
    """
    s = _perimeter(rect, rect.boundary_samples)
    # corners are always sampled
    vals = f(_point(rect, s))
    previous = None
    for _ in range(MAX_REFINE):
        if not np.all(vals != 0):
            raise BoundaryZero(f"f vanishes on the boundary of {rect}; move the contour")
        if not np.all(np.isfinite(vals)):
            raise NonConvergence("non-finite function value on the contour")
        dphi = np.angle(np.roll(vals, -1) / vals)
        jump = np.abs(np.diff(dphi, append=dphi[:1])) >= 0.5 * PHASE_STEP
        bad = (np.abs(dphi) >= PHASE_STEP) | jump | np.roll(jump, 1)
        if not bad.any():
            total = np.sum(dphi) / (2 * math.pi)
            if previous is not None and round(total) == round(previous):
                break
            previous = total
            bad[:] = True  # confirm with a global doubling
        else:
            previous = None
        idx = np.flatnonzero(bad)
        s_next = np.append(s[1:], 4.0)
        mids = 0.5 * (s[idx] + s_next[idx])
        new_vals = f(_point(rect, mids))
        s = np.insert(s, idx + 1, mids)
        vals = np.insert(vals, idx + 1, new_vals)
    else:
        mags = np.abs(vals)
        if mags.min() <= 1e-6 * np.median(mags):
            # phase keeps jumping next to a near-zero sample: a zero sits on the contour
            raise BoundaryZero(f"|f| = {mags.min():.3g} on the boundary of {rect}; move the contour")
        raise NonConvergence(
            f"phase tracking failed on {rect}: increments >= pi/2 after {MAX_REFINE} refinements"
        )
    mags = np.abs(vals)
    med = float(np.median(mags))
    fmin = float(mags.min())
    if fmin <= 1e-13 * med:
        raise BoundaryZero(f"|f| = {fmin:.3g} on the boundary of {rect}; move the contour")
    total = np.sum(np.angle(np.roll(vals, -1) / vals)) / (2 * math.pi)
    n = int(round(total))
    if abs(total - n) > 1e-3:
        raise NonConvergence(f"winding {total} is not close to an integer")
    return n, fmin, med


def count_zeros(f: Callable, rect: SearchRect) -> int:
    """Number of zeros of analytic ``f`` inside ``rect``, with multiplicity."""
    return _winding(_as_cached(f), rect)[0]


def _as_cached(f):
    return f if isinstance(f, _Cached) else _Cached(f)


def refine_root(f: Callable, seed: complex, step: float | None = None, max_iter: int = 100,
                ftol: float = 1e-12, xtol: float = 1e-14) -> complex:
    """Polish a root with Muller's three-point iteration.

    Stops when ``|f| <= ftol * scale`` (scale = largest |f| on the starting
    triple) or when the step falls below ``xtol`` relative to ``|z|``.
    """
    seed = complex(seed)
    if step is None:
        step = 1e-3 * max(abs(seed), 1e-12)

    def fs(z):
        return complex(np.asarray(f(np.array([z])), dtype=complex)[0])

    x0, x1, x2 = seed - step, seed + step, seed
    f0, f1, f2 = fs(x0), fs(x1), fs(x2)
    if not all(map(cmath.isfinite, (f0, f1, f2))):
        raise NonConvergence(f"f is not finite near seed {seed}")
    scale = max(abs(f0), abs(f1), abs(f2))
    if f2 == 0:
        return x2
    for _ in range(max_iter):
        h1, h2 = x1 - x0, x2 - x1
        if h1 == 0 or h2 == 0 or h1 + h2 == 0:
            raise NonConvergence(f"Muller iteration from {seed} stalled at {x2}")
        d1, d2 = (f1 - f0) / h1, (f2 - f1) / h2
        a = (d2 - d1) / (h2 + h1)
        b = a * h2 + d2
        disc = cmath.sqrt(b * b - 4 * f2 * a)
        den = b + disc if abs(b + disc) >= abs(b - disc) else b - disc
        if den == 0:
            # flat interpolant: take an off-axis probe step
            dx = step * (0.5 + 1j)
        else:
            dx = -2 * f2 / den
        x3 = x2 + dx
        f3 = fs(x3)
        if not cmath.isfinite(f3):
            raise NonConvergence(f"Muller step left the domain of f at {x3}")
        x0, x1, x2 = x1, x2, x3
        f0, f1, f2 = f1, f2, f3
        if abs(f3) <= ftol * scale or abs(dx) <= xtol * max(abs(x3), 1e-300):
            return x3
    raise NonConvergence(f"Muller iteration from {seed} did not converge in {max_iter} steps")


def _halves(rect: SearchRect, frac: float):
    if rect.width >= rect.height:
        cut = rect.re_min + frac * rect.width
        return (
            SearchRect(rect.re_min, cut, rect.im_min, rect.im_max, rect.boundary_samples),
            SearchRect(cut, rect.re_max, rect.im_min, rect.im_max, rect.boundary_samples),
        )
    cut = rect.im_min + frac * rect.height
    return (
        SearchRect(rect.re_min, rect.re_max, rect.im_min, cut, rect.boundary_samples),
        SearchRect(rect.re_min, rect.re_max, cut, rect.im_max, rect.boundary_samples),
    )


# off-centre cut positions tried when a bisection line hits a zero
_CUTS = (0.5, 0.5 + 1 / 37, 0.5 - 1 / 29, 0.5 + 1 / 11)


def subdivide_and_locate(f: Callable, rect: SearchRect, max_roots: int = 16,
                         ftol: float = 1e-12) -> RootReport:
    """Find every zero of ``f`` inside ``rect``.

    Raises :class:`MaxDepth` if isolating the zeros needs more than 40 levels
    of bisection (e.g. a multiple zero).
    """
    fc = _as_cached(f)
    total, _, med = _winding(fc, rect)
    if total > max_roots:
        raise ValueError(f"{total} zeros in {rect}, more than max_roots={max_roots}")
    report = RootReport(multiplicity_total=total)
    if total == 0:
        return report
    roots: List[complex] = []
    iterations = 0

    def locate(cell: SearchRect, n: int, depth: int):
        nonlocal iterations
        iterations += 1
        if depth > MAX_DEPTH:
            raise MaxDepth(f"more than {MAX_DEPTH} bisection levels near {cell.center}")
        if n == 1:
            root = _polish_in_cell(fc, cell, ftol)
            if root is not None:
                roots.append(root)
                return
        for frac in _CUTS:
            try:
                a, b = _halves(cell, frac)
                na = _winding(fc, a)[0]
                nb = _winding(fc, b)[0]
            except BoundaryZero:
                continue
            if na + nb != n:
                raise NonConvergence(f"zero count not additive in {cell}: {na} + {nb} != {n}")
            break
        else:
            raise BoundaryZero(f"could not bisect {cell} without touching a zero")
        if na:
            locate(a, na, depth + 1)
        if nb:
            locate(b, nb, depth + 1)

    locate(rect, total, 0)
    roots.sort(key=lambda z: (z.real, z.imag))
    for i in range(1, len(roots)):
        if abs(roots[i] - roots[i - 1]) <= 1e-10 * max(abs(roots[i]), 1e-300):
            raise NonConvergence(f"duplicate roots {roots[i - 1]} and {roots[i]}")
    report.roots = roots
    report.iterations = iterations
    report.residual_max = max(abs(complex(fc.f(np.array([z]))[0])) for z in roots)
    return report


def _polish_in_cell(f, cell: SearchRect, ftol: float):
    step = 0.05 * min(cell.width, cell.height)
    try:
        z = refine_root(f.f if isinstance(f, _Cached) else f, cell.center, step=step, ftol=ftol)
    except NonConvergence:
        return None
    slack = 1e-9 * max(abs(z), 1.0)
    return z if cell.contains(z, slack) else None
