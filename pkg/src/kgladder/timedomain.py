"""Time-domain evolution of the radial Klein-Gordon field and ringdown fitting.

The field obeys ``u_tt = u_rr + (alpha/r**2) u`` on [r0, R], whose
stationary solutions ``u = e^{-iEt} u(r)`` are the radial modes.  It is advanced
with the standard second-order leapfrog scheme.  The inner edge carries the
absorber, the outer edge a quadratic sponge with a first-order outgoing
closure.

Ringdown frequencies are recovered from probe series with the matrix-pencil
method.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .errors import DomainError, IllConditioned, Instability
from .model import CouplingData

INNER_BCS = ("characteristic", "robin")
OUTER_BCS = ("sponge", "reflective")
BLOWUP_FACTOR = 1e6


@dataclass(frozen=True)
class Grid:
    """Uniform radial grid and explicit time step.

    ``dt`` defaults to ``courant * dr``; ``sponge_width`` defaults to a fifth
    of the domain.  A zero ``sponge_strength`` switches the sponge off.

    The sponge adds ``-s(r) (u_t + u_r)`` with a quadratic ramp ``s``.  Pure
    outgoing waves have ``u_t + u_r = 0`` and cross it untouched, while waves
    reflected by the outer closure are damped on the way back.
    """

    r0: float = 1.0
    R: float = 200.0
    points: int = 4000
    dt: Optional[float] = None
    courant: float = 0.5
    sponge_width: Optional[float] = None
    sponge_strength: float = 2.0

    def __post_init__(self):
        if not (0 < self.r0 < self.R):
            raise DomainError(f"need 0 < r0 < R, got r0={self.r0}, R={self.R}")
        if self.points < 16:
            raise ValueError("points must be >= 16")
        if not (0 < self.courant <= 0.9):
            raise ValueError("courant must lie in (0, 0.9]")
        if self.dt is not None and not (0 < self.dt <= self.courant * self.dr * (1 + 1e-12)):
            raise ValueError(f"dt = {self.dt} violates dt <= courant * dr = {self.courant * self.dr}")
        if not (0 <= self.width < 0.25 * (self.R - self.r0)):
            raise ValueError("sponge_width must be < (R - r0)/4")
        if self.sponge_strength < 0:
            raise ValueError("sponge_strength must be >= 0")

    @property
    def dr(self) -> float:
        return (self.R - self.r0) / (self.points - 1)

    @property
    def step(self) -> float:
        return self.courant * self.dr if self.dt is None else self.dt

    @property
    def width(self) -> float:
        return 0.2 * (self.R - self.r0) if self.sponge_width is None else self.sponge_width

    @property
    def r(self) -> np.ndarray:
        return np.linspace(self.r0, self.R, self.points)

    def sponge(self) -> np.ndarray:
        r = self.r
        if self.sponge_strength == 0 or self.width == 0:
            return np.zeros_like(r)
        s = (r - (self.R - self.width)) / self.width
        return np.where(s > 0, self.sponge_strength * s * s, 0.0)


@dataclass(frozen=True)
class Pulse:
    """Gaussian initial data ``amplitude * exp(-((r - center)/width)**2)``.

    ``direction`` 0 starts at rest; -1 / +1 launch the profile as a wave
    travelling inward / outward.
    """

    center: float = 10.0
    width: float = 1.5
    amplitude: complex = 1.0
    direction: int = 0

    def profile(self, r):
        s = (r - self.center) / self.width
        f = self.amplitude * np.exp(-s * s)
        df = -2.0 * s / self.width * f
        # u(r, t) = f(r - direction * t)
        return f.astype(complex), (-self.direction * df).astype(complex)


@dataclass
class TimeSeries:
    probe_r: float
    times: np.ndarray
    values: np.ndarray
    # diagnostics sampled alongside the probe
    norm: Optional[np.ndarray] = None
    inner_flux: Optional[np.ndarray] = None

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.times.shape != self.values.shape:
            raise ValueError("times and values differ in length")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("non-finite samples in time series")
        if len(self.times) > 2:
            d = np.diff(self.times)
            if np.max(np.abs(d - d.mean())) > 1e-9 * abs(d.mean()):
                raise ValueError("time samples must be uniformly spaced")

    @property
    def spacing(self) -> float:
        return float(self.times[1] - self.times[0])

    def window(self, t_start: float, t_end: float) -> "TimeSeries":
        m = (self.times >= t_start) & (self.times <= t_end)
        return TimeSeries(self.probe_r, self.times[m], self.values[m])


@dataclass
class ModeSet:
    frequencies: List[complex]
    amplitudes: List[complex]
    fit_residual: float
    # fitted modes with Im E >= 0, removed from ``frequencies``
    growing: List[complex] = field(default_factory=list)
    # modes that failed the shifted-window stability test
    unstable: List[complex] = field(default_factory=list)

    @property
    def dominant(self) -> complex:
        if not self.frequencies:
            raise ValueError("no decaying modes retained")
        return self.frequencies[0]


def evolve(grid: Grid, c: CouplingData, pulse: Pulse = Pulse(), *, beta: Optional[complex] = None,
           t_final: float = 150.0, probe_r: float = 5.0, sample_every: int = 0,
           inner_bc: str = "characteristic", outer_bc: str = "sponge") -> TimeSeries:
    """Evolve the field and record ``u(t, probe_r)``.

    Parameters
    ----------
    beta : complex, optional
        Exponent in the inner condition.  Defaults to the outgoing exponent
        ``1/2 - i sigma`` for the characteristic condition and to the
        default matching-problem exponent for the Robin one.
    sample_every : int
        Record every n-th step; 0 picks about one sample per 0.1 time units.
    inner_bc : {"characteristic", "robin"}
        ``"characteristic"``: ``u_t - u_r + (beta/r0) u = 0`` (one-sided).
        ``"robin"``: static condition ``r0 u_r = beta u`` via a ghost point.
    outer_bc : {"sponge", "reflective"}
        Sponge plus ``u_t + u_r = 0`` closure, or a Neumann wall.

    Raises
    ------
    Instability
        If max |u| exceeds 1e6 times its initial maximum.
    """
    c.require_supercritical()
    if beta is None and inner_bc == "robin":
        from .spectrum import MatchingProblem

        beta = MatchingProblem(c, grid.r0).beta
    elif beta is None:
        beta = complex(0.5, -c.sigma)
    return _evolve(grid, c.alpha, pulse, complex(beta), t_final, probe_r, sample_every,
                   inner_bc, outer_bc)


def _evolve(grid: Grid, alpha: float, pulse: Pulse, beta: complex, t_final: float,
            probe_r: float, sample_every: int, inner_bc: str, outer_bc: str) -> TimeSeries:
    """Regime-agnostic core of :func:`evolve` (alpha = 0 is the free wave)."""
    if inner_bc not in INNER_BCS:
        raise ValueError(f"inner_bc must be one of {INNER_BCS}")
    if outer_bc not in OUTER_BCS:
        raise ValueError(f"outer_bc must be one of {OUTER_BCS}")
    r = grid.r
    if not (grid.r0 <= probe_r <= grid.R):
        raise DomainError("probe outside the grid")
    if not (grid.r0 + 3 * pulse.width < pulse.center < grid.R - grid.width - 3 * pulse.width):
        raise DomainError("pulse must be supported away from both boundaries and the sponge")
    dr, dt = grid.dr, grid.step
    r0 = grid.r0
    V = alpha / (r * r)
    sponge = grid.sponge() if outer_bc == "sponge" else np.zeros_like(r)
    ip = int(np.argmin(np.abs(r - probe_r)))
    n_steps = int(round(t_final / dt))
    if sample_every <= 0:
        sample_every = max(1, int(round(0.1 / dt)))

    u0, v0 = pulse.profile(r)
    ref = float(np.abs(u0).max())
    bound = BLOWUP_FACTOR * ref
    lap = np.empty_like(u0)
    inv_dr2 = 1.0 / (dr * dr)
    robin = inner_bc == "robin"
    closure = outer_bc == "sponge"
    one_way = closure and bool(np.any(sponge))
    grad = np.zeros_like(u0)

    def accel(u):
        lap[1:-1] = (u[2:] - 2.0 * u[1:-1] + u[:-2]) * inv_dr2
        if robin:
            # ghost point u_{-1} = u_1 - 2 dr (beta/r0) u_0
            lap[0] = (2.0 * u[1] - 2.0 * u[0] - 2.0 * dr * beta / r0 * u[0]) * inv_dr2
        else:
            lap[0] = 0.0
        lap[-1] = 2.0 * (u[-2] - u[-1]) * inv_dr2
        out = lap + V * u
        if one_way:
            # the sponge damps u_t + u_r; its u_r part is explicit
            grad[1:-1] = (u[2:] - u[:-2]) * (0.5 / dr)
            out -= sponge * grad
        return out

    # Taylor start for the first step
    u_prev = u0
    u = u0 + dt * v0 + 0.5 * dt * dt * accel(u0)
    damp_p = 1.0 + 0.5 * dt * sponge
    damp_m = 1.0 - 0.5 * dt * sponge
    lam = dt / dr

    times, vals, norms, fluxes = [0.0], [u0[ip]], [], []
    norms.append(_norm(u0, dr))
    fluxes.append(_inner_flux(u0, dr))
    for n in range(1, n_steps + 1):
        if n % sample_every == 0:
            times.append(n * dt)
            vals.append(u[ip])
            norms.append(_norm(u, dr))
            fluxes.append(_inner_flux(u, dr))
            m = float(np.abs(u).max())
            if not math.isfinite(m) or m > bound:
                raise Instability(
                    f"|u| reached {m:.3g} (> {BLOWUP_FACTOR:g} x initial) at t = {n * dt:.6g}",
                    onset_time=n * dt,
                )
        u_next = (2.0 * u - damp_m * u_prev + dt * dt * accel(u)) / damp_p
        if not robin:
            # upwind form of u_t = u_r - (beta/r0) u
            u_next[0] = u[0] + lam * (u[1] - u[0]) - dt * beta / r0 * u[0]
        if closure:
            # u_t + u_r = 0 at R
            u_next[-1] = u[-1] - lam * (u[-1] - u[-2])
        u_prev, u = u, u_next
    return TimeSeries(probe_r=float(r[ip]), times=np.array(times), values=np.array(vals),
                      norm=np.array(norms), inner_flux=np.array(fluxes))


def _norm(u, dr):
    return float(np.sum(np.abs(u) ** 2) * dr)


def _inner_flux(u, dr):
    # Im(conj(u) u_r) at r0, one-sided second-order derivative
    du = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dr)
    return float((np.conj(u[0]) * du).imag)


def _pencil(y: np.ndarray, dt: float, max_modes: int, rank_tol: float):
    N = len(y)
    L = N // 3
    Y = np.lib.stride_tricks.sliding_window_view(y, L + 1)  # (N - L) x (L + 1)
    _, s, Vh = np.linalg.svd(Y, full_matrices=False)
    M = int(min(max_modes, np.count_nonzero(s > rank_tol * s[0])))
    if M == 0:
        raise IllConditioned("signal is numerically zero")
    cond = float(s[0] / s[M - 1])
    if cond > 1e12:
        raise IllConditioned(
            f"pencil condition {cond:.3g} > 1e12; use a shorter window or fewer modes"
        )
    # rows of Vh[:M] span the same space as the rows z_k**j of the signal
    W = Vh[:M]
    z = np.linalg.eigvals(W[:, 1:] @ np.linalg.pinv(W[:, :-1]))
    E = 1j * np.log(z) / dt
    k = np.arange(N)
    Z = z[None, :] ** k[:, None]
    amp, *_ = np.linalg.lstsq(Z, y, rcond=None)
    resid = float(np.linalg.norm(Z @ amp - y) / np.linalg.norm(y))
    return E, amp, resid


def extract_modes(s: TimeSeries, window: Tuple[float, float], max_modes: int = 4, *,
                  rank_tol: float = 1e-9, shift: float = 0.1, stability_tol: float = 0.02) -> ModeSet:
    """Matrix-pencil fit ``u(t) ~ sum_k a_k exp(-i E_k (t - t_start))``.

    The pencil parameter is one third of the window length.  A mode is kept
    when a fit over the window shifted by ``shift`` of its length reproduces
    it within ``stability_tol`` (relative), and when Im E < 0.  Amplitudes
    refer to the start of the window; modes are sorted by |amplitude|.
    """
    w = s.window(*window)
    if len(w.times) < 200:
        raise ValueError(f"window holds {len(w.times)} samples, need >= 200")
    dt = w.spacing
    E, amp, resid = _pencil(w.values, dt, max_modes, rank_tol)
    span = window[1] - window[0]
    w2 = s.window(window[0] + shift * span, window[1] + shift * span)
    if len(w2.times) < 200 or w2.times[-1] < window[1] + 0.5 * shift * span:
        # not enough data after the window: shift towards earlier times instead
        w2 = s.window(window[0] - shift * span, window[1] - shift * span)
    E2, _, _ = _pencil(w2.values, dt, max_modes, rank_tol)
    order = np.argsort(-np.abs(amp))
    keep, keep_amp, growing, unstable = [], [], [], []
    for i in order:
        e = complex(E[i])
        near = np.min(np.abs(E2 - e)) / max(abs(e), 1e-300)
        if near > stability_tol:
            unstable.append(e)
        elif e.imag >= 0:
            growing.append(e)
        else:
            keep.append(e)
            keep_amp.append(complex(amp[i]))
    return ModeSet(frequencies=keep, amplitudes=keep_amp, fit_residual=resid,
                   growing=growing, unstable=unstable)


@dataclass
class Pairing:
    n: int
    rung: complex
    mode: complex
    distance_rel: float


@dataclass
class SpectrumComparison:
    pairs: List[Pairing]
    unmatched_modes: List[complex]
    unmatched_rungs: List[int]


def compare_spectra(m: ModeSet, ladder: Sequence) -> SpectrumComparison:
    """Greedy nearest-neighbour pairing of fitted modes with ladder rungs.

    ``ladder`` holds ResonanceEntry objects or plain complex energies (then
    indexed 0, 1, ...).  Distances are relative to |E_rung|.
    """
    if not m.frequencies or not ladder:
        raise ValueError("both spectra must be nonempty")
    rungs = [(getattr(x, "n", i), complex(getattr(x, "E", x))) for i, x in enumerate(ladder)]
    cand = sorted(
        (abs(f - e) / abs(e), i, j)
        for i, f in enumerate(m.frequencies)
        for j, (_, e) in enumerate(rungs)
    )
    used_m, used_r, pairs = set(), set(), []
    for d, i, j in cand:
        if i in used_m or j in used_r:
            continue
        used_m.add(i)
        used_r.add(j)
        pairs.append(Pairing(n=rungs[j][0], rung=rungs[j][1], mode=m.frequencies[i], distance_rel=d))
    pairs.sort(key=lambda p: p.n)
    return SpectrumComparison(
        pairs=pairs,
        unmatched_modes=[f for i, f in enumerate(m.frequencies) if i not in used_m],
        unmatched_rungs=[rungs[j][0] for j in range(len(rungs)) if j not in used_r],
    )


def late_time_slope(s: TimeSeries, window: Tuple[float, float]) -> float:
    """Least-squares slope of ln|u| over ``window`` (equals Im E for one mode)."""
    w = s.window(*window)
    return float(np.polyfit(w.times, np.log(np.abs(w.values)), 1)[0])


def write_timeseries_csv(dest, s: TimeSeries, metadata: Optional[Dict] = None):
    """CSV with ``#``-prefixed metadata lines and columns ``t, re_u, im_u``.

    ``dest`` is a path or an open text handle.
    """
    if hasattr(dest, "write"):
        _write_series(dest, s, metadata)
        return
    with open(dest, "w", newline="") as fh:
        _write_series(fh, s, metadata)


def _write_series(fh, s, metadata):
    for k, v in (metadata or {}).items():
        fh.write(f"# {k} = {v}\n")
    wr = csv.writer(fh, lineterminator="\n")
    wr.writerow(["t", "re_u", "im_u"])
    for t, v in zip(s.times, s.values):
        wr.writerow([repr(float(t)), repr(float(v.real)), repr(float(v.imag))])


def read_timeseries_csv(path) -> TimeSeries:
    meta = {}
    rows = []
    with open(path) as fh:
        for line in fh:
            if line.startswith("#"):
                k, _, v = line[1:].partition("=")
                meta[k.strip()] = v.strip()
            elif line.strip() and not line.startswith("t,"):
                rows.append([float(x) for x in line.split(",")])
    a = np.array(rows)
    return TimeSeries(float(meta.get("probe_r", "nan")), a[:, 0], a[:, 1] + 1j * a[:, 2])
