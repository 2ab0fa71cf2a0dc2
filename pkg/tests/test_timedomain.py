import io

import numpy as np
import pytest
from dataclasses import dataclass

import oracles
from kgladder.errors import DomainError, IllConditioned, Instability
from kgladder.timedomain import (
    Grid,
    ModeSet,
    Pulse,
    TimeSeries,
    _evolve,
    compare_spectra,
    evolve,
    extract_modes,
    late_time_slope,
    read_timeseries_csv,
    write_timeseries_csv,
)


def _series(modes, amps, dt=0.1, n=600, noise=0.0, seed=0):
    t = np.arange(n) * dt
    y = sum(a * np.exp(-1j * E * t) for E, a in zip(modes, amps))
    if noise:
        rng = np.random.default_rng(seed)
        y = y + noise * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return TimeSeries(0.0, t, y)


def test_grid_validation():
    g = Grid()
    assert g.step == 0.5 * g.dr and g.width == pytest.approx(0.2 * 199)
    assert g.r[0] == 1.0 and g.r[-1] == 200.0
    with pytest.raises(DomainError):
        Grid(r0=2.0, R=1.0)
    for bad in (dict(points=8), dict(courant=0.95), dict(dt=1.0), dict(sponge_width=60.0),
                dict(sponge_strength=-1.0)):
        with pytest.raises(ValueError):
            Grid(**bad)
    assert not Grid(sponge_strength=0.0).sponge().any()


def test_free_field_arrival_time():
    g = Grid(r0=1.0, R=100.0, points=2000, sponge_strength=0.0)
    pulse = Pulse(center=50.0, width=1.5, direction=-1)
    s = _evolve(g, 0.0, pulse, 0.5, 40.0, 30.0, 1, "characteristic", "reflective")
    t_peak = s.times[np.argmax(np.abs(s.values))]
    assert abs(t_peak - (50.0 - s.probe_r)) <= g.dr
    assert abs(np.abs(s.values).max() - 1.0) < 1e-3


def test_pulse_at_rest_splits_in_two():
    g = Grid(r0=1.0, R=100.0, points=2000, sponge_strength=0.0)
    s = _evolve(g, 0.0, Pulse(center=50.0), 0.0, 40.0, 30.0, 1, "characteristic", "reflective")
    assert abs(np.abs(s.values).max() - 0.5) < 1e-3


@dataclass(frozen=True)
class _Packet(Pulse):
    k: float = 0.5

    def profile(self, r):
        s = (r - self.center) / self.width
        f = np.exp(-s * s + 1j * self.k * r)
        return f, -(-2 * s / self.width + 1j * self.k) * f


@pytest.mark.parametrize("k", [0.15, 0.5, 1.0])
def test_outer_layer_reflection(k):
    # outgoing packet through the sponge; what comes back is the reflection
    g = Grid(r0=1.0, R=200.0, points=4000)
    s = _evolve(g, 0.0, _Packet(center=80.0, width=12.0, direction=1, k=k), 0.0, 300.0, 80.0, 1,
                "characteristic", "sponge")
    assert np.abs(s.values[s.times > 100]).max() < 1e-5
    bare = Grid(r0=1.0, R=200.0, points=4000, sponge_strength=0.0)
    s = _evolve(bare, 0.0, _Packet(center=80.0, width=12.0, direction=1, k=k), 0.0, 300.0, 80.0, 1,
                "characteristic", "sponge")
    assert np.abs(s.values[s.times > 100]).max() > 1e-4


def test_evolve_argument_checks(coupling):
    g = Grid(points=1000)
    with pytest.raises(ValueError):
        evolve(g, coupling, inner_bc="dirichlet")
    with pytest.raises(ValueError):
        evolve(g, coupling, outer_bc="open")
    with pytest.raises(DomainError):
        evolve(g, coupling, probe_r=500.0)
    with pytest.raises(DomainError):
        evolve(g, coupling, Pulse(center=2.0))


@pytest.mark.parametrize("bc", ["characteristic", "robin"])
def test_instability_reports_onset(coupling, bc):
    with pytest.raises(Instability) as info:
        evolve(Grid(), coupling, t_final=150.0, inner_bc=bc)
    assert 20.0 < info.value.onset_time < 45.0


def test_absorption_direction_before_onset(coupling):
    s = evolve(Grid(), coupling, t_final=25.0)
    assert np.sum(s.inner_flux) * s.spacing < 0


def test_growing_mode_is_mirror_of_rung_above_window(coupling):
    # under the static Robin absorber the radial problem sees only E^2, so
    # -E of every decaying rung is a growing solution of the evolution
    try:
        evolve(Grid(), coupling, t_final=150.0, inner_bc="robin")
    except Instability as exc:
        onset = exc.onset_time
    s = evolve(Grid(), coupling, t_final=onset - 1, inner_bc="robin", sample_every=1)
    m = extract_modes(s, (onset - 21, onset - 1), 6)
    mirror = -oracles.LADDER[0]
    assert min(abs(g - mirror) for g in m.growing) < 5e-3 * abs(mirror)
    mirror = -oracles.LADDER[1]
    assert min(abs(g - mirror) for g in m.growing) < 3e-2 * abs(mirror)


@pytest.mark.xfail(strict=True, raises=Instability,
                   reason="the absorbing inner boundary admits growing modes and the run blows up")
def test_norm_decays_after_transient(coupling):
    s = evolve(Grid(), coupling, t_final=150.0)
    tail = s.norm[s.times > 40.0]
    assert np.all(np.diff(tail) <= 0)


@pytest.mark.xfail(strict=True, raises=Instability,
                   reason="the absorbing inner boundary admits growing modes and the run blows up")
def test_ringdown_slope_matches_least_damped_rung(coupling, ladder):
    s = evolve(Grid(), coupling, t_final=150.0)
    slope = late_time_slope(s, (80.0, 150.0))
    assert abs(slope / ladder[0].E.imag - 1) < 0.05


def test_two_mode_synthetic_recovery():
    modes = [1 - 0.1j, 0.2 - 0.02j]
    s = _series(modes, [1.0, 0.3], noise=1e-6)
    m = extract_modes(s, (0.0, 40.0), 4)
    for E in modes:
        assert min(abs(f - E) for f in m.frequencies) < 1e-4 * abs(E)
    assert m.dominant == pytest.approx(modes[0], rel=1e-4)


def test_pure_decay():
    s = _series([-0.3j], [1.0])
    m = extract_modes(s, (0.0, 40.0), 3)
    assert abs(m.dominant + 0.3j) < 1e-8
    assert m.fit_residual < 1e-10


def test_growing_modes_are_flagged():
    s = _series([0.3 + 0.01j, 1 - 0.05j], [1.0, 1.0])
    m = extract_modes(s, (0.0, 40.0), 2)
    assert len(m.growing) == 1 and abs(m.growing[0] - (0.3 + 0.01j)) < 1e-8
    assert len(m.frequencies) == 1


def test_pencil_errors():
    with pytest.raises(IllConditioned):
        extract_modes(TimeSeries(0.0, np.arange(300) * 0.1, np.zeros(300)), (0.0, 29.0))
    with pytest.raises(IllConditioned):
        # two nearly coincident modes: the pencil is singular to working precision
        extract_modes(_series([1 - 0.1j, 1 - 0.1j + 1e-14], [1.0, -1.0 + 1e-3]), (0.0, 40.0), 2,
                      rank_tol=1e-16)
    with pytest.raises(ValueError):
        extract_modes(_series([1 - 0.1j], [1.0]), (0.0, 10.0))


def test_time_series_validation():
    with pytest.raises(ValueError):
        TimeSeries(0.0, [0.0, 0.1, 0.3], [1, 2, 3])
    with pytest.raises(ValueError):
        TimeSeries(0.0, [0.0, 0.1], [1, np.nan])
    with pytest.raises(ValueError):
        TimeSeries(0.0, [0.0, 0.1], [1])


def test_late_time_slope_synthetic():
    s = _series([0.7 - 0.05j], [2.0])
    assert late_time_slope(s, (10.0, 50.0)) == pytest.approx(-0.05, rel=1e-10)


def test_compare_identical_and_perturbed(ladder):
    E = [e.E for e in ladder[:4]]
    rep = compare_spectra(ModeSet(E, [1.0] * 4, 0.0), ladder[:4])
    assert [p.distance_rel for p in rep.pairs] == [0.0] * 4
    rep = compare_spectra(ModeSet([e * (1 + 1e-3) for e in E], [1.0] * 4, 0.0), ladder[:4])
    assert max(p.distance_rel for p in rep.pairs) == pytest.approx(1e-3, rel=1e-9)
    assert [p.n for p in rep.pairs] == [0, 1, 2, 3]


def test_compare_unmatched_and_empty():
    rep = compare_spectra(ModeSet([1 - 0.1j, 5 - 1j], [1, 1], 0.0), [1 - 0.1j])
    assert rep.unmatched_modes == [5 - 1j] and rep.unmatched_rungs == []
    rep = compare_spectra(ModeSet([1 - 0.1j], [1], 0.0), [1 - 0.1j, 0.2 - 0.02j])
    assert rep.unmatched_rungs == [1]
    with pytest.raises(ValueError):
        compare_spectra(ModeSet([], [], 0.0), [1.0])


def test_csv_round_trip(tmp_path):
    s = _series([0.7 - 0.05j], [2.0 + 1j], n=50)
    s.probe_r = 5.0
    path = tmp_path / "probe.csv"
    write_timeseries_csv(path, s, {"probe_r": 5.0})
    back = read_timeseries_csv(path)
    assert np.array_equal(back.times, s.times) and np.array_equal(back.values, s.values)
    assert back.probe_r == 5.0
    fh = io.StringIO()
    write_timeseries_csv(fh, s, {"probe_r": 5.0})
    assert fh.getvalue() == path.read_text()
    assert path.read_text().splitlines()[1] == "t,re_u,im_u"
