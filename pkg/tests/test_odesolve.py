import cmath
import math

import numpy as np
import pytest

from kgladder.errors import DomainError, IntegratorOverflow, StepUnderflow
from kgladder.model import ModelParams, coupling_from
from kgladder.odesolve import (
    IntegratorConfig,
    InwardResult,
    asymptotic_start,
    integrate_inward,
    integrate_radial,
    matching_determinant_ode,
    refine_ladder_ode,
    with_r_outer,
)
from kgladder.spectrum import MatchingProblem, matching_determinant, mode_function


@pytest.mark.parametrize("channel,sign", [("decaying", -1), ("outgoing", 1)])
def test_free_equation_is_a_plane_wave(channel, sign):
    E = 0.8 - 0.05j
    res = integrate_radial(E, 0.0, IntegratorConfig(), 1.0, channel)
    u, du = res.values
    assert abs(u - cmath.exp(sign * 1j * E)) < 1e-10
    assert abs(du - sign * 1j * E * cmath.exp(sign * 1j * E)) < 1e-10


def test_asymptotic_start_is_exact_for_free_field():
    E, r = 1.3 - 0.1j, 40.0
    u, du = asymptotic_start(E, r, 0.0, -1, terms=6)
    assert u == cmath.exp(-1j * E * r)
    assert abs(du + 1j * E * u) < 1e-15


def test_decaying_start_matches_hankel_form(coupling):
    E = 0.13 - 0.13j
    ref = mode_function(E, 1.0, coupling, "decaying")
    res = integrate_inward(E, coupling, IntegratorConfig(), 1.0)
    u, du = res.values
    # both solutions are pure e^{-iEr} at infinity; compare log-derivatives
    assert abs(du / u - ref[1] / ref[0]) < 1e-7 * abs(ref[1] / ref[0])


def test_outgoing_start_needs_a_longer_series(coupling):
    # the growing-outward wave is the unstable direction inward: start errors
    # are amplified, so the start series must be more accurate
    E = 0.6 - 0.02j
    ref = mode_function(E, 1.0, coupling, "outgoing")
    cfg = IntegratorConfig(asymptotic_terms=12)
    u, du = integrate_inward(E, coupling, cfg, 1.0, "outgoing").values
    assert abs(du / u - ref[1] / ref[0]) < 1e-7 * abs(ref[1] / ref[0])


def test_fixed_step_convergence_order(coupling):
    E = 0.13 - 0.13j

    def run(n):
        cfg = IntegratorConfig(fixed_step=True, steps_per_decade=n, start_kr=20)
        return integrate_inward(E, coupling, cfg, 1.0).values[0]

    ref = run(6400)
    errs = [abs(run(n) - ref) for n in (200, 400, 800)]
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert all(q >= 4.5 for q in orders)


def test_dual_route_ladder_agreement(problem, ladder):
    seeds = [e.E for e in ladder[:4]]
    ode = refine_ladder_ode(problem, seeds)
    for a, b in zip(seeds, ode):
        assert abs(a - b) <= 1e-6 * abs(a)


def test_ode_determinant_vanishes_on_analytic_root(problem, ladder):
    E = ladder[1].E
    off = matching_determinant_ode(E * (1 + 1e-3), problem)
    assert abs(matching_determinant_ode(E, problem)) < 1e-6 * abs(off)


@pytest.mark.parametrize("lam", [0.5, 4.0])
def test_ode_determinant_scale_covariance(coupling, lam):
    E = 0.2 - 0.08j
    a = matching_determinant_ode(E, MatchingProblem(coupling))
    b = matching_determinant_ode(E / lam, MatchingProblem(coupling, r0=lam))
    # same dimensionless problem: identical up to the r0 in the normalisation
    assert abs(a - b * lam) < 1e-9 * abs(a)


def test_initial_scale_does_not_move_zeros(problem, ladder):
    E = ladder[0].E
    cfg = IntegratorConfig(initial_scale=1e3)
    assert abs(matching_determinant_ode(E, problem, cfg)) < 1e-8
    big = integrate_inward(E, problem.coupling, cfg, 1.0)
    ref = integrate_inward(E, problem.coupling, IntegratorConfig(), 1.0)
    assert abs(big.du / big.u - ref.du / ref.u) < 1e-10 * abs(ref.du / ref.u)


def test_rescaling_keeps_huge_solutions_finite(coupling):
    E = 0.13 - 0.13j
    cfg = IntegratorConfig(initial_scale=1e200)
    res = integrate_inward(E, coupling, cfg, 1.0)
    assert res.log_scale > 200
    assert abs(res.u) <= 1e100 and math.isfinite(abs(res.du))
    ref = integrate_inward(E, coupling, IntegratorConfig(), 1.0)
    assert abs(res.du / res.u - ref.du / ref.u) < 1e-10 * abs(ref.du / ref.u)
    # abs_tol does not scale with the data, so the step sequences differ slightly
    assert abs(res.values[0] / ref.values[0] / 1e200 - 1) < 1e-6
    huge = integrate_inward(E, coupling, IntegratorConfig(initial_scale=1e300), 1.0)
    assert abs(huge.du / huge.u - ref.du / ref.u) < 1e-10 * abs(ref.du / ref.u)
    with pytest.raises(IntegratorOverflow):
        InwardResult(1.0, 1.0, 800.0, 1, 0).values
    with pytest.raises(ValueError):
        integrate_inward(E, coupling, IntegratorConfig(initial_scale=0.0), 1.0)


def test_inner_flux_is_absorptive(problem, ladder):
    # j = Im(conj(u) u') along [r0, 2 r0] for the quasinormal mode
    for e in ladder[:3]:
        for r in np.linspace(problem.r0, 2 * problem.r0, 6):
            cfg = IntegratorConfig()
            res = integrate_inward(e.E, problem.coupling, cfg, r)
            assert (np.conj(res.u) * res.du).imag < 0


def test_guards(coupling):
    with pytest.raises(DomainError):
        integrate_inward(0.0, coupling, IntegratorConfig(), 1.0)
    with pytest.raises(DomainError):
        integrate_inward(1.0, coupling, IntegratorConfig(r_outer=5.0), 1.0)
    with pytest.raises(DomainError):
        integrate_inward(1.0, coupling, IntegratorConfig(), 50.0)
    with pytest.raises(DomainError):
        integrate_inward(1 - 0.5j, coupling, IntegratorConfig(r_outer=100.0), 1.0)
    with pytest.raises(ValueError):
        integrate_inward(1.0, coupling, IntegratorConfig(), 1.0, "ingoing")
    with pytest.raises(DomainError):
        integrate_inward(1.0, coupling_from(ModelParams(gamma=0.3)), IntegratorConfig(), 1.0)
    for bad in (dict(steps_per_decade=100), dict(r_outer=-1.0), dict(start_kr=10),
                dict(asymptotic_terms=0), dict(abs_tol=0.0)):
        with pytest.raises(ValueError):
            IntegratorConfig(**bad)


def test_step_budget(coupling):
    with pytest.raises(StepUnderflow):
        integrate_inward(0.13 - 0.13j, coupling, IntegratorConfig(max_steps=10), 1.0)


def test_with_r_outer(coupling):
    cfg = with_r_outer(IntegratorConfig(), 300.0)
    assert cfg.outer_radius(0.1) == 300.0
    assert IntegratorConfig().outer_radius(0.5) == 50.0


def test_analytic_and_ode_determinants_share_zeros(problem):
    # both vanish together; away from zeros they differ only by normalisation
    E = 0.1 - 0.02j
    a = matching_determinant(E, problem)
    b = matching_determinant_ode(E, problem)
    assert a != 0 and b != 0
