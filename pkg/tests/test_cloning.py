from __future__ import annotations

import math

import numpy as np
import pytest

from adiabatic_transfer.cloning import (
    AsymmetricSetup,
    asymmetric_fidelities,
    asymmetric_reduced_state_a,
    asymmetric_success_probability,
    bloch_average_fidelity,
    cloning_sweep,
    fibonacci_sphere,
    optimal_cloning_curve,
    phase_covariant_curve,
    simulate_asymmetric_cloning,
    simulate_symmetric_cloning,
    symmetric_cloning_closed_form,
)
from adiabatic_transfer.emitter import EmitterRates
from adiabatic_transfer.errors import InterferenceConditionViolated, InvalidEfficiency, SetupError
from adiabatic_transfer.network import RingSetup
from adiabatic_transfer.pulse import gaussian_for_ratio
from adiabatic_transfer.qstate import PhotonQubit

from conftest import exact_gaussian_s

SYM = EmitterRates.symmetric(0.25)
EQUATOR = PhotonQubit(1 / math.sqrt(2), 1 / math.sqrt(2))
PC_A = math.sqrt(2) - 1
PC_B = 1 / math.sqrt(2)


def _ring(x):
    return RingSetup.with_phase(SYM, SYM, gaussian_for_ratio(x, carrier=1000.0))


def _inputs(n):
    return fibonacci_sphere(n)


# -- symmetric scheme ----------------------------------------------------


@pytest.fixture(scope="module")
def symmetric_extreme():
    ring = _ring(0.005)
    return [simulate_symmetric_cloning(ring, q) for q in _inputs(20)]


def test_symmetric_extreme_adiabatic(symmetric_extreme):
    for res in symmetric_extreme:
        assert res.F_a["ccw"] == pytest.approx(5 / 6, abs=1e-3)
        assert res.F_b["ccw"] == pytest.approx(5 / 6, abs=1e-3)
        assert res.p_branch["ccw"] == pytest.approx(3 / 4, abs=1e-3)
        assert res.F_a["cw"] == pytest.approx(1 / 2, abs=1e-3)
        assert res.F_one_shot == pytest.approx(3 / 4, abs=1e-3)
        assert sum(res.p_branch.values()) == pytest.approx(1, abs=1e-8)


def test_symmetric_universal(symmetric_extreme):
    values = [r.F_a["ccw"] for r in symmetric_extreme]
    assert max(values) - min(values) < 1e-3


def test_symmetric_mode_level_exact():
    for q in _inputs(7):
        res = simulate_symmetric_cloning(_ring(0.01), q, solver="mode")
        cf = symmetric_cloning_closed_form(1.0)
        assert res.F_a["ccw"] == pytest.approx(cf["F_ccw"], abs=1e-14)
        assert res.F_b["ccw"] == pytest.approx(cf["F_ccw"], abs=1e-14)
        assert res.p_branch["ccw"] == pytest.approx(cf["p_ccw"], abs=1e-14)
        assert res.F_a["cw"] == pytest.approx(0.5, abs=1e-14)
        assert res.F_one_shot == pytest.approx(0.75, abs=1e-14)


def test_symmetric_cw_branch_maximally_mixed():
    res = simulate_symmetric_cloning(_ring(0.01), EQUATOR, solver="mode")
    np.testing.assert_allclose(res.rho_a["cw"], np.eye(2) / 2, atol=1e-14)


@pytest.mark.parametrize("x, tol", [(0.02, 2e-6), (0.05, 1e-5)])
def test_symmetric_matches_leading_order_closed_form(x, tol):
    # the closed form holds up to terms far below the x^2 corrections
    cf = symmetric_cloning_closed_form(exact_gaussian_s(x))
    for q in _inputs(3):
        res = simulate_symmetric_cloning(_ring(x), q)
        assert res.F_a["ccw"] == pytest.approx(cf["F_ccw"], abs=tol)
        assert res.p_branch["ccw"] == pytest.approx(cf["p_ccw"], abs=tol)
        assert res.F_one_shot == pytest.approx(cf["F_one_shot"], abs=1e-12)


def test_symmetric_one_shot_above_classical():
    assert symmetric_cloning_closed_form(1.0)["F_one_shot"] > 2 / 3


def test_symmetric_requires_destructive():
    ring = RingSetup(SYM, SYM, 10.0, 10.0, gaussian_for_ratio(0.01, carrier=1000.0))
    with pytest.raises(InterferenceConditionViolated):
        simulate_symmetric_cloning(ring, EQUATOR)


# -- asymmetric golden values --------------------------------------------


def test_asymmetric_optimal_point():
    res = simulate_asymmetric_cloning(None, EQUATOR, 0.5, 1.0)
    for branch in ("ccw", "cw"):
        assert res.F_a[branch] == pytest.approx(5 / 6, abs=1e-9)
        assert res.F_b[branch] == pytest.approx(5 / 6, abs=1e-9)
    assert res.p_branch["ccw"] + res.p_branch["cw"] == pytest.approx(0.75, abs=1e-9)


def test_asymmetric_phase_covariant_point():
    res = simulate_asymmetric_cloning(None, EQUATOR, PC_A, PC_B)
    target = (2 + math.sqrt(2)) / 4
    assert res.F_a["ccw"] == pytest.approx(target, abs=1e-9)
    assert res.F_b["ccw"] == pytest.approx(target, abs=1e-9)
    assert res.p_branch["ccw"] + res.p_branch["cw"] == pytest.approx(4 * (3 - 2 * math.sqrt(2)), abs=1e-9)


def test_asymmetric_eta_a_zero_eta_b_one():
    q = PhotonQubit.from_bloch(1.0, 0.7)
    res = simulate_asymmetric_cloning(None, q, 0.0, 1.0)
    assert res.F_b["ccw"] == pytest.approx(1, abs=1e-12)
    assert res.F_a["ccw"] == pytest.approx(asymmetric_fidelities(0.0, 1.0, q.ab2)[0], abs=1e-12)
    assert abs(res.rho_a["ccw"][0, 1]) < 1e-14


def test_asymmetric_eta_a_zero_keeps_coherence_for_partial_b():
    q = PhotonQubit.from_bloch(1.0, 0.7)
    res = simulate_asymmetric_cloning(None, q, 0.0, 0.4)
    closed = asymmetric_reduced_state_a(0.0, 0.4, q)
    np.testing.assert_allclose(res.rho_a["ccw"], closed, atol=1e-12)
    assert abs(closed[0, 1]) > 0.05


@pytest.mark.parametrize("point", [(0.3, 0.8), (0.5, 1.0), (0.9, 0.2), (0.0, 0.4), (1.0, 0.0)])
def test_reduced_state_a_matches_simulation(point):
    for q in _inputs(5):
        res = simulate_asymmetric_cloning(None, q, *point)
        closed = asymmetric_reduced_state_a(*point, q)
        for branch in ("ccw", "cw"):
            np.testing.assert_allclose(res.rho_a[branch], closed, atol=1e-12)


def test_asymmetric_grid_against_closed_forms():
    grid = np.linspace(0, 1, 21)
    inputs = _inputs(16)
    worst = 0.0
    for a in grid:
        for b in grid:
            for q in inputs:
                res = simulate_asymmetric_cloning(None, q, a, b)
                F_a, F_b, R = asymmetric_fidelities(a, b, q.ab2)
                worst = max(worst, abs(res.F_a["ccw"] - F_a), abs(res.F_b["ccw"] - F_b))
                worst = max(worst, abs(res.p_branch["ccw"] + res.p_branch["cw"] - R))
                assert abs(res.p_branch["ccw"] - res.p_branch["cw"]) < 1e-10
                assert sum(res.p_branch.values()) == pytest.approx(1, abs=1e-8)
                for rho in list(res.rho_a.values()) + list(res.rho_b.values()):
                    assert abs(np.trace(rho) - 1) < 1e-10
                    assert np.min(np.linalg.eigvalsh(rho)) > -1e-10
    assert worst < 1e-9


def test_invalid_efficiency():
    with pytest.raises(InvalidEfficiency):
        simulate_asymmetric_cloning(None, EQUATOR, 1.2, 0.5)
    with pytest.raises(InvalidEfficiency):
        bloch_average_fidelity((0.5, -0.1))


def test_splitter_must_be_constructive():
    with pytest.raises(InterferenceConditionViolated):
        simulate_asymmetric_cloning(AsymmetricSetup(splitter_phase=math.pi / 2), EQUATOR, 0.5, 1.0)


def test_pulse_level_asymmetric_is_flagged_and_close():
    setup = AsymmetricSetup(input=gaussian_for_ratio(0.005))
    with pytest.warns(UserWarning, match="experimental"):
        res = simulate_asymmetric_cloning(setup, EQUATOR, 0.5, 1.0)
    assert res.F_a["ccw"] == pytest.approx(5 / 6, abs=1e-3)
    assert res.F_b["ccw"] == pytest.approx(5 / 6, abs=1e-3)
    assert res.p_branch["ccw"] + res.p_branch["cw"] == pytest.approx(0.75, abs=1e-3)


# -- curves and averages --------------------------------------------------


def test_optimal_curve():
    pts = {p.eta_bar_a: p for p in optimal_cloning_curve(5)}
    assert (pts[0.5].F_a_avg, pts[0.5].F_b_avg, pts[0.5].R) == pytest.approx((5 / 6, 5 / 6, 0.75), abs=1e-15)
    assert (pts[1.0].F_a_avg, pts[1.0].F_b_avg, pts[1.0].R) == pytest.approx((1, 0.5, 1), abs=1e-15)
    assert (pts[0.0].F_a_avg, pts[0.0].F_b_avg, pts[0.0].R) == pytest.approx((0.5, 1, 1), abs=1e-15)
    with pytest.raises(SetupError):
        optimal_cloning_curve(1)


def test_optimal_curve_matches_simulation():
    for p in optimal_cloning_curve(11):
        for q in _inputs(4):
            res = simulate_asymmetric_cloning(None, q, p.eta_bar_a, p.eta_bar_b)
            assert res.F_a["ccw"] == pytest.approx(p.F_a_avg, abs=1e-9)
            assert res.F_b["ccw"] == pytest.approx(p.F_b_avg, abs=1e-9)
            assert res.p_branch["ccw"] + res.p_branch["cw"] == pytest.approx(p.R, abs=1e-9)


def test_phase_covariant_curve():
    pts = phase_covariant_curve(11)
    assert (pts[0].F_a_avg, pts[0].F_b_avg) == pytest.approx((0.5, 1.0), abs=1e-15)
    target = (2 + math.sqrt(2)) / 4
    F_a, F_b, _ = asymmetric_fidelities(PC_A, 1 / (1 + PC_A), 0.25)
    assert (F_a, F_b) == pytest.approx((target, target), abs=1e-12)
    for p in pts:
        for phi in (0.0, 1.3, 4.0):
            q = PhotonQubit.from_bloch(math.pi / 2, phi)
            res = simulate_asymmetric_cloning(None, q, p.eta_bar_a, p.eta_bar_b)
            assert res.F_a["ccw"] == pytest.approx(p.F_a_avg, abs=1e-9)
            assert res.F_b["ccw"] == pytest.approx(p.F_b_avg, abs=1e-9)
            assert res.p_branch["ccw"] + res.p_branch["cw"] == pytest.approx(p.R, abs=1e-9)


def test_average_at_universal_point():
    assert bloch_average_fidelity((0.5, 1.0)) == pytest.approx((5 / 6, 5 / 6, 0.75), abs=1e-12)


def test_average_symmetric_line():
    for a in np.linspace(0.05, 0.5, 10):
        F_a, F_b, _ = bloch_average_fidelity((a, a / (1 - a)))
        assert abs(F_a - F_b) < 1e-9


def test_average_R_on_eta_b_one():
    for a in np.linspace(0, 1, 6):
        for sampler in ("closed", "fibonacci"):
            assert bloch_average_fidelity((a, 1.0), sampler)[2] == pytest.approx(1 - a * (1 - a), abs=1e-12)


def test_samplers_agree():
    for point in [(0.2, 0.7), (0.6, 0.3), (1.0, 0.5)]:
        closed = bloch_average_fidelity(point)
        lattice = bloch_average_fidelity(point, "fibonacci", 128)
        assert max(abs(a - b) for a, b in zip(closed, lattice)) < 2e-3
        simulated = bloch_average_fidelity(point, simulate=True)
        assert max(abs(a - b) for a, b in zip(closed, simulated)) < 1e-9


def test_fibonacci_lattice_mean():
    assert np.mean([q.ab2 for q in fibonacci_sphere(128)]) == pytest.approx(1 / 6, abs=1e-4)


def test_sweep_order_and_threads():
    a = cloning_sweep([0.0, 0.5, 1.0], [0.25, 1.0], simulate=True)
    b = cloning_sweep([0.0, 0.5, 1.0], [0.25, 1.0], simulate=True, threads=4)
    assert [(p.eta_bar_a, p.eta_bar_b) for p in a] == sorted((p.eta_bar_a, p.eta_bar_b) for p in a)
    assert a == b


def test_success_probability_formula():
    assert asymmetric_success_probability(0.5, 1.0) == pytest.approx(0.75)
    assert asymmetric_success_probability(PC_A, PC_B) == pytest.approx(4 * (3 - 2 * math.sqrt(2)), abs=1e-12)
