from __future__ import annotations

import math

import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from adiabatic_transfer.cloning import asymmetric_fidelities, simulate_asymmetric_cloning
from adiabatic_transfer.pulse import norm_squared
from adiabatic_transfer.qstate import PhotonQubit
from adiabatic_transfer.scatter import overlap_with_input, predicted_overlap, scatter

from conftest import random_config

seeds = st.integers(0, 2**32 - 1)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_conservation_any_pulse(seed):
    f, r, _ = random_config(np.random.default_rng(seed), 0.01, 0.3, unit_norm=False)
    res = scatter(f, r)
    n2 = norm_squared(f)
    assert abs(sum(res.p_res.values()) - n2) < 1e-8
    others = sum(v for k, v in res.p_res.items() if k != "W_es")
    assert abs(norm_squared(res.out_w_es) + others - n2) < 1e-8
    assert abs(norm_squared(res.out_w_ef) - res.p_res["W_ef"]) < 1e-8
    assert all(-1e-12 <= v <= n2 + 1e-12 for v in res.p_res.values())
    assert res.p_transfer <= n2 + 1e-12


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_overlap_identity_random(seed):
    f, r, _ = random_config(np.random.default_rng(seed), 0.01, 0.05)
    assert abs(overlap_with_input(f, scatter(f, r)) - predicted_overlap(f, r)) < 1e-4


@settings(max_examples=100, deadline=None)
@given(st.floats(0, 1), st.floats(0, 1), st.floats(0, math.pi), st.floats(0, 2 * math.pi))
def test_asymmetric_closed_forms(eta_a, eta_b, theta, phi):
    q = PhotonQubit.from_bloch(theta, phi)
    res = simulate_asymmetric_cloning(None, q, eta_a, eta_b)
    F_a, F_b, R = asymmetric_fidelities(eta_a, eta_b, q.ab2)
    assert abs(res.p_branch["ccw"] + res.p_branch["cw"] - R) < 1e-12
    assert abs(res.p_branch["ccw"] - res.p_branch["cw"]) < 1e-10
    if R > 1e-6:
        assert abs(res.F_a["ccw"] - F_a) < 1e-9
        assert abs(res.F_b["ccw"] - F_b) < 1e-9
        assert 0 <= F_a <= 1 + 1e-12 and 0 <= F_b <= 1 + 1e-12
