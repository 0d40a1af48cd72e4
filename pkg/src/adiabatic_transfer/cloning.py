"""Copying a photonic polarization qubit onto two emitters.

Symmetric scheme: both emitters start in (|00> + |11>)/sqrt(2) on the ring
used for entanglement generation, and the photon enters counter-clockwise.
Asymmetric scheme: emitters start in (|01> + |10>)/sqrt(2); a balanced beam
splitter sends the photon to A from both sides, and A's outputs meet again
at B. The loss rates of A and B set how much of the qubit each one keeps.

A click in either ring direction, without polarization analysis, heralds
the copies. The ideal copy is alpha|1> - beta|0>.
"""

from __future__ import annotations

import cmath
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .emitter import rates_for_eta_bar
from .errors import InterferenceConditionViolated, InvalidEfficiency, SetupError
from .network import (
    ModeSolver,
    PHASE_TOL,
    RingSetup,
    _phase_residual,
    herald,
    make_solver,
    require_interference,
    ring_pass,
    total_weight,
)
from .pulse import PulseEnvelope
from .qstate import PhotonQubit, fidelity, partial_trace, reference_state

BRANCHES = ("ccw", "cw")
BLOCH_AB2 = 1.0 / 6.0  # mean |alpha beta|^2 over the Bloch sphere


@dataclass(frozen=True, eq=False)
class CloneResult:
    rho_a: dict
    rho_b: dict
    p_branch: dict
    F_a: dict
    F_b: dict
    F_one_shot: float
    F_one_shot_b: float = float("nan")
    details: dict = field(default_factory=dict)


@dataclass(frozen=True)
class CloningSweepPoint:
    eta_bar_a: float
    eta_bar_b: float
    F_a_avg: float
    F_b_avg: float
    R: float


def _initial_state(q: PhotonQubit, unit, configs: tuple, directions: dict) -> dict:
    """Product of the emitter state over ``configs`` and the photon qubit.

    ``directions`` maps a ring direction to its complex amplitude.
    """
    norm = 1 / math.sqrt(len(configs))
    state = {}
    for cfg in configs:
        for pol, amp in (("+", q.alpha), ("-", q.beta)):
            for d, w in directions.items():
                c = norm * amp * w
                if c != 0:
                    state[(cfg, pol, d)] = c * unit
    return state


def _clone_result(state: dict, q: PhotonQubit, efficiency: float, details: dict) -> CloneResult:
    ref = reference_state(q)
    rho_a, rho_b, p, F_a, F_b = {}, {}, {}, {}, {}
    for branch in BRANCHES:
        outcome = herald(state, branch, None, efficiency)
        p[branch] = outcome.probability
        if outcome.conditional_state is None:
            continue
        rho_a[branch] = partial_trace(outcome.conditional_state, "A")
        rho_b[branch] = partial_trace(outcome.conditional_state, "B")
        F_a[branch] = fidelity(rho_a[branch], ref)
        F_b[branch] = fidelity(rho_b[branch], ref)
    p["lost"] = max(0.0, total_weight(state) - sum(p.values()))
    heralded = sum(p[b] for b in F_a)
    one_a = sum(p[b] * F_a[b] for b in F_a) / heralded if heralded else float("nan")
    one_b = sum(p[b] * F_b[b] for b in F_b) / heralded if heralded else float("nan")
    return CloneResult(rho_a, rho_b, p, F_a, F_b, one_a, one_b, details)


# --------------------------------------------------------------------------
# symmetric scheme


def simulate_symmetric_cloning(ring: RingSetup, q: PhotonQubit, solver=None) -> CloneResult:
    require_interference(ring, "destructive")
    solver = make_solver(solver)
    state = _initial_state(q, solver.unit(ring.input), (("0", "0"), ("1", "1")), {"ccw": 1.0})
    state = ring_pass(state, ring, solver)
    return _clone_result(state, q, ring.detector_efficiency, {"total_weight": total_weight(state)})


def symmetric_cloning_closed_form(s: float) -> dict:
    """Lossless symmetric scheme with a real input pulse of adiabatic sum s.

    Valid for r = 0. At s = 1 the values are 5/6, 3/4, 1/2 and 3/4.
    """
    return {
        "F_ccw": (4 + s) / (2 * (4 - s)),
        "p_ccw": 1 - s / 4,
        "F_cw": 0.5,
        "p_cw": s / 4,
        "F_one_shot": 0.5 + s / 4,
    }


# --------------------------------------------------------------------------
# asymmetric scheme


@dataclass(frozen=True, eq=False)
class AsymmetricSetup:
    """Geometry of the asymmetric scheme.

    Without an input envelope the simulation runs in the extreme adiabatic
    limit. ``splitter_phase`` is the relative phase of the two beam-splitter
    arms at A; ``L1``/``L2`` are the ring arms from A to B.
    """

    input: PulseEnvelope | None = None
    gamma_total: float = 1.0
    splitter_phase: float = 0.0
    L1: float = 10.0
    L2: float = 10.0
    carrier: float = 0.0
    c: float = 1.0
    detector_efficiency: float = 1.0

    def ring(self, eta_bar_a: float, eta_bar_b: float) -> RingSetup:
        return RingSetup(
            rates_for_eta_bar(eta_bar_a, self.gamma_total),
            rates_for_eta_bar(eta_bar_b, self.gamma_total),
            self.L1,
            self.L2,
            self.input,
            self.c,
            self.carrier,
            self.detector_efficiency,
        )


def _check_eta(value: float, name: str) -> float:
    value = float(value)
    if not 0 <= value <= 1:
        raise InvalidEfficiency(f"{name} must lie in [0, 1], got {value}")
    return value


def asymmetric_state(setup: AsymmetricSetup, q: PhotonQubit, eta_bar_a: float, eta_bar_b: float, solver=None) -> dict:
    """Final emitter-photon state of the asymmetric scheme."""
    eta_bar_a = _check_eta(eta_bar_a, "eta_bar_a")
    eta_bar_b = _check_eta(eta_bar_b, "eta_bar_b")
    if _phase_residual(setup.splitter_phase, 0.0) >= PHASE_TOL:
        raise InterferenceConditionViolated("beam-splitter arms must interfere constructively at A")
    if solver is None:
        solver = ModeSolver() if setup.input is None else make_solver("pulse")
    if not isinstance(solver, ModeSolver):
        warnings.warn("pulse-level asymmetric cloning is experimental", stacklevel=2)
    ring = setup.ring(eta_bar_a, eta_bar_b)
    require_interference(ring, "constructive")
    arms = {"ccw": 1 / math.sqrt(2), "cw": cmath.exp(1j * setup.splitter_phase) / math.sqrt(2)}
    state = _initial_state(q, solver.unit(setup.input), (("0", "1"), ("1", "0")), arms)
    return ring_pass(state, ring, solver)


def simulate_asymmetric_cloning(
    setup: AsymmetricSetup | None, q: PhotonQubit, eta_bar_a: float, eta_bar_b: float, solver=None
) -> CloneResult:
    setup = setup or AsymmetricSetup()
    state = asymmetric_state(setup, q, eta_bar_a, eta_bar_b, solver)
    F_a, F_b, R = asymmetric_fidelities(eta_bar_a, eta_bar_b, q.ab2)
    details = {
        "total_weight": total_weight(state),
        "closed_form": {"F_a": F_a, "F_b": F_b, "R": R},
    }
    return _clone_result(state, q, setup.detector_efficiency, details)


# --------------------------------------------------------------------------
# closed forms


def asymmetric_success_probability(eta_a: float, eta_b: float) -> float:
    return 1 - eta_a * (1 - eta_a) - (1 - eta_a) ** 2 * eta_b * (1 - eta_b)


def asymmetric_fidelities(eta_a: float, eta_b: float, ab2: float) -> tuple[float, float, float]:
    """(F_A, F_B, R) for an input with |alpha beta|^2 = ab2, lossless detectors."""
    R = asymmetric_success_probability(eta_a, eta_b)
    F_a = 1 - (1 - eta_a) ** 2 * (1 - 8 * ab2 * eta_b * (1 - eta_b)) / (2 * R)
    F_b = 1 - (
        (1 - eta_b + eta_a * eta_b) ** 2 - 8 * ab2 * eta_a * (1 - eta_a) * (1 - eta_b)
    ) / (2 * R)
    return F_a, F_b, R


def asymmetric_reduced_state_a(eta_a: float, eta_b: float, q: PhotonQubit) -> np.ndarray:
    """Emitter A's heralded state in the basis (|0>, |1>), for either branch."""
    R = asymmetric_success_probability(eta_a, eta_b)
    a2, b2 = abs(q.alpha) ** 2, abs(q.beta) ** 2
    y2 = (1 - eta_a) ** 2
    k = (eta_a + eta_b - eta_a * eta_b) * (1 - eta_b + eta_a * eta_b)
    rho11 = (R * a2 + 0.5 * y2 * (b2 - a2)) / R
    rho00 = (R * b2 + 0.5 * y2 * (a2 - b2)) / R
    rho10 = -k * q.alpha * np.conj(q.beta) / R
    return np.array([[rho00, np.conj(rho10)], [rho10, rho11]], dtype=complex)


def optimal_fidelities(eta_a: float) -> tuple[float, float, float]:
    d = 2 * (1 - eta_a + eta_a**2)
    return (1 + eta_a**2) / d, (1 + (1 - eta_a) ** 2) / d, 1 - eta_a * (1 - eta_a)


def phase_covariant_fidelities(eta_a: float) -> tuple[float, float, float]:
    eta_b = 1 / (1 + eta_a)
    return (
        0.5 + eta_a / (1 + eta_a**2),
        1 / (1 + eta_a**2),
        asymmetric_success_probability(eta_a, eta_b),
    )


def optimal_cloning_curve(n_points: int) -> list:
    """Universal cloners along eta_bar_b = 1."""
    if n_points < 2:
        raise SetupError("need at least two points")
    return [
        CloningSweepPoint(float(e), 1.0, *optimal_fidelities(float(e)))
        for e in np.linspace(0.0, 1.0, n_points)
    ]


def phase_covariant_curve(n_points: int) -> list:
    """Cloners of equatorial states along eta_bar_b = 1/(1 + eta_bar_a)."""
    if n_points < 2:
        raise SetupError("need at least two points")
    return [
        CloningSweepPoint(float(e), 1 / (1 + float(e)), *phase_covariant_fidelities(float(e)))
        for e in np.linspace(0.0, 1.0, n_points)
    ]


# --------------------------------------------------------------------------
# Bloch-sphere averages


def fibonacci_sphere(n: int = 128) -> list:
    """Quasi-uniform pure qubit states from a spherical Fibonacci lattice."""
    golden = math.pi * (3 - math.sqrt(5))
    states = []
    for i in range(n):
        z = 1 - (2 * i + 1) / n
        states.append(PhotonQubit.from_bloch(math.acos(z), (i * golden) % (2 * math.pi)))
    return states


def _mean_ab2_state() -> PhotonQubit:
    # sin^2(theta) / 4 = 1/6
    return PhotonQubit.from_bloch(math.asin(math.sqrt(4 * BLOCH_AB2)))


def bloch_average_fidelity(
    point: tuple[float, float],
    sampler: str = "closed",
    n_samples: int = 128,
    simulate: bool = False,
    setup: AsymmetricSetup | None = None,
) -> tuple[float, float, float]:
    """Input-averaged (F_A, F_B, R) at one (eta_bar_a, eta_bar_b).

    ``sampler='closed'`` uses that the fidelities depend on the input only
    through |alpha beta|^2, linearly, so the average is the value at
    |alpha beta|^2 = 1/6. ``sampler='fibonacci'`` averages over a lattice.
    With ``simulate`` the per-input values come from the amplitude-level
    construction instead of the closed forms.
    """
    eta_a, eta_b = _check_eta(point[0], "eta_bar_a"), _check_eta(point[1], "eta_bar_b")
    if sampler == "closed":
        states = [_mean_ab2_state()]
    elif sampler == "fibonacci":
        states = fibonacci_sphere(n_samples)
    else:
        raise SetupError(f"unknown sampler {sampler!r}")
    vals = []
    for q in states:
        if simulate:
            res = simulate_asymmetric_cloning(setup, q, eta_a, eta_b)
            vals.append((res.F_a["ccw"], res.F_b["ccw"], res.p_branch["ccw"] + res.p_branch["cw"]))
        else:
            vals.append(asymmetric_fidelities(eta_a, eta_b, q.ab2))
    F_a, F_b, R = np.mean(np.array(vals), axis=0)
    return float(F_a), float(F_b), float(R)


def cloning_sweep(
    eta_a_values,
    eta_b_values,
    sampler: str = "closed",
    n_samples: int = 128,
    simulate: bool = True,
    threads: int = 1,
) -> list:
    """Bloch-averaged cloning figures on a grid, ordered by (eta_bar_a, eta_bar_b)."""
    points = [(float(a), float(b)) for a in eta_a_values for b in eta_b_values]

    def work(pt):
        return CloningSweepPoint(pt[0], pt[1], *bloch_average_fidelity(pt, sampler, n_samples, simulate))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(work, points))
    return [work(pt) for pt in points]
