"""Photon routing between emitters and heralded two-emitter states.

The joint emitter-photon state is kept as a dictionary that maps a label
(emitter configuration, polarization, channel) to the photon amplitude in
that sector. Amplitudes are either ``PulseEnvelope`` objects (pulse-level
simulation) or complex numbers multiplying one fixed envelope (mode-level,
the extreme adiabatic limit). Every emitter is a Lambda system: ground
state '0' absorbs sigma+ photons, ground state '1' absorbs sigma- photons,
and both share one excited state. An emitter that decayed into the loss
channel is marked 'o'.
"""

from __future__ import annotations

import cmath
import math
import warnings
from dataclasses import dataclass, field
from functools import reduce
from operator import add

import numpy as np
from scipy.integrate import trapezoid

from . import scatter as _scatter
from .emitter import EmitterRates, eta_bar
from .errors import (
    AsymmetricRates,
    InterferenceConditionViolated,
    SeparationViolated,
    SetupError,
    TrajectoryNotDecayed,
)
from .pulse import PulseEnvelope, bandwidth, delayed, inner_product, norm_squared
from .qstate import TwoQubitState
from .scatter import orthogonal_decomposition, solve_driven_decay

POLARIZATION = {"0": "+", "1": "-"}
LOST = "lost"
PHASE_TOL = 1e-6
BANDWIDTH_TOL = 0.01


# --------------------------------------------------------------------------
# amplitude algebra


def _inner(a, b) -> complex:
    if isinstance(a, PulseEnvelope):
        return inner_product(a, b)
    return complex(np.conj(a) * b)


def _weight(a) -> float:
    if isinstance(a, PulseEnvelope):
        return norm_squared(a)
    return abs(a) ** 2


class PulseSolver:
    """Excited amplitude driven by a pulse envelope, integrated in time."""

    def __init__(self, order: int = _scatter.DEFAULT_INTEGRATOR_ORDER):
        self.order = order

    def unit(self, envelope: PulseEnvelope | None):
        if envelope is None:
            raise SetupError("a pulse-level simulation needs an input envelope")
        return envelope

    def excite(self, drive: PulseEnvelope, gamma_total: float) -> PulseEnvelope:
        psi = solve_driven_decay(1j * drive.samples, drive.grid.dt, gamma_total, self.order)
        if abs(psi[-1]) ** 2 >= _scatter.DECAY_THRESHOLD:
            raise TrajectoryNotDecayed("emitter still excited at the end of the grid")
        return PulseEnvelope(drive.grid, psi, None, drive.carrier)


class ModeSolver:
    """Extreme adiabatic limit: Psi_e follows the drive instantaneously."""

    def unit(self, envelope=None) -> complex:
        return 1.0 + 0j

    def excite(self, drive: complex, gamma_total: float) -> complex:
        return 1j * drive / (0.5 * gamma_total)


def make_solver(solver):
    if solver is None or solver == "pulse":
        return PulseSolver()
    if solver == "mode":
        return ModeSolver()
    return solver


def _couplings(r: EmitterRates, forward: str, backward: str) -> dict:
    return {
        ("0", forward): r.gamma_w_es,
        ("0", backward): r.gamma_b_es,
        ("1", forward): r.gamma_w_ef,
        ("1", backward): r.gamma_b_ef,
    }


def _set(cfg: tuple, index: int, value: str) -> tuple:
    return cfg[:index] + (value,) + cfg[index + 1 :]


def scatter_emitter(
    state: dict,
    index: int,
    rates: EmitterRates,
    solver,
    forward: str,
    backward: str,
    name: str = "",
    trace: dict | None = None,
) -> dict:
    """Let emitter ``index`` interact with every photon sector that reaches it.

    Sectors that differ only in this emitter's ground state share the
    excited state, so they are combined into one drive before solving.
    """
    kappa = _couplings(rates, forward, backward)
    out: dict = {}

    def put(key, amp):
        out[key] = out[key] + amp if key in out else amp

    groups: dict = {}
    for key, amp in state.items():
        cfg, pol, channel = key
        g = cfg[index]
        if channel in (forward, backward) and g in POLARIZATION and pol == POLARIZATION[g]:
            groups.setdefault(_set(cfg, index, "*"), []).append((g, channel, amp))
        else:
            put(key, amp)

    for rest, items in groups.items():
        drive = reduce(add, [math.sqrt(kappa[g, ch]) * amp for g, ch, amp in items])
        psi = solver.excite(drive, rates.gamma_total)
        if trace is not None:
            trace[(name, rest)] = psi
        for g, ch, amp in items:
            put((_set(rest, index, g), POLARIZATION[g], ch), amp)
        for (g, ch), k in kappa.items():
            if k > 0:
                put((_set(rest, index, g), POLARIZATION[g], ch), 1j * math.sqrt(k) * psi)
        if rates.gamma_other > 0:
            put((_set(rest, index, "o"), LOST, name), 1j * math.sqrt(rates.gamma_other) * psi)
    return out


def route(state: dict, rules: dict) -> dict:
    """Move photons between channels.

    ``rules`` maps a channel to ``(new_channel, phase, delay)``. Channels
    without a rule are left alone.
    """
    out: dict = {}
    for (cfg, pol, channel), amp in state.items():
        if channel in rules:
            channel, phase, delay = rules[channel]
            if delay and isinstance(amp, PulseEnvelope):
                amp = delayed(amp, delay)
            amp = amp * phase
        key = (cfg, pol, channel)
        out[key] = out[key] + amp if key in out else amp
    return out


def total_weight(state: dict) -> float:
    return float(sum(_weight(a) for a in state.values()))


def project(state: dict, channel: str, polarization: str | None = None) -> tuple[np.ndarray, float]:
    """Unnormalized two-emitter density matrix after a click in ``channel``.

    Photon sectors with different polarization are orthogonal and are summed
    incoherently; a polarization-resolving detector keeps only one of them.
    """
    by_pol: dict = {}
    for (cfg, pol, ch), amp in state.items():
        if ch != channel or pol == LOST or (polarization is not None and pol != polarization):
            continue
        if any(g not in "01" for g in cfg):
            raise SetupError(f"photon in {channel} with emitter configuration {cfg}")
        by_pol.setdefault(pol, {})[int("".join(cfg), 2)] = amp
    rho = np.zeros((4, 4), dtype=complex)
    for amps in by_pol.values():
        for i, ai in amps.items():
            for j, aj in amps.items():
                rho[i, j] += _inner(aj, ai)
    rho = 0.5 * (rho + rho.conj().T)
    return rho, float(np.trace(rho).real)


@dataclass(frozen=True, eq=False)
class HeraldedOutcome:
    detector: str
    conditional_state: TwoQubitState | None
    probability: float
    details: dict = field(default_factory=dict)


def herald(
    state: dict, channel: str, polarization: str | None = None, efficiency_: float = 1.0
) -> HeraldedOutcome:
    rho, p = project(state, channel, polarization)
    label = channel if polarization is None else f"{channel}{polarization}"
    if p < 1e-15:
        return HeraldedOutcome(label, None, 0.0)
    return HeraldedOutcome(label, TwoQubitState(rho / p), efficiency_ * p)


# --------------------------------------------------------------------------
# linear waveguide


@dataclass(frozen=True, eq=False)
class LinearSetup:
    emitter_a: EmitterRates
    emitter_b: EmitterRates
    L_ab: float
    L_bd: float
    input: PulseEnvelope
    c: float = 1.0
    detector_efficiency: float = 1.0


def check_separation(setup: LinearSetup) -> float:
    """Ratio of emitter spacing to pulse length; below 1 is an error, below 10 a warning."""
    if norm_squared(setup.input) == 0:
        raise SetupError("input pulse is zero")
    ratio = setup.L_ab * bandwidth(setup.input) / setup.c
    if ratio < 1:
        raise SeparationViolated(f"L_ab * bandwidth / c = {ratio:.3g} < 1: interactions overlap")
    if ratio < 10:
        warnings.warn(f"emitters only {ratio:.3g} pulse lengths apart", stacklevel=2)
    return ratio


def _moment_from_scatter(psi_occupation: float, r: EmitterRates) -> float:
    return psi_occupation * r.gamma_total**2 / (4 * r.gamma_w_es)


def _linear_formula(setup: LinearSetup) -> dict:
    """Herald rate from the single-emitter quantities s, r and s_perp.

    This sums A's and B's emission probabilities without the interference
    term between B's response to the parallel and orthogonal parts of its
    input, which the amplitude-level result retains.
    """
    f = setup.input
    a, b = setup.emitter_a, setup.emitter_b
    if a.gamma_w_es == 0:
        return {}
    res_a = _scatter.scatter(f, a)
    s_a = _moment_from_scatter(res_a.trajectory.occupation(), a)
    k_a = 2 * a.gamma_w_es / a.gamma_total
    dec = orthogonal_decomposition(res_a.out_w_es, f)
    r_a = -dec.parallel_coeff.imag / k_a
    q_a = 4 * a.gamma_w_es * a.gamma_w_ef / a.gamma_total**2
    details = {
        "s": s_a,
        "r": r_a,
        "parallel_coeff": [dec.parallel_coeff.real, dec.parallel_coeff.imag],
        "perp_weight": dec.perp_weight,
    }
    if b.gamma_w_es == 0:
        details.update(s_b=0.0, s_perp=0.0, R_formula=q_a * s_a)
        return details
    q_b = 4 * b.gamma_w_es * b.gamma_w_ef / b.gamma_total**2
    s_b = _moment_from_scatter(_scatter.integrate_excited_amplitude(f, b).occupation(), b)
    s_perp = cross = 0.0
    if dec.perp_weight > 0:
        psi_par = _scatter.integrate_excited_amplitude(f, b).psi_e
        psi_perp = _scatter.integrate_excited_amplitude(dec.perp, b)
        s_perp = _moment_from_scatter(psi_perp.occupation(), b)
        overlap = trapezoid(np.conj(psi_par) * psi_perp.psi_e, dx=f.grid.dt)
        cross = 2 * b.gamma_w_ef * (
            np.conj(dec.parallel_coeff) * math.sqrt(dec.perp_weight) * overlap
        ).real
    R = q_a * s_a + abs(dec.parallel_coeff) ** 2 * q_b * s_b + dec.perp_weight * q_b * s_perp
    details.update(s_b=s_b, s_perp=s_perp, R_formula=R, R_cross_term=float(cross))
    return details


def simulate_linear_entanglement(setup: LinearSetup, solver=None, trace: dict | None = None) -> HeraldedOutcome:
    """Two emitters on a line, heralded by a right-going sigma- photon.

    Left-going photons never reach the detector and count as non-heralded.
    """
    check_separation(setup)
    solver = make_solver(solver)
    carrier = setup.input.carrier
    state = {(("0", "0"), "+", "right"): solver.unit(setup.input)}
    state = scatter_emitter(state, 0, setup.emitter_a, solver, "right", "left", "A", trace)
    state = route(state, {
        "right": ("right", cmath.exp(1j * carrier * setup.L_ab / setup.c), 0.0),
        "left": ("exit_a", 1.0, 0.0),
    })
    state = scatter_emitter(state, 1, setup.emitter_b, solver, "right", "left", "B", trace)
    state = route(state, {
        "right": ("detector", cmath.exp(1j * carrier * setup.L_bd / setup.c), 0.0),
        "left": ("exit_b", 1.0, 0.0),
    })
    outcome = herald(state, "detector", "-", setup.detector_efficiency)
    details = {"R_amplitude": outcome.probability, "total_weight": total_weight(state)}
    if isinstance(solver, PulseSolver):
        formula = _linear_formula(setup)
        if formula:
            formula["R_formula"] *= setup.detector_efficiency
            formula["R_cross_term"] = formula.get("R_cross_term", 0.0) * setup.detector_efficiency
            formula["R_difference"] = outcome.probability - formula["R_formula"]
        details.update(formula)
    else:
        a, b = setup.emitter_a, setup.emitter_b
        details["R_formula"] = setup.detector_efficiency * (
            4 * a.gamma_w_es * a.gamma_w_ef / a.gamma_total**2
            + abs(1 - 2 * a.gamma_w_es / a.gamma_total) ** 2
            * 4 * b.gamma_w_es * b.gamma_w_ef / b.gamma_total**2
        )
    return HeraldedOutcome(outcome.detector, outcome.conditional_state, outcome.probability, details)


# --------------------------------------------------------------------------
# ring with circulators


@dataclass(frozen=True, eq=False)
class RingSetup:
    """Two emitters on a ring; A's two output directions reach B over paths L1 and L2.

    Each emitter couples with rate gamma_w_* to counter-clockwise ('ccw')
    photons and with gamma_b_* to clockwise ('cw') photons.
    """

    emitter_a: EmitterRates
    emitter_b: EmitterRates
    L1: float
    L2: float
    input: PulseEnvelope | None
    c: float = 1.0
    carrier: float | None = None
    detector_efficiency: float = 1.0

    @property
    def omega(self) -> float:
        if self.carrier is not None:
            return self.carrier
        return self.input.carrier if self.input is not None else 0.0

    @property
    def interference_phase(self) -> float:
        return (self.omega * (self.L1 - self.L2) / self.c) % (2 * math.pi)

    @classmethod
    def with_phase(
        cls,
        emitter_a: EmitterRates,
        emitter_b: EmitterRates,
        input: PulseEnvelope | None,
        phase: float = math.pi,
        L1: float = 10.0,
        carrier: float | None = None,
        c: float = 1.0,
        **kwargs,
    ) -> RingSetup:
        """Choose L2 slightly longer than L1 so that omega (L1 - L2)/c = -phase mod 2 pi."""
        omega = carrier if carrier is not None else (input.carrier if input is not None else 0.0)
        target = phase % (2 * math.pi)
        if target == 0:
            return cls(emitter_a, emitter_b, L1, L1, input, c, carrier, **kwargs)
        if omega <= 0:
            raise SetupError("a nonzero interference phase needs a positive carrier frequency")
        L2 = L1 + (2 * math.pi - target) * c / omega
        return cls(emitter_a, emitter_b, L1, L2, input, c, carrier, **kwargs)


@dataclass(frozen=True)
class InterferenceReport:
    target: str
    phase_residual: float
    bandwidth_ratio: float
    passed: bool


def _phase_residual(phase: float, target: float) -> float:
    return abs(math.remainder(phase - target, 2 * math.pi))


def check_interference(setup: RingSetup, target: str = "destructive") -> InterferenceReport:
    goal = {"destructive": math.pi, "constructive": 0.0}.get(target)
    if goal is None:
        raise SetupError("target must be 'constructive' or 'destructive'")
    residual = _phase_residual(setup.interference_phase, goal)
    ratio = 0.0
    if setup.input is not None and norm_squared(setup.input) > 0:
        ratio = abs(setup.L1 - setup.L2) * bandwidth(setup.input) / setup.c
    return InterferenceReport(target, residual, ratio, residual < PHASE_TOL and ratio < BANDWIDTH_TOL)


def require_interference(setup: RingSetup, target: str) -> None:
    report = check_interference(setup, target)
    if not report.passed:
        raise InterferenceConditionViolated(
            f"{target} interference needed: phase residual {report.phase_residual:.3g} rad, "
            f"path mismatch {report.bandwidth_ratio:.3g} pulse lengths"
        )


def ring_pass(state: dict, setup: RingSetup, solver, trace: dict | None = None) -> dict:
    """Scatter at A, carry both directions to B, scatter at B."""
    state = scatter_emitter(state, 0, setup.emitter_a, solver, "ccw", "cw", "A", trace)
    w = setup.omega / setup.c
    state = route(state, {
        "ccw": ("ccw", cmath.exp(1j * w * setup.L1), 0.0),
        "cw": ("cw", cmath.exp(1j * w * setup.L2), (setup.L2 - setup.L1) / setup.c),
    })
    return scatter_emitter(state, 1, setup.emitter_b, solver, "ccw", "cw", "B", trace)


def _ring_formula(setup: RingSetup, solver) -> dict:
    try:
        ea, eb = eta_bar(setup.emitter_a), eta_bar(setup.emitter_b)
    except AsymmetricRates:
        return {}
    if isinstance(solver, ModeSolver):
        s_a = s_b = 1.0
    else:
        def s_of(r):
            if r.gamma_w_es == 0:
                return 0.0
            traj = _scatter.integrate_excited_amplitude(setup.input, r)
            return _moment_from_scatter(traj.occupation(), r)
        s_a, s_b = s_of(setup.emitter_a), s_of(setup.emitter_b)
    R = setup.detector_efficiency * 0.5 * (ea**2 * s_a + eb**2 * s_b)
    return {"s_a": s_a, "s_b": s_b, "eta_bar_a": ea, "eta_bar_b": eb, "R_formula": R}


def simulate_ring_entanglement(setup: RingSetup, solver=None, trace: dict | None = None) -> list:
    """Both detectors of the ring; each outcome heralds on a sigma- photon."""
    require_interference(setup, "destructive")
    solver = make_solver(solver)
    state = {(("0", "0"), "+", "ccw"): solver.unit(setup.input)}
    state = ring_pass(state, setup, solver, trace)
    outcomes = [herald(state, d, "-", setup.detector_efficiency) for d in ("ccw", "cw")]
    details = _ring_formula(setup, solver)
    details["R_amplitude"] = sum(o.probability for o in outcomes)
    details["total_weight"] = total_weight(state)
    return [HeraldedOutcome(o.detector, o.conditional_state, o.probability, details) for o in outcomes]
