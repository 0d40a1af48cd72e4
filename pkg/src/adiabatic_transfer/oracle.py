"""Collision-model reference solution.

The field of every reservoir is cut into time bins of width dt. During one
step the emitter meets the current bin of each reservoir once. The coupling
Hamiltonian only connects |e> to the bright bin state
|B> = sum_j sqrt(gamma_j) |1_j> / sqrt(Gamma), so each step is an exact
two-state rotation by the angle sqrt(Gamma dt). No Markov or
Weisskopf-Wigner step is taken explicitly; those results emerge as dt -> 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .emitter import RESERVOIRS, EmitterRates
from .errors import StepTooLarge
from .pulse import PulseEnvelope, TimeGrid, resample

STEP_LIMIT = 0.01


@dataclass(frozen=True, eq=False)
class TimeBinField:
    dt: float
    amplitudes: dict  # reservoir -> complex array, one entry per bin

    @property
    def n_bins(self) -> int:
        return len(next(iter(self.amplitudes.values())))

    def probabilities(self) -> dict:
        return {k: float(np.sum(np.abs(v) ** 2)) for k, v in self.amplitudes.items()}


@dataclass(frozen=True, eq=False)
class CollisionResult:
    grid: TimeGrid
    psi_e: np.ndarray  # amplitude at the start of each bin
    field: TimeBinField
    psi_final: complex
    max_norm_deviation: float

    @property
    def p_res(self) -> dict:
        return self.field.probabilities()

    @property
    def p_transfer(self) -> float:
        p = self.p_res
        return p["W_ef"] + p["B_ef"]


def evolve_collision(
    f_in: PulseEnvelope,
    r: EmitterRates,
    dt: float,
    psi0: complex = 0.0,
    t_stop: float | None = None,
) -> CollisionResult:
    """Step the emitter through the time-bin field.

    The incoming photon occupies the W_es bins with amplitude f(t_k) sqrt(dt).
    ``psi0`` allows starting from an excited emitter.
    """
    gamma = r.gamma_total
    if gamma * dt >= STEP_LIMIT:
        raise StepTooLarge(f"Gamma * dt = {gamma * dt:.3g} must stay below {STEP_LIMIT}")
    t_stop = f_in.grid.t_end if t_stop is None else t_stop
    grid = TimeGrid.covering(f_in.grid.t0, t_stop, dt)
    incoming = resample(f_in, grid).samples * math.sqrt(dt)

    theta = math.sqrt(gamma * dt)
    cos, sin = math.cos(theta), math.sin(theta)
    weights = [math.sqrt(r.rate(name) / gamma) for name in RESERVOIRS]
    w_in = weights[0]  # W_es is the input channel
    out = np.zeros((len(RESERVOIRS), grid.n), dtype=complex)
    psi_traj = np.empty(grid.n, dtype=complex)

    psi = complex(psi0)
    a_list = incoming.tolist()
    remaining = float(np.sum(np.abs(incoming) ** 2))
    total0 = abs(psi) ** 2 + remaining
    emitted = 0.0
    worst = 0.0
    for k, a in enumerate(a_list):
        psi_traj[k] = psi
        bright = w_in * a
        delta = (cos - 1.0) * bright + 1j * sin * psi
        psi = cos * psi + 1j * sin * bright
        col = [w * delta for w in weights]
        col[0] += a
        out[:, k] = col
        remaining -= abs(a) ** 2
        emitted += sum(abs(c) ** 2 for c in col)
        worst = max(worst, abs(abs(psi) ** 2 + emitted + remaining - total0))

    field = TimeBinField(dt, {name: out[i] for i, name in enumerate(RESERVOIRS)})
    return CollisionResult(grid, psi_traj, field, psi, worst)


def emitted_envelope(result: CollisionResult, reservoir: str, carrier: float = 0.0) -> PulseEnvelope:
    samples = result.field.amplitudes[reservoir] / math.sqrt(result.field.dt)
    return PulseEnvelope(result.grid, samples, None, carrier)
