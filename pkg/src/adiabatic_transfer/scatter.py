"""Scattering of a single photon off one emitter.

The excited-state amplitude obeys

    dPsi/dt = -Gamma/2 * Psi + i sqrt(gamma_w_es) f_in(t),

which is linear with a stiff decay term. The integrator applies the decay
exactly and integrates the source against a local polynomial interpolant of
f_in, so its accuracy depends only on how well the grid resolves the pulse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from . import pulse as _pulse
from .emitter import RESERVOIRS, EmitterRates, efficiency
from .errors import GridTooCoarse, SetupError, TrajectoryNotDecayed, ZeroReference
from .pulse import PulseEnvelope, TimeGrid, inner_product, norm_squared, propagate

DECAY_THRESHOLD = 1e-10
STEP_LIMIT = 0.05
DEFAULT_INTEGRATOR_ORDER = 4

_STENCILS = {2: (0, 1), 4: (-1, 0, 1, 2)}


@dataclass(frozen=True, eq=False)
class AmplitudeTrajectory:
    grid: TimeGrid
    psi_e: np.ndarray
    method: str

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def occupation(self) -> float:
        """Time integral of |Psi_e|^2."""
        return _pulse._integrate(np.abs(self.psi_e) ** 2, self.grid.dt)

    def is_decayed(self) -> bool:
        return abs(self.psi_e[-1]) ** 2 < DECAY_THRESHOLD


@dataclass(frozen=True, eq=False)
class ScatterResult:
    trajectory: AmplitudeTrajectory
    p_transfer: float
    p_res: dict
    out_w_es: PulseEnvelope
    out_w_ef: PulseEnvelope
    distance: float = 0.0
    rates: EmitterRates | None = field(default=None, repr=False)


@lru_cache(maxsize=64)
def _source_weights(a: float, h: float, order: int) -> tuple:
    """Exact weights of int_0^h exp(-a(h-u)) p(u) du for the interpolant p.

    The interpolant is built on the stencil nodes (in units of h). The
    integrand is a polynomial times a slowly varying exponential, so a
    moderate Gauss-Legendre rule is exact to rounding.
    """
    nodes = np.array(_STENCILS[order], dtype=float)
    x, w = np.polynomial.legendre.leggauss(12)
    v = 0.5 * (x + 1.0)
    w = 0.5 * w
    kernel = np.exp(-a * h * (1.0 - v))
    weights = []
    for k, xk in enumerate(nodes):
        basis = np.ones_like(v)
        for j, xj in enumerate(nodes):
            if j != k:
                basis *= (v - xj) / (xk - xj)
        weights.append(h * float(np.sum(w * kernel * basis)))
    return tuple(weights)


def solve_driven_decay(
    drive: np.ndarray, dt: float, gamma_total: float, order: int = DEFAULT_INTEGRATOR_ORDER
) -> np.ndarray:
    """Solve dy/dt = -gamma_total/2 * y + drive with y(t0) = 0.

    ``order`` selects linear (2) or cubic (4) interpolation of the drive
    between grid points; the global error scales as dt**order.
    """
    if order not in _STENCILS:
        raise SetupError(f"integrator order must be one of {sorted(_STENCILS)}")
    drive = np.asarray(drive, dtype=complex)
    n = drive.size
    a = 0.5 * gamma_total
    weights = _source_weights(a, dt, order)
    offsets = _STENCILS[order]
    pad_lo, pad_hi = -min(offsets), max(offsets)
    padded = np.concatenate([np.zeros(pad_lo, complex), drive, np.zeros(pad_hi, complex)])
    source = np.zeros(n - 1, dtype=complex)
    for w, off in zip(weights, offsets):
        start = pad_lo + off
        source += w * padded[start : start + n - 1]
    out = np.empty(n, dtype=complex)
    out[0] = 0.0
    out[1:] = lfilter([1.0], [1.0, -math.exp(-a * dt)], source)
    return out


def _check_resolution(f_in: PulseEnvelope, r: EmitterRates) -> None:
    scale = r.gamma_total
    if norm_squared(f_in) > 0:
        scale = max(scale, _pulse.bandwidth(f_in))
    if f_in.grid.dt * scale >= STEP_LIMIT:
        raise GridTooCoarse(
            f"dt * max(Gamma, bandwidth) = {f_in.grid.dt * scale:.3g} must stay below {STEP_LIMIT}"
        )


def integrate_excited_amplitude(
    f_in: PulseEnvelope, r: EmitterRates, order: int = DEFAULT_INTEGRATOR_ORDER
) -> AmplitudeTrajectory:
    _check_resolution(f_in, r)
    drive = 1j * math.sqrt(r.gamma_w_es) * f_in.samples
    psi = solve_driven_decay(drive, f_in.grid.dt, r.gamma_total, order)
    return AmplitudeTrajectory(f_in.grid, psi, "direct")


def excited_amplitude_adiabatic(
    f_in: PulseEnvelope, r: EmitterRates, N: int = _pulse.DEFAULT_ORDER
) -> AmplitudeTrajectory:
    """Truncated adiabatic series for Psi_e built from derivatives of f_in."""
    if N < 0:
        raise SetupError("truncation order must be non-negative")
    gamma = r.gamma_total
    if norm_squared(f_in) > 0:
        _pulse.check_adiabatic(f_in, gamma)
    total = np.zeros(f_in.grid.n, dtype=complex)
    for n in range(N + 1):
        total += (-2.0 / gamma) ** n * _pulse.derivative(f_in, n).samples
    psi = 1j * math.sqrt(r.gamma_w_es) / (gamma / 2) * total
    return AmplitudeTrajectory(f_in.grid, psi, f"adiabatic({N})")


def _require_decayed(traj: AmplitudeTrajectory) -> None:
    if not traj.is_decayed():
        raise TrajectoryNotDecayed(
            f"|Psi_e(t_end)|^2 = {abs(traj.psi_e[-1]) ** 2:.3g}; extend the grid"
        )


def transfer_probability(traj: AmplitudeTrajectory, r: EmitterRates) -> float:
    _require_decayed(traj)
    return r.gamma_ef * traj.occupation()


def transfer_probability_adiabatic(
    f_in: PulseEnvelope, r: EmitterRates, N: int = _pulse.DEFAULT_ORDER
) -> float:
    return efficiency(r) * _pulse.moments(f_in, r.gamma_total, N).s


def reservoir_probabilities(traj: AmplitudeTrajectory, f_in: PulseEnvelope, r: EmitterRates) -> dict:
    """Emission probability per reservoir.

    The transmitted channel W_es is obtained by closure, which avoids the
    cancellation between input and re-emitted field when it is nearly empty.
    """
    _require_decayed(traj)
    occ = traj.occupation()
    probs = {name: r.rate(name) * occ for name in RESERVOIRS if name != "W_es"}
    probs = {"W_es": norm_squared(f_in) - sum(probs.values()), **probs}
    return probs


def output_pulse_w_es(
    f_in: PulseEnvelope, traj: AmplitudeTrajectory, r: EmitterRates, L: float = 0.0, c: float = 1.0
) -> PulseEnvelope:
    _require_decayed(traj)
    samples = f_in.samples + 1j * math.sqrt(r.gamma_w_es) * traj.psi_e
    return propagate(PulseEnvelope(f_in.grid, samples, None, f_in.carrier), L, c)


def output_pulse_w_ef(
    traj: AmplitudeTrajectory, r: EmitterRates, L: float = 0.0, c: float = 1.0, carrier: float = 0.0
) -> PulseEnvelope:
    _require_decayed(traj)
    samples = 1j * math.sqrt(r.gamma_w_ef) * traj.psi_e
    return propagate(PulseEnvelope(traj.grid, samples, None, carrier), L, c)


def scatter(
    f_in: PulseEnvelope,
    r: EmitterRates,
    L: float = 0.0,
    c: float = 1.0,
    method: str = "direct",
    N: int = _pulse.DEFAULT_ORDER,
    order: int = DEFAULT_INTEGRATOR_ORDER,
    carrier_ef: float = 0.0,
) -> ScatterResult:
    """Run one scattering event and collect every derived quantity."""
    if method == "direct":
        traj = integrate_excited_amplitude(f_in, r, order)
    elif method == "adiabatic":
        traj = excited_amplitude_adiabatic(f_in, r, N)
    else:
        raise SetupError(f"unknown method {method!r}")
    return ScatterResult(
        trajectory=traj,
        p_transfer=transfer_probability(traj, r),
        p_res=reservoir_probabilities(traj, f_in, r),
        out_w_es=output_pulse_w_es(f_in, traj, r, L, c),
        out_w_ef=output_pulse_w_ef(traj, r, L, c, carrier_ef),
        distance=L / c,
        rates=r,
    )


def overlap_with_input(f_in: PulseEnvelope, result: ScatterResult) -> complex:
    """Scalar product of the propagated input with the transmitted envelope."""
    if abs(norm_squared(f_in) - 1.0) > 1e-6:
        raise SetupError("overlap_with_input expects a unit-norm input")
    return inner_product(propagate(f_in, result.distance), result.out_w_es)


def predicted_overlap(f_in: PulseEnvelope, r: EmitterRates, N: int = _pulse.DEFAULT_ORDER) -> complex:
    """Series prediction 1 - (2 gamma_w_es / Gamma)(s + i r) for the overlap."""
    m = _pulse.moments(f_in, r.gamma_total, N)
    return 1.0 - 2.0 * r.gamma_w_es / r.gamma_total * (m.s + 1j * m.r)


@dataclass(frozen=True, eq=False)
class Decomposition:
    parallel_coeff: complex
    perp: PulseEnvelope
    perp_weight: float


def orthogonal_decomposition(out: PulseEnvelope, reference: PulseEnvelope) -> Decomposition:
    ref_norm = norm_squared(reference)
    if ref_norm <= 0:
        raise ZeroReference("reference envelope has zero norm")
    coeff = inner_product(reference, out) / ref_norm
    residual = PulseEnvelope(out.grid, out.samples - coeff * reference.samples, None, out.carrier)
    weight = norm_squared(residual)
    if weight < 1e-14:
        return Decomposition(coeff, PulseEnvelope.zeros(out.grid, out.carrier), max(weight, 0.0))
    return Decomposition(coeff, residual / math.sqrt(weight), weight)
