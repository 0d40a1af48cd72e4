"""Emitter-pair density matrices.

Basis order is |00>, |01>, |10>, |11> with emitter A as the left factor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, SetupError

_BELL = {
    "phi_plus": np.array([1, 0, 0, 1]) / math.sqrt(2),
    "psi_plus": np.array([0, 1, 1, 0]) / math.sqrt(2),
    "psi_minus": np.array([0, 1, -1, 0]) / math.sqrt(2),
}


def _check_density(rho: np.ndarray) -> None:
    if abs(np.trace(rho) - 1) > 1e-10:
        raise SetupError(f"density matrix trace {np.trace(rho).real:.12g} != 1")
    if np.max(np.abs(rho - rho.conj().T)) > 1e-12:
        raise SetupError("density matrix is not Hermitian")
    if np.min(np.linalg.eigvalsh(rho)) < -1e-10:
        raise SetupError("density matrix has a negative eigenvalue")


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    rho: np.ndarray

    def __post_init__(self) -> None:
        rho = np.asarray(self.rho, dtype=complex)
        if rho.shape != (4, 4):
            raise DimensionMismatch(f"expected a 4x4 matrix, got {rho.shape}")
        _check_density(rho)
        object.__setattr__(self, "rho", rho)

    @classmethod
    def from_vector(cls, psi) -> TwoQubitState:
        psi = np.asarray(psi, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls(np.outer(psi, psi.conj()))


@dataclass(frozen=True)
class PhotonQubit:
    """Polarization qubit alpha|sigma+> + beta|sigma->."""

    alpha: complex
    beta: complex

    def __post_init__(self) -> None:
        if abs(abs(self.alpha) ** 2 + abs(self.beta) ** 2 - 1) > 1e-12:
            raise SetupError("photon qubit must be normalized")

    @classmethod
    def from_bloch(cls, theta: float, phi: float = 0.0) -> PhotonQubit:
        return cls(complex(math.cos(theta / 2)), complex(np.exp(1j * phi) * math.sin(theta / 2)))

    @property
    def ab2(self) -> float:
        """|alpha beta|^2, the only input dependence of the cloning fidelities."""
        return abs(self.alpha * self.beta) ** 2


def reference_state(q: PhotonQubit) -> np.ndarray:
    """Emitter qubit alpha|1> - beta|0> that a perfect copy would hold."""
    return np.array([-q.beta, q.alpha], dtype=complex)


def bell_state(kind: str) -> TwoQubitState:
    try:
        return TwoQubitState.from_vector(_BELL[kind])
    except KeyError:
        raise SetupError(f"unknown Bell state {kind!r}") from None


def bell_vector(kind: str) -> np.ndarray:
    return _BELL[kind].astype(complex)


def fidelity(rho, pure_ref) -> float:
    rho = rho.rho if isinstance(rho, TwoQubitState) else np.asarray(rho, dtype=complex)
    ref = np.asarray(pure_ref, dtype=complex)
    if rho.shape != (ref.size, ref.size):
        raise DimensionMismatch(f"state {rho.shape} vs reference of length {ref.size}")
    ref = ref / np.linalg.norm(ref)
    return float(np.real(ref.conj() @ rho @ ref))


def partial_trace(rho, keep: str) -> np.ndarray:
    rho = rho.rho if isinstance(rho, TwoQubitState) else np.asarray(rho, dtype=complex)
    t = rho.reshape(2, 2, 2, 2)
    if keep == "A":
        return np.einsum("ijkj->ik", t)
    if keep == "B":
        return np.einsum("ijil->jl", t)
    raise SetupError(f"keep must be 'A' or 'B', got {keep!r}")


def matrix_to_json(rho) -> list:
    """Nested lists of [re, im] pairs."""
    rho = rho.rho if isinstance(rho, TwoQubitState) else np.asarray(rho, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in rho]


def matrix_from_json(data) -> np.ndarray:
    return np.array([[complex(re, im) for re, im in row] for row in data])
