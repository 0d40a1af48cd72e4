"""Decay-rate bookkeeping for a three-level emitter.

Rates are given per reservoir: transmitted (w_es) and backscattered or
background (b_es) channels of the |e>-|s> transition, the same pair for the
|e>-|f> transition, and an extra loss channel whose photons are never seen.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .errors import AsymmetricRates, InvalidEfficiency, SetupError

RESERVOIRS = ("W_es", "W_ef", "B_es", "B_ef", "other")


@dataclass(frozen=True)
class EmitterRates:
    gamma_w_es: float
    gamma_b_es: float
    gamma_w_ef: float
    gamma_b_ef: float
    gamma_other: float = 0.0

    def __post_init__(self) -> None:
        for name, value in asdict(self).items():
            if not (value >= 0 and math.isfinite(value)):
                raise SetupError(f"{name} must be a finite non-negative rate, got {value}")
        if self.gamma_total <= 0:
            raise SetupError("total decay rate must be positive")

    @classmethod
    def symmetric(cls, gamma_w: float, gamma_other: float = 0.0) -> EmitterRates:
        """All four waveguide rates equal to ``gamma_w``."""
        return cls(gamma_w, gamma_w, gamma_w, gamma_w, gamma_other)

    @classmethod
    def matched(cls, gamma: float = 1.0) -> EmitterRates:
        """Lossless impedance-matched emitter with total rate ``gamma``."""
        return cls(gamma / 2, 0.0, gamma / 2, 0.0, 0.0)

    @classmethod
    def from_dict(cls, spec: dict) -> EmitterRates:
        return cls(**{k: float(v) for k, v in spec.items()})

    def to_dict(self) -> dict:
        return asdict(self)

    @property
    def gamma_es(self) -> float:
        return self.gamma_w_es + self.gamma_b_es

    @property
    def gamma_ef(self) -> float:
        return self.gamma_w_ef + self.gamma_b_ef

    @property
    def gamma_total(self) -> float:
        return self.gamma_es + self.gamma_ef + self.gamma_other

    def rate(self, reservoir: str) -> float:
        return {
            "W_es": self.gamma_w_es,
            "W_ef": self.gamma_w_ef,
            "B_es": self.gamma_b_es,
            "B_ef": self.gamma_b_ef,
            "other": self.gamma_other,
        }[reservoir]


def efficiency(r: EmitterRates) -> float:
    """Transfer efficiency 4 Gamma_ef gamma_w_es / Gamma^2 (losses included in Gamma)."""
    return 4.0 * (r.gamma_ef / r.gamma_total) * (r.gamma_w_es / r.gamma_total)


def eta_bar(r: EmitterRates, rtol: float = 1e-12) -> float:
    rates = (r.gamma_w_es, r.gamma_b_es, r.gamma_w_ef, r.gamma_b_ef)
    g = rates[0]
    if any(abs(x - g) > rtol * max(g, 1e-300) for x in rates[1:]):
        raise AsymmetricRates(f"eta_bar needs four equal waveguide rates, got {rates}")
    value = 4 * g / (4 * g + r.gamma_other)
    # the same emitter seen with both directions merged into one channel pair
    merged = EmitterRates(2 * g, 0.0, 2 * g, 0.0, r.gamma_other)
    assert abs(efficiency(merged) - value**2) <= 1e-12
    return value


def gamma_other_for_eta_bar(eta: float, gamma_w: float) -> float:
    """Loss rate that gives the requested eta_bar for waveguide rate ``gamma_w``."""
    if not 0 < eta <= 1:
        raise InvalidEfficiency(f"eta_bar must lie in (0, 1], got {eta}")
    return 4 * gamma_w * (1 / eta - 1)


def rates_for_eta_bar(eta: float, gamma_total: float = 1.0) -> EmitterRates:
    """Symmetric emitter with the requested eta_bar at fixed total rate.

    eta_bar = 0 is a fully decoupled emitter that only decays into the loss
    channel.
    """
    if not 0 <= eta <= 1:
        raise InvalidEfficiency(f"eta_bar must lie in [0, 1], got {eta}")
    g = eta * gamma_total / 4
    return EmitterRates.symmetric(g, gamma_total - 4 * g)


@dataclass(frozen=True)
class ImpedanceReport:
    matched: bool
    mismatch: float
    background_ratio: float


def check_impedance_matching(r: EmitterRates, tol: float = 1e-9) -> ImpedanceReport:
    mismatch = abs(r.gamma_es - r.gamma_ef) / r.gamma_total
    if r.gamma_w_es > 0:
        background = r.gamma_b_es / r.gamma_w_es
    else:
        background = math.inf
    return ImpedanceReport(mismatch <= tol and background <= tol, mismatch, background)
