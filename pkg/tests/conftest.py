from __future__ import annotations

import math

import numpy as np
import pytest
from scipy.special import erfcx

from adiabatic_transfer.emitter import EmitterRates
from adiabatic_transfer.pulse import PulseEnvelope, bandwidth, gaussian_for_ratio, shape_from_dict


def exact_gaussian_s(x: float) -> float:
    """Closed-form s for a unit gaussian with bandwidth/Gamma = x.

    s = (Gamma^2/4) int |Psi_e|^2 / gamma_w_es, which for a gaussian reduces
    to sqrt(pi) z erfcx(z) with z = 1/(2 sqrt(2) x).
    """
    z = 1.0 / (2.0 * math.sqrt(2.0) * x)
    return float(math.sqrt(math.pi) * z * erfcx(z))


def loglog_slope(xs, ys) -> float:
    return float(np.polyfit(np.log(xs), np.log(np.abs(ys)), 1)[0])


@pytest.fixture
def matched():
    return EmitterRates.matched(1.0)


@pytest.fixture
def entangling():
    return EmitterRates.symmetric(0.25)


@pytest.fixture
def unit_gaussian():
    return gaussian_for_ratio(0.01)


def random_shape_dict(rng: np.random.Generator) -> dict:
    """A random analytic shape at unit time scale (bandwidth of order one)."""
    kind = rng.choice(["gaussian", "sech", "smooth-square", "superposition"])
    if kind == "gaussian":
        return {"shape": "gaussian", "tau": 1.0}
    if kind == "sech":
        return {"shape": "sech", "width": 1.0}
    if kind == "smooth-square":
        return {"shape": "smooth-square", "width": float(rng.uniform(1.0, 4.0)), "edge": 1.0}
    return {
        "shape": "superposition",
        "components": [
            {"shape": "gaussian", "tau": 1.0},
            {
                "shape": "gaussian",
                "tau": float(rng.uniform(0.7, 1.5)),
                "center": float(rng.uniform(-2.0, 2.0)),
                "amplitude": float(rng.uniform(0.2, 1.0)),
                "phase": float(rng.uniform(0, 2 * np.pi)),
            },
        ],
    }


def _stretch(spec: dict, k: float) -> dict:
    out = dict(spec)
    for key in ("tau", "width", "edge", "center"):
        if key in out:
            out[key] = out[key] * k
    if "components" in out:
        out["components"] = [_stretch(c, k) for c in out["components"]]
    return out


def random_rates(rng: np.random.Generator) -> EmitterRates:
    raw = rng.uniform(0.0, 1.0, 5)
    raw[0] = max(raw[0], 0.05)
    raw[4] *= rng.integers(0, 2)  # half the configurations are lossless
    scale = rng.uniform(0.5, 2.0) / raw.sum()
    return EmitterRates(*(float(v) * scale for v in raw))


def random_config(rng: np.random.Generator, x_lo: float, x_hi: float, unit_norm: bool = True):
    """Random (pulse, rates, x) with bandwidth/Gamma drawn log-uniformly in [x_lo, x_hi]."""
    r = random_rates(rng)
    spec = random_shape_dict(rng)
    b0 = bandwidth(PulseEnvelope.from_shape(shape_from_dict(spec)))
    x = float(np.exp(rng.uniform(np.log(x_lo), np.log(x_hi))))
    spec = _stretch(spec, b0 / (x * r.gamma_total))
    spec["amplitude"] = 1.0 if unit_norm else float(rng.uniform(0.1, 1.0))
    spec["phase"] = float(rng.uniform(0, 2 * np.pi))
    shape = shape_from_dict(spec)
    f = PulseEnvelope.from_shape(shape, gamma=r.gamma_total, carrier=float(rng.uniform(0, 10)))
    return f, r, x
