"""Single-photon temporal envelopes on a uniform time grid.

Time is measured in units of 1/Gamma_ref and c = 1. An envelope stores its
samples and, when it was built from an analytic shape, the shape itself so
that derivatives can be evaluated exactly instead of by finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import cached_property, lru_cache
from typing import ClassVar, Union

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial.hermite_e import hermeval
from scipy.integrate import trapezoid
from scipy.interpolate import CubicSpline

from .errors import GridMismatch, GridTooCoarse, SeriesDivergent, SetupError, ZeroPulse

POINTS_PER_SCALE = 200
DECAY_TAIL = 30.0  # extra grid time after the pulse, in units of 1/Gamma
FD_LIMIT = 0.05  # maximal dt * bandwidth for finite differences
DEFAULT_ORDER = 3


@dataclass(frozen=True)
class TimeGrid:
    t0: float
    dt: float
    n: int

    def __post_init__(self) -> None:
        if not (self.dt > 0 and math.isfinite(self.dt)):
            raise SetupError(f"dt must be positive, got {self.dt}")
        if int(self.n) != self.n or self.n < 2:
            raise SetupError(f"a grid needs at least two points, got n={self.n}")
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def covering(cls, start: float, stop: float, dt: float) -> TimeGrid:
        n = int(math.ceil((stop - start) / dt - 1e-9)) + 1
        return cls(start, dt, max(n, 2))

    @property
    def t_end(self) -> float:
        return self.t0 + (self.n - 1) * self.dt

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n)

    def shifted(self, delay: float) -> TimeGrid:
        return TimeGrid(self.t0 + delay, self.dt, self.n)

    def matches(self, other: TimeGrid, rtol: float = 1e-9) -> bool:
        return (
            self.n == other.n
            and abs(self.dt - other.dt) <= rtol * self.dt
            and abs(self.t0 - other.t0) <= rtol * self.dt
        )


# --------------------------------------------------------------------------
# analytic shapes


@lru_cache(maxsize=None)
def _sech_poly(order: int) -> Polynomial:
    # d^n/du^n sech(u) = sech(u) * P_n(tanh u)
    p = Polynomial([1.0])
    t = Polynomial([0.0, 1.0])
    for _ in range(order):
        p = -t * p + (1 - t * t) * p.deriv()
    return p


@lru_cache(maxsize=None)
def _tanh_poly(order: int) -> Polynomial:
    # d^n/du^n tanh(u) = Q_n(tanh u)
    q = Polynomial([0.0, 1.0])
    t = Polynomial([0.0, 1.0])
    for _ in range(order):
        q = (1 - t * t) * q.deriv()
    return q


def _sech(u: np.ndarray) -> np.ndarray:
    e = np.exp(-np.abs(u))
    return 2 * e / (1 + e * e)


class _Shape:
    """Behaviour shared by the analytic shapes.

    Subclasses provide ``_profile(t, order)`` (unnormalized profile and its
    derivatives), ``support()`` and ``time_scale``. The ``amplitude`` field
    scales the unit-norm shape, so ``|amplitude|**2`` is the norm squared.
    """

    kind: ClassVar[str] = ""
    amplitude: complex

    @cached_property
    def _profile_norm_squared(self) -> float:
        lo, hi = self.support()
        t = np.linspace(lo, hi, 40001)
        return float(trapezoid(np.abs(self._profile(t, 0)) ** 2, t))

    @property
    def coefficient(self) -> complex:
        return complex(self.amplitude) / math.sqrt(self._profile_norm_squared)

    def evaluate(self, t: np.ndarray, order: int = 0) -> np.ndarray:
        t = np.asarray(t, dtype=float)
        return self.coefficient * self._profile(t, order)

    def scaled(self, factor: complex):
        return replace(self, amplitude=complex(self.amplitude) * factor)

    def to_dict(self) -> dict:
        a = complex(self.amplitude)
        out = {"shape": self.kind}
        out.update(self._params())
        out["amplitude"] = abs(a)
        if a.imag != 0 or a.real < 0:
            out["phase"] = math.atan2(a.imag, a.real)
        return out


@dataclass(frozen=True)
class Gaussian(_Shape):
    """f(t) proportional to exp(-(t - center)^2 / (2 tau^2))."""

    tau: float = 1.0
    center: float = 0.0
    amplitude: complex = 1.0
    kind: ClassVar[str] = "gaussian"

    def __post_init__(self) -> None:
        if not self.tau > 0:
            raise SetupError("gaussian width tau must be positive")

    @cached_property
    def _profile_norm_squared(self) -> float:
        return self.tau * math.sqrt(math.pi)

    def _profile(self, t, order):
        u = (t - self.center) / self.tau
        g = np.exp(-0.5 * u * u)
        if order == 0:
            return g
        coeffs = np.zeros(order + 1)
        coeffs[order] = 1.0
        return (-1.0 / self.tau) ** order * hermeval(u, coeffs) * g

    def support(self) -> tuple[float, float]:
        return self.center - 10 * self.tau, self.center + 10 * self.tau

    @property
    def time_scale(self) -> float:
        return self.tau

    def shifted(self, delay: float) -> Gaussian:
        return replace(self, center=self.center + delay)

    def _params(self):
        return {"tau": self.tau, "center": self.center}


@dataclass(frozen=True)
class Sech(_Shape):
    """f(t) proportional to sech((t - center) / width)."""

    width: float = 1.0
    center: float = 0.0
    amplitude: complex = 1.0
    kind: ClassVar[str] = "sech"

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise SetupError("sech width must be positive")

    @cached_property
    def _profile_norm_squared(self) -> float:
        return 2.0 * self.width

    def _profile(self, t, order):
        u = (t - self.center) / self.width
        val = _sech(u)
        if order:
            val = val * _sech_poly(order)(np.tanh(u)) / self.width**order
        return val

    def support(self) -> tuple[float, float]:
        return self.center - 32 * self.width, self.center + 32 * self.width

    @property
    def time_scale(self) -> float:
        return self.width

    def shifted(self, delay: float) -> Sech:
        return replace(self, center=self.center + delay)

    def _params(self):
        return {"width": self.width, "center": self.center}


@dataclass(frozen=True)
class SmoothSquare(_Shape):
    """Flat-top pulse of the given width with tanh edges of the given length."""

    width: float = 10.0
    edge: float = 1.0
    center: float = 0.0
    amplitude: complex = 1.0
    kind: ClassVar[str] = "smooth-square"

    def __post_init__(self) -> None:
        if not (self.width > 0 and self.edge > 0):
            raise SetupError("smooth-square width and edge must be positive")

    def _profile(self, t, order):
        u = (t - self.center) / self.edge
        a = 0.5 * self.width / self.edge
        q = _tanh_poly(order)
        return 0.5 * (q(np.tanh(u + a)) - q(np.tanh(u - a))) / self.edge**order

    def support(self) -> tuple[float, float]:
        half = 0.5 * self.width + 16 * self.edge
        return self.center - half, self.center + half

    @property
    def time_scale(self) -> float:
        return self.edge

    def shifted(self, delay: float) -> SmoothSquare:
        return replace(self, center=self.center + delay)

    def _params(self):
        return {"width": self.width, "edge": self.edge, "center": self.center}


@dataclass(frozen=True)
class Superposition(_Shape):
    """Coherent sum of shapes, renormalized as a whole.

    The component amplitudes act as relative complex weights. This is the
    simplest way to get envelopes that are neither real nor time symmetric.
    """

    components: tuple = ()
    amplitude: complex = 1.0
    kind: ClassVar[str] = "superposition"

    def __post_init__(self) -> None:
        if not self.components:
            raise SetupError("a superposition needs at least one component")
        object.__setattr__(self, "components", tuple(self.components))

    def _profile(self, t, order):
        return sum(c.evaluate(t, order) for c in self.components)

    @cached_property
    def _profile_norm_squared(self) -> float:
        value = _Shape._profile_norm_squared.func(self)
        if value <= 0:
            raise ZeroPulse("superposition components cancel exactly")
        return value

    def support(self) -> tuple[float, float]:
        ends = [c.support() for c in self.components]
        return min(e[0] for e in ends), max(e[1] for e in ends)

    @property
    def time_scale(self) -> float:
        return min(c.time_scale for c in self.components)

    def shifted(self, delay: float) -> Superposition:
        return replace(self, components=tuple(c.shifted(delay) for c in self.components))

    def _params(self):
        return {"components": [c.to_dict() for c in self.components]}


Shape = Union[Gaussian, Sech, SmoothSquare, Superposition]

_SHAPES = {cls.kind: cls for cls in (Gaussian, Sech, SmoothSquare, Superposition)}


def shape_from_dict(spec: dict) -> Shape:
    """Build a shape from its JSON description.

    >>> shape_from_dict({"shape": "gaussian", "tau": 2.0}).tau
    2.0
    """
    spec = dict(spec)
    kind = spec.pop("shape", None)
    if kind not in _SHAPES:
        raise SetupError(f"unknown pulse shape {kind!r}; expected one of {sorted(_SHAPES)}")
    amplitude = complex(spec.pop("amplitude", 1.0)) * np.exp(1j * float(spec.pop("phase", 0.0)))
    if kind == "superposition":
        comps = tuple(shape_from_dict(c) for c in spec.pop("components", ()))
        spec["components"] = comps
    try:
        return _SHAPES[kind](amplitude=complex(amplitude), **spec)
    except TypeError as exc:
        raise SetupError(f"bad parameters for {kind} pulse: {exc}") from None


def default_grid(shape: Shape, gamma: float = 1.0, points_per_scale: int = POINTS_PER_SCALE) -> TimeGrid:
    """Grid covering the pulse support plus a decay tail of 30/gamma.

    The step resolves the faster of the pulse time scale and 1/gamma.
    """
    if not gamma > 0:
        raise SetupError("gamma must be positive")
    lo, hi = shape.support()
    dt = min(shape.time_scale, 1.0 / gamma) / points_per_scale
    return TimeGrid.covering(lo, hi + DECAY_TAIL / gamma, dt)


# --------------------------------------------------------------------------
# envelopes


@dataclass(frozen=True, eq=False)
class PulseEnvelope:
    grid: TimeGrid
    samples: np.ndarray
    shape: Shape | None = None
    carrier: float = 0.0

    def __post_init__(self) -> None:
        samples = np.asarray(self.samples, dtype=complex)
        if samples.shape != (self.grid.n,):
            raise SetupError(f"expected {self.grid.n} samples, got shape {samples.shape}")
        object.__setattr__(self, "samples", samples)

    @classmethod
    def from_shape(
        cls, shape: Shape, grid: TimeGrid | None = None, gamma: float = 1.0, carrier: float = 0.0
    ) -> PulseEnvelope:
        grid = grid or default_grid(shape, gamma)
        samples = shape.evaluate(grid.times)
        peak = np.max(np.abs(samples))
        if peak > 0 and max(abs(samples[0]), abs(samples[-1])) > 1e-12 * peak:
            raise SetupError("grid does not cover the pulse support")
        return cls(grid, samples, shape, carrier)

    @classmethod
    def zeros(cls, grid: TimeGrid, carrier: float = 0.0) -> PulseEnvelope:
        return cls(grid, np.zeros(grid.n, dtype=complex), None, carrier)

    @property
    def times(self) -> np.ndarray:
        return self.grid.times

    def _check(self, other: PulseEnvelope) -> None:
        if not self.grid.matches(other.grid):
            raise GridMismatch(f"{self.grid} vs {other.grid}")

    def __add__(self, other: PulseEnvelope) -> PulseEnvelope:
        self._check(other)
        return PulseEnvelope(self.grid, self.samples + other.samples, None, self.carrier)

    def __sub__(self, other: PulseEnvelope) -> PulseEnvelope:
        return self + (-1.0) * other

    def __mul__(self, factor: complex) -> PulseEnvelope:
        shape = self.shape.scaled(factor) if self.shape is not None else None
        return PulseEnvelope(self.grid, self.samples * factor, shape, self.carrier)

    __rmul__ = __mul__

    def __neg__(self) -> PulseEnvelope:
        return self * -1.0

    def __truediv__(self, factor: complex) -> PulseEnvelope:
        return self * (1.0 / factor)


def gaussian_pulse(
    tau: float,
    center: float = 0.0,
    gamma: float = 1.0,
    amplitude: complex = 1.0,
    carrier: float = 0.0,
    grid: TimeGrid | None = None,
) -> PulseEnvelope:
    return PulseEnvelope.from_shape(Gaussian(tau, center, amplitude), grid, gamma, carrier)


def gaussian_for_ratio(ratio: float, gamma: float = 1.0, **kwargs) -> PulseEnvelope:
    """Unit gaussian whose bandwidth is ``ratio * gamma``."""
    tau = 1.0 / (math.sqrt(2.0) * ratio * gamma)
    return gaussian_pulse(tau, gamma=gamma, **kwargs)


# --------------------------------------------------------------------------
# operations


def _integrate(values: np.ndarray, dt: float) -> float:
    return float(trapezoid(values, dx=dt))


def norm_squared(p: PulseEnvelope) -> float:
    return _integrate(np.abs(p.samples) ** 2, p.grid.dt)


def _fd_first(samples: np.ndarray, dt: float) -> np.ndarray:
    f = np.concatenate([np.zeros(2, complex), samples, np.zeros(2, complex)])
    return (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * dt)


def _fd_bandwidth(p: PulseEnvelope) -> float:
    n2 = norm_squared(p)
    d = _fd_first(p.samples, p.grid.dt)
    return math.sqrt(_integrate(np.abs(d) ** 2, p.grid.dt) / n2)


def derivative(p: PulseEnvelope, order: int) -> PulseEnvelope:
    """n-th time derivative, exact for analytic shapes.

    Without a shape, repeated fourth-order central differences are used with
    zeros assumed beyond both ends of the grid.
    """
    if order < 0:
        raise SetupError("derivative order must be non-negative")
    if order == 0:
        return p
    if p.shape is not None:
        return PulseEnvelope(p.grid, p.shape.evaluate(p.grid.times, order), None, p.carrier)
    if not np.any(p.samples):
        return PulseEnvelope.zeros(p.grid, p.carrier)
    if p.grid.dt * _fd_bandwidth(p) >= FD_LIMIT:
        raise GridTooCoarse("grid too coarse for finite-difference derivatives")
    d = p.samples
    for _ in range(order):
        d = _fd_first(d, p.grid.dt)
    return PulseEnvelope(p.grid, d, None, p.carrier)


def bandwidth(p: PulseEnvelope) -> float:
    n2 = norm_squared(p)
    if n2 <= 0:
        raise ZeroPulse("bandwidth of a zero pulse is undefined")
    d = derivative(p, 1).samples
    return math.sqrt(_integrate(np.abs(d) ** 2, p.grid.dt) / n2)


def inner_product(a: PulseEnvelope, b: PulseEnvelope) -> complex:
    a._check(b)
    return complex(trapezoid(np.conj(a.samples) * b.samples, dx=a.grid.dt))


@dataclass(frozen=True)
class AdiabaticMoments:
    s: float
    r: float
    truncation_order: int
    term_magnitudes: list = field(default_factory=list)
    r_term_magnitudes: list = field(default_factory=list)


def check_adiabatic(p: PulseEnvelope, gamma: float) -> float:
    """Return bandwidth/gamma, raising SeriesDivergent outside the adiabatic regime."""
    if not gamma > 0:
        raise SetupError("gamma must be positive")
    ratio = bandwidth(p) / gamma
    if 4 * ratio**2 >= 1:
        raise SeriesDivergent(
            f"bandwidth/Gamma = {ratio:.4g} >= 1/2: the adiabatic series does not apply"
        )
    return ratio


def moments(p: PulseEnvelope, gamma: float, N: int = DEFAULT_ORDER) -> AdiabaticMoments:
    """Even and odd moment sums s and r of the adiabatic expansion.

    Both series are asymptotic. They are summed up to order ``N`` or up to
    the smallest term of s, whichever comes first.
    """
    if N < 0:
        raise SetupError("truncation order must be non-negative")
    if norm_squared(p) == 0:
        return AdiabaticMoments(0.0, 0.0, 0, [0.0], [0.0])
    check_adiabatic(p, gamma)
    dt = p.grid.dt
    derivs = [p.samples] + [derivative(p, k).samples for k in range(1, N + 2)]
    s_terms = [
        (-4.0 / gamma**2) ** n * _integrate(np.abs(derivs[n]) ** 2, dt) for n in range(N + 1)
    ]
    stop = N
    for n in range(1, N + 1):
        if abs(s_terms[n]) > abs(s_terms[n - 1]):
            stop = n - 1
            break
    r_terms = []
    for n in range(N + 1):
        # integrate by parts n times: int f* f^(2n+1) = (-1)^n int (f^(n))* f^(n+1)
        odd = (-1) ** n * complex(trapezoid(np.conj(derivs[n]) * derivs[n + 1], dx=dt))
        r_terms.append((-1j * (-2.0 / gamma) ** (2 * n + 1) * odd).real)
    return AdiabaticMoments(
        s=float(sum(s_terms[: stop + 1])),
        r=float(sum(r_terms[: stop + 1])),
        truncation_order=stop,
        term_magnitudes=[abs(t) for t in s_terms],
        r_term_magnitudes=[abs(t) for t in r_terms],
    )


def propagate(p: PulseEnvelope, L: float, c: float = 1.0) -> PulseEnvelope:
    """Move the envelope a distance L downstream.

    The grid travels with the pulse, so no resampling happens; the samples
    only pick up the carrier phase exp(i omega L / c).
    """
    if L == 0:
        return p
    delay = L / c
    phase = np.exp(1j * p.carrier * delay)
    shape = p.shape.shifted(delay).scaled(phase) if p.shape is not None else None
    return PulseEnvelope(p.grid.shifted(delay), p.samples * phase, shape, p.carrier)


def resample(p: PulseEnvelope, grid: TimeGrid) -> PulseEnvelope:
    """Express an envelope on another grid, zero outside its original span.

    Shapes are evaluated exactly and integer offsets on an equal step are
    plain index shifts. Anything else goes through a cubic spline.
    """
    if p.grid.matches(grid):
        return PulseEnvelope(grid, p.samples, p.shape, p.carrier)
    if p.shape is not None:
        return PulseEnvelope(grid, p.shape.evaluate(grid.times), p.shape, p.carrier)
    offset = (grid.t0 - p.grid.t0) / p.grid.dt
    if abs(grid.dt - p.grid.dt) <= 1e-9 * grid.dt and abs(offset - round(offset)) < 1e-9:
        k = int(round(offset))
        out = np.zeros(grid.n, dtype=complex)
        src_lo, src_hi = max(k, 0), min(k + grid.n, p.grid.n)
        if src_hi > src_lo:
            out[src_lo - k : src_hi - k] = p.samples[src_lo:src_hi]
        return PulseEnvelope(grid, out, None, p.carrier)
    t = grid.times
    inside = (t >= p.grid.t0) & (t <= p.grid.t_end)
    out = np.zeros(grid.n, dtype=complex)
    src = p.grid.times
    out[inside] = CubicSpline(src, p.samples.real)(t[inside]) + 1j * CubicSpline(
        src, p.samples.imag
    )(t[inside])
    return PulseEnvelope(grid, out, None, p.carrier)


def delayed(p: PulseEnvelope, delay: float) -> PulseEnvelope:
    """Samples of f(t - delay) on the envelope's own grid, without any phase."""
    if delay == 0:
        return p
    shape = p.shape.shifted(delay) if p.shape is not None else None
    moved = PulseEnvelope(p.grid.shifted(delay), p.samples, shape, p.carrier)
    return resample(moved, p.grid)
