"""JSON experiment configuration.

A config names one experiment ``kind`` and the blocks it needs. Sweeps vary
any numeric field addressed by a dotted path such as ``pulse.tau`` or
``emitter.gamma_other``; each sweep point is validated as a full config.
"""

from __future__ import annotations

import copy
import itertools
import json
import math
from pathlib import Path
from typing import Literal, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from .emitter import EmitterRates
from .errors import SetupError
from .pulse import PulseEnvelope, TimeGrid, default_grid, shape_from_dict
from .qstate import PhotonQubit

KINDS = (
    "scatter",
    "entangle-linear",
    "entangle-ring",
    "clone-symmetric",
    "clone-asymmetric",
    "clone-sweep",
    "oracle-check",
)
RING_KINDS = ("entangle-ring", "clone-symmetric")
DEFAULT_RING_CARRIER = 1000.0


class _Block(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PulseSpec(_Block):
    shape: Literal["gaussian", "sech", "smooth-square", "superposition"]
    tau: Optional[float] = Field(None, gt=0)
    width: Optional[float] = Field(None, gt=0)
    edge: Optional[float] = Field(None, gt=0)
    center: Optional[float] = None
    amplitude: float = 1.0
    phase: float = 0.0
    components: Optional[list["PulseSpec"]] = None
    carrier: Optional[float] = None

    def shape_dict(self) -> dict:
        d = self.model_dump(exclude_none=True, exclude={"carrier", "components"})
        if self.components is not None:
            d["components"] = [c.shape_dict() for c in self.components]
        return d


class GridSpec(_Block):
    dt: Optional[float] = Field(None, gt=0)
    t0: Optional[float] = None
    t_end: Optional[float] = None


class EmitterSpec(_Block):
    gamma_w_es: float = Field(ge=0)
    gamma_b_es: float = Field(ge=0)
    gamma_w_ef: float = Field(ge=0)
    gamma_b_ef: float = Field(ge=0)
    gamma_other: float = Field(0.0, ge=0)

    def rates(self) -> EmitterRates:
        return EmitterRates(**self.model_dump())


class GeometrySpec(_Block):
    L: float = 0.0
    L_ab: Optional[float] = Field(None, ge=0)
    L_bd: float = Field(0.0, ge=0)
    L1: float = Field(10.0, ge=0)
    L2: Optional[float] = Field(None, ge=0)
    phase: Optional[float] = None
    splitter_phase: float = 0.0
    c: float = Field(1.0, gt=0)


class QubitSpec(_Block):
    alpha: Optional[tuple[float, float]] = None
    beta: Optional[tuple[float, float]] = None
    theta: Optional[float] = None
    phi: float = 0.0

    @model_validator(mode="after")
    def _one_form(self):
        if (self.theta is None) == (self.alpha is None or self.beta is None):
            raise ValueError("give either alpha and beta, or theta (and phi)")
        return self

    def qubit(self) -> PhotonQubit:
        if self.theta is not None:
            return PhotonQubit.from_bloch(self.theta, self.phi)
        a, b = complex(*self.alpha), complex(*self.beta)
        n = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
        if n == 0:
            raise SetupError("qubit amplitudes are both zero")
        return PhotonQubit(a / n, b / n)


class SweepAxis(_Block):
    parameter: str
    start: Optional[float] = None
    stop: Optional[float] = None
    steps: Optional[int] = Field(None, ge=1)
    values: Optional[list[float]] = None

    @model_validator(mode="after")
    def _range(self):
        if self.values is None and None in (self.start, self.stop, self.steps):
            raise ValueError(f"axis {self.parameter!r} needs start/stop/steps or values")
        if self.values is not None and not self.values:
            raise ValueError(f"axis {self.parameter!r} has no values")
        return self

    def points(self) -> list[float]:
        if self.values is not None:
            return [float(v) for v in self.values]
        if self.steps == 1:
            return [float(self.start)]
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


class OutputSpec(_Block):
    json_name: Optional[str] = Field(None, alias="json")
    csv: Optional[str] = None
    trajectories: bool = False


class Tolerances(_Block):
    matching: float = 1e-9
    oracle: float = 1e-3


class ExperimentConfig(_Block):
    kind: Literal[KINDS]  # type: ignore[valid-type]
    pulse: Optional[PulseSpec] = None
    grid: Optional[GridSpec] = None
    emitter: Optional[EmitterSpec] = None
    emitter_a: Optional[EmitterSpec] = None
    emitter_b: Optional[EmitterSpec] = None
    geometry: GeometrySpec = GeometrySpec()
    method: Literal["direct", "adiabatic"] = "direct"
    order: int = Field(3, ge=0)
    integrator_order: Literal[2, 4] = 4
    solver: Literal["pulse", "mode"] = "pulse"
    qubit: Optional[QubitSpec] = None
    eta_bar_a: Optional[float] = Field(None, ge=0, le=1)
    eta_bar_b: Optional[float] = Field(None, ge=0, le=1)
    sampler: Literal["closed", "fibonacci"] = "closed"
    n_samples: int = Field(128, ge=1)
    oracle_dt: Optional[float] = Field(None, gt=0)
    detector_efficiency: float = Field(1.0, ge=0, le=1)
    sweep: list[SweepAxis] = []
    output: OutputSpec = OutputSpec()
    tolerances: Tolerances = Tolerances()

    @model_validator(mode="after")
    def _required_blocks(self):
        need = {
            "scatter": ("pulse", "emitter"),
            "oracle-check": ("pulse", "emitter"),
            "entangle-linear": ("pulse", "emitter_a", "emitter_b"),
            "entangle-ring": ("pulse", "emitter_a", "emitter_b"),
            "clone-symmetric": ("emitter_a", "emitter_b", "qubit"),
            "clone-asymmetric": ("qubit", "eta_bar_a", "eta_bar_b"),
            "clone-sweep": (),
        }[self.kind]
        missing = [name for name in need if getattr(self, name) is None]
        if missing:
            raise ValueError(f"kind {self.kind!r} needs {', '.join(missing)}")
        if self.kind == "entangle-linear" and self.geometry.L_ab is None:
            raise ValueError("entangle-linear needs geometry.L_ab")
        if self.kind == "clone-symmetric" and self.pulse is None and self.solver == "pulse":
            raise ValueError("pulse-level clone-symmetric needs a pulse block")
        return self

    # -- builders --------------------------------------------------------

    def gamma_scale(self) -> float:
        """Largest total decay rate among the configured emitters."""
        rates = [e.rates().gamma_total for e in (self.emitter, self.emitter_a, self.emitter_b) if e]
        return max(rates) if rates else 1.0

    def envelope(self) -> PulseEnvelope | None:
        if self.pulse is None:
            return None
        shape = shape_from_dict(self.pulse.shape_dict())
        carrier = self.pulse.carrier
        if carrier is None:
            carrier = DEFAULT_RING_CARRIER if self.kind in RING_KINDS else 0.0
        grid = default_grid(shape, self.gamma_scale())
        if self.grid is not None:
            t0 = grid.t0 if self.grid.t0 is None else self.grid.t0
            t_end = grid.t_end if self.grid.t_end is None else self.grid.t_end
            dt = grid.dt if self.grid.dt is None else self.grid.dt
            if t_end <= t0:
                raise SetupError("grid.t_end must exceed grid.t0")
            grid = TimeGrid.covering(t0, t_end, dt)
        return PulseEnvelope.from_shape(shape, grid, carrier=carrier)


def _set_path(raw: dict, path: str, value: float) -> None:
    keys = path.split(".")
    node = raw
    for k in keys[:-1]:
        if not isinstance(node.get(k), dict):
            raise SetupError(f"sweep parameter {path!r} does not exist in the config")
        node = node[k]
    node[keys[-1]] = value


def _get_path(raw: dict, path: str):
    node = raw
    for k in path.split("."):
        if not isinstance(node, dict) or k not in node:
            return None
        node = node[k]
    return node


def sweep_points(raw: dict, cfg: ExperimentConfig) -> list[tuple[tuple, dict]]:
    """Expand the sweep axes into (parameter tuple, raw config) pairs, sorted."""
    if not cfg.sweep:
        return [((), raw)]
    names = [a.parameter for a in cfg.sweep]
    if len(set(names)) != len(names):
        raise SetupError("a sweep parameter appears twice")
    out = []
    for combo in itertools.product(*(a.points() for a in cfg.sweep)):
        point = copy.deepcopy(raw)
        point.pop("sweep", None)
        for name, value in zip(names, combo):
            _set_path(point, name, value)
        out.append((tuple(combo), point))
    out.sort(key=lambda item: item[0])
    return out


def check_sweep_parameters(raw: dict, cfg: ExperimentConfig) -> None:
    for axis in cfg.sweep:
        if cfg.kind == "clone-sweep" and axis.parameter in ("eta_bar_a", "eta_bar_b"):
            continue
        value = _get_path(raw, axis.parameter)
        if value is None and axis.parameter.split(".")[0] not in raw:
            raise SetupError(f"sweep parameter {axis.parameter!r} does not exist in the config")
        probe = copy.deepcopy(raw)
        probe.pop("sweep", None)
        _set_path(probe, axis.parameter, axis.points()[0])
        try:
            ExperimentConfig.model_validate(probe)
        except ValidationError as exc:
            raise SetupError(f"sweep parameter {axis.parameter!r}: {exc.errors()[0]['msg']}") from None


def load_config(path: str | Path) -> tuple[dict, ExperimentConfig]:
    """Read and validate a config file. Raises SetupError for any problem."""
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise SetupError(f"cannot read config: {exc}") from None
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SetupError(f"malformed JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise SetupError("config must be a JSON object")
    return raw, parse_config(raw)


def parse_config(raw: dict) -> ExperimentConfig:
    try:
        cfg = ExperimentConfig.model_validate(raw)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "config"
        raise SetupError(f"{where}: {first['msg']}") from None
    check_sweep_parameters(raw, cfg)
    return cfg
