"""Exception hierarchy.

Two families matter to callers: setup errors (bad parameters or a geometry
that breaks a physical precondition) and numerical errors (the requested
computation cannot be carried out accurately). The CLI maps them to
different exit codes.
"""

from __future__ import annotations


class SimulationError(Exception):
    """Base class for every error raised by the package."""


class SetupError(SimulationError, ValueError):
    """Invalid parameters or a violated physical precondition."""


class NumericalError(SimulationError, ArithmeticError):
    """A computation that would be inaccurate or ill-defined."""


class GridMismatch(SetupError):
    pass


class ZeroReference(SetupError):
    pass


class AsymmetricRates(SetupError):
    pass


class InvalidEfficiency(SetupError):
    pass


class SeparationViolated(SetupError):
    pass


class InterferenceConditionViolated(SetupError):
    pass


class DimensionMismatch(SetupError):
    pass


class ZeroPulse(NumericalError):
    pass


class GridTooCoarse(NumericalError):
    pass


class SeriesDivergent(NumericalError):
    pass


class TrajectoryNotDecayed(NumericalError):
    pass


class StepTooLarge(NumericalError):
    pass
