"""Exception types raised across the toolkit."""
from __future__ import annotations


class CmtError(Exception):
    """Base class for all toolkit errors."""


class ParamOutOfRange(CmtError, ValueError):
    pass


class DimensionMismatch(CmtError, ValueError):
    pass


class NonHermitian(CmtError, ValueError):
    pass


class NotPSD(CmtError, ValueError):
    pass


class NotAResolution(CmtError, ValueError):
    pass


class NoConvergence(CmtError, RuntimeError):
    pass


class RankOutOfRange(CmtError, ValueError):
    pass


class InvalidState(CmtError, ValueError):
    """A matrix failed the density-matrix invariants."""


class InvalidProjector(CmtError, ValueError):
    pass


class UnknownTheoremId(CmtError, ValueError):
    pass


class DecompositionFailure(CmtError, RuntimeError):
    pass


class AntipodalAxes(CmtError, ValueError):
    pass


class NonProjectiveBob(CmtError, ValueError):
    pass


class IncompleteMeasurement(CmtError, ValueError):
    pass


class NonUniformGame(CmtError, ValueError):
    pass


class Unreachable(CmtError, RuntimeError):
    """A planner target cannot be met inside the search range."""


class UnknownFigure(CmtError, ValueError):
    pass
