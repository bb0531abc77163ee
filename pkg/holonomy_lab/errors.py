"""
Exception hierarchy for holonomy-lab.

Every error carries a human-readable ``detail`` plus optional structured
context, and maps to a CLI exit code.
"""
from typing import Any, Dict


class HolonomyLabError(Exception):
    """Base error. Subclasses set ``exit_code``."""

    exit_code = 3

    def __init__(self, detail: str, **context: Any):
        super().__init__(detail)
        self.detail = detail
        self.context = context

    def to_dict(self) -> Dict[str, Any]:
        """Machine-readable error object for reports."""
        payload = {
            "type": type(self).__name__,
            "detail": self.detail,
            "exit_code": self.exit_code,
        }
        payload.update(self.context)
        return payload


class ConfigError(HolonomyLabError):
    exit_code = 2


class ToleranceFailure(HolonomyLabError):
    exit_code = 4


class NumericalError(HolonomyLabError):
    exit_code = 3


class NotUnitary(NumericalError):
    pass


class NotHermitian(NumericalError):
    pass


class ConvergenceFailure(NumericalError):
    pass


class SingularOverlap(NumericalError):
    pass


class BandCrossing(NumericalError):
    pass


class LoopNotClosed(NumericalError):
    pass


class BlockMismatch(NumericalError):
    pass


class DimensionMismatch(NumericalError):
    pass


class GapClosed(NumericalError):
    pass


class ThetaResolutionFailure(NumericalError):
    pass


class UnsupportedModel(NumericalError):
    pass


class UnsupportedLoop(NumericalError):
    pass
