"""Exception hierarchy shared by every freespin module."""
from __future__ import annotations


class FreeSpinError(Exception):
    """Base class for all simulator errors."""


# register / basis
class ZeroCellsError(FreeSpinError, ValueError):
    pass


class GridMismatchError(FreeSpinError, ValueError):
    pass


class LabelLengthMismatchError(FreeSpinError, ValueError):
    pass


class DimensionMismatchError(FreeSpinError, ValueError):
    pass


class IndexOutOfRangeError(FreeSpinError, IndexError):
    pass


class DuplicateIndexError(FreeSpinError, ValueError):
    pass


class NotADensityMatrixError(FreeSpinError, ValueError):
    pass


# device operations
class NotAdjacentError(FreeSpinError, ValueError):
    pass


class SameCellError(NotAdjacentError):
    pass


class ChargeNotAtQubitDotError(FreeSpinError):
    pass


class QcaAlreadyActiveError(FreeSpinError):
    pass


class PairNotActiveError(FreeSpinError):
    pass


class NonUnitaryMergeError(FreeSpinError):
    def __init__(self, success_prob: float):
        super().__init__(f"merge is not norm preserving (success_prob={success_prob:.12g})")
        self.success_prob = success_prob


class QubitDotConditionError(FreeSpinError, ValueError):
    pass


class DotsInUseError(FreeSpinError):
    pass


class BiasSignError(FreeSpinError, ValueError):
    pass


# compiler
class OverlappingWindowsError(FreeSpinError):
    pass


class ChargeLeakageError(FreeSpinError):
    pass


class NonUnitaryScheduleError(FreeSpinError):
    pass


class GateError(FreeSpinError, ValueError):
    """Compile failure for one gate of a circuit; ``index`` is its position."""

    def __init__(self, index: int, cause: Exception):
        super().__init__(f"gate {index}: {type(cause).__name__}: {cause}")
        self.index = index
        self.cause = cause


# noise / readout
class NegativeDurationError(FreeSpinError, ValueError):
    pass


class ActiveWindowError(FreeSpinError):
    pass
