"""Exception hierarchy shared by every module."""

from typing import Optional


class BtnnError(Exception):
    """Base class for all errors raised by btnn_spotter."""


class ConfigurationError(BtnnError, ValueError):
    """Invalid configuration value or combination."""


class FormatError(BtnnError, ValueError):
    """A file does not conform to its declared format."""


class TruncatedFileError(BtnnError, OSError):
    """A binary file ended before its declared content."""


class EmptyStreamError(BtnnError, ValueError):
    """Audio too short to produce a single frame."""


class ShapeError(BtnnError, ValueError):
    """Dimension mismatch between an input and a layer."""


class UnknownStateError(BtnnError, LookupError):
    """A state id has no tail, calibration or lexicon entry."""

    def __init__(self, message: str, state: Optional[int] = None):
        super().__init__(message)
        self.state = state

    def __str__(self) -> str:
        return self.args[0]


class EmptyClassError(BtnnError, ValueError):
    """A state has no positive (or no negative) samples."""

    def __init__(self, message: str, state: Optional[int] = None):
        super().__init__(message)
        self.state = state


class DegenerateRangeError(BtnnError, ValueError):
    """All scores used to estimate a boundary table are identical."""


class TrainingDivergedError(BtnnError, RuntimeError):
    """Loss became NaN or infinite during training."""

    def __init__(self, epoch: int, state: Optional[int]):
        where = f"state {state}" if state is not None else "joint model"
        super().__init__(f"Training diverged at epoch {epoch} for {where}")
        self.epoch = epoch
        self.state = state


class OutOfVocabularyError(BtnnError, LookupError):
    """A keyword unit is missing from the lexicon."""

    def __init__(self, unit: str):
        super().__init__(f"Unit not in lexicon: {unit!r}")
        self.unit = unit

    def __str__(self) -> str:
        return self.args[0]


class GraphConstructionError(BtnnError, ValueError):
    """A keyword graph cannot be built from the given input."""


class ContractViolationError(BtnnError, RuntimeError):
    """A caller broke a documented precondition."""


class EvaluationError(BtnnError, ValueError):
    """Results and references cannot be scored together."""
