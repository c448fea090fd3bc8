"""Exception types shared across the package."""


class UQError(Exception):
    """Base class for every error raised by sciuq."""


class NonFiniteValue(UQError, FloatingPointError):
    pass


class UnregisteredOp(UQError, TypeError):
    pass


class OrderTooHigh(UQError, ValueError):
    pass


class DimensionMismatch(UQError, ValueError):
    pass


class ShapeMismatch(DimensionMismatch):
    pass


class WeightsFileMissing(UQError, FileNotFoundError):
    pass


class FamilyMismatch(UQError, TypeError):
    pass


class DuplicateProcessKey(UQError, ValueError):
    pass


class UnknownProcessKey(UQError, KeyError):
    pass


class EmptyDataset(UQError, ValueError):
    pass


class RaggedSensors(UQError, ValueError):
    pass


class InferenceError(UQError, RuntimeError):
    """Raised when a sampler or optimizer cannot produce usable draws."""


class ZeroAcceptance(InferenceError):
    pass


class DivergedElbo(InferenceError):
    pass


class MemberDiverged(InferenceError):
    pass


class EmptySamples(UQError, ValueError):
    pass


class ZeroReference(UQError, ValueError):
    pass


class ZeroVariance(UQError, ValueError):
    pass


class EmptyCalibrationSet(UQError, ValueError):
    pass


class NonFiniteState(UQError, FloatingPointError):
    pass


class UnknownProblem(UQError, KeyError):
    pass


class ConfigError(UQError, ValueError):
    pass


class GradCheckFailed(UQError):
    """Automatic and finite-difference gradients disagree."""
