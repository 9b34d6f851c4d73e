"""Exception types shared across the package."""


class AccentCtcError(Exception):
    """Base class for all package errors."""


class ShapeError(AccentCtcError, ValueError):
    """Operands have incompatible dimensions."""


class ContractError(AccentCtcError, ValueError):
    """A documented precondition was violated by the caller."""


class NumericError(AccentCtcError, FloatingPointError):
    """A non-finite value appeared where finiteness is required."""


class FeasibilityError(AccentCtcError, ValueError):
    """CTC target cannot be aligned within the given number of frames."""

    def __init__(self, n_frames: int, target_len: int, min_frames: int):
        self.n_frames = n_frames
        self.target_len = target_len
        self.min_frames = min_frames
        super().__init__(
            f"target of length {target_len} needs at least {min_frames} frames, got {n_frames}"
        )


class UnknownAccentError(AccentCtcError, KeyError):
    """Accent id outside the embedding table's inventory."""


class SamplerError(AccentCtcError, ValueError):
    """Weighted sampler configured over a class with no data."""


class ExtractionError(AccentCtcError, ValueError):
    """Embedding extraction could not produce a vector for some accent."""


class ConfigError(AccentCtcError, ValueError):
    """Invalid configuration value; message carries the dotted field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


class UndefinedWerError(AccentCtcError, ZeroDivisionError):
    """WER requested for a reference set of total length zero."""


class TrainingDiverged(AccentCtcError, RuntimeError):
    """Training loss became non-finite."""
