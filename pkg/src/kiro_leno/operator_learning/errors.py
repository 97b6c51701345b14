"""Exception hierarchy shared by every operator_learning module."""

from __future__ import annotations

from typing import Any


class LenoError(Exception):
    """Base class for all library errors."""


class ValidationError(LenoError, ValueError):
    """Inputs violate a documented precondition (shape, range, kind)."""


class CapacityError(ValidationError):
    """More modes requested than the discrete operator has degrees of freedom."""


class CompatibilityError(ValidationError):
    """Neumann boundary data fails the zero-net-flux compatibility condition."""


class NumericalError(LenoError, RuntimeError):
    """A numerical routine failed to converge or lost accuracy."""


class DivergenceError(NumericalError):
    """A time-stepping recursion produced NaN or Inf."""

    def __init__(self, message: str, step: int):
        super().__init__(f"{message} (step {step})")
        self.step = step


class StabilityError(LenoError, ValueError):
    """Explicit time step exceeds the stability bound."""

    def __init__(self, dt: float, suggested_dt: float):
        super().__init__(
            f"dt={dt:.3e} exceeds the explicit stability bound; use dt <= {suggested_dt:.3e} or force it"
        )
        self.dt = dt
        self.suggested_dt = suggested_dt


class FormatError(LenoError, ValueError):
    """A container file is malformed."""


class VersionMismatchError(FormatError):
    """A container was written with an unsupported format version."""


class ChecksumError(FormatError):
    """The payload hash does not match the header."""


class TruncatedFileError(FormatError):
    """The payload is shorter or longer than the header declares."""


class TrainingAborted(LenoError, RuntimeError):
    """Training produced a non-finite loss; carries the history so far."""

    def __init__(self, message: str, history: list[Any]):
        super().__init__(message)
        self.history = history


class ThresholdError(LenoError):
    """A configured acceptance threshold was violated."""

    def __init__(self, metric: str, value: float, limit: float):
        super().__init__(f"{metric}={value:.3e} violates threshold {limit:.3e}")
        self.metric = metric
        self.value = value
        self.limit = limit
