"""Exception hierarchy shared by every superhol module."""

from __future__ import annotations

from typing import Any, Optional, Sequence


class SuperholError(Exception):
    """Base class for all library errors."""


class DimensionError(SuperholError, ValueError):
    """Operands live in algebras or charts of different sizes."""


class ParityError(SuperholError, ValueError):
    """An element has the wrong Grassmann or form parity."""


class NumericError(SuperholError, ArithmeticError):
    """Non-finite numbers appeared in an input or a sample."""


class DomainError(SuperholError, ValueError):
    """A chart point is outside, or too close to the boundary of, its chart."""

    def __init__(self, message: str, exit_time: Optional[float] = None):
        super().__init__(message)
        self.exit_time = exit_time


class ConsistencyError(SuperholError, ValueError):
    """A supplied differential does not match its function."""


class ValidationError(SuperholError, ValueError):
    """A fixed-point, centralizer or stratum condition is violated."""

    def __init__(
        self,
        message: str,
        worst_point: Optional[Sequence[float]] = None,
        residual: Optional[float] = None,
    ):
        super().__init__(message)
        self.worst_point = None if worst_point is None else tuple(worst_point)
        self.residual = residual


class LoopValidationError(ValidationError):
    """Data (h, a, x) does not define a constant equivariant super loop."""


class StepSizeError(SuperholError, RuntimeError):
    """Halving the integrator step changed the holonomy too much."""

    def __init__(self, message: str, residual: float):
        super().__init__(message)
        self.residual = residual


class RegistryError(SuperholError, KeyError):
    """A name is missing from one of the built-in registries."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else ""


class SchemaError(SuperholError, ValueError):
    """A scenario document does not match the scenario schema."""

    def __init__(self, message: str, location: str = "", line: Optional[int] = None, column: Optional[int] = None):
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{location or '/'}{where}: {message}")
        self.location = location
        self.detail = message
        self.line = line
        self.column = column

    @classmethod
    def at(cls, path: Sequence[Any], message: str) -> "SchemaError":
        """Build an error whose location is the JSON pointer of ``path``."""
        pointer = "".join(
            "/" + str(part).replace("~", "~0").replace("/", "~1") for part in path
        )
        return cls(message, pointer)
