"""Exception hierarchy for gapscope."""
from typing import Any, Dict, Optional


class GapscopeError(Exception):
    """Base class for all gapscope errors."""


class DimensionError(GapscopeError, ValueError):
    """A vector does not match the vertex count of its instance."""


class DomainError(GapscopeError, ValueError):
    """An argument lies outside the domain of a closed-form result."""


class ArgumentError(GapscopeError, ValueError):
    """An argument violates an operation's precondition."""


class RegimeError(DomainError):
    """The ground eigenvalue lies outside the complex-root regime [0, 4)."""


class DegenerateSystemError(GapscopeError, ValueError):
    """The coefficient system has a double root and no unique solution."""


class OracleSizeError(GapscopeError, ValueError):
    """The dense oracle was asked for a matrix above its size guard."""


class ConfigError(GapscopeError, ValueError):
    """An experiment configuration could not be parsed or validated."""


class SolverError(GapscopeError, RuntimeError):
    """An iterative solver failed to converge.

    Attributes:
        diagnostics: Solver state at the point of failure
    """

    def __init__(self, message: str, diagnostics: Optional[Dict[str, Any]] = None):
        super().__init__(message)
        self.diagnostics: Dict[str, Any] = dict(diagnostics or {})

    def with_context(self, **context: Any) -> "SolverError":
        """Return a copy of this error with extra diagnostics attached."""
        return SolverError(self.args[0], {**self.diagnostics, **context})

    def __str__(self) -> str:
        base = super().__str__()
        if not self.diagnostics:
            return base
        details = ", ".join(f"{key}={value}" for key, value in self.diagnostics.items())
        return f"{base} ({details})"
