"""Exception taxonomy shared across the package.

Three families, matching the CLI exit codes: configuration problems (bad
input, exit code 2), validation failures (a model breaks an invariant,
exit code 1), and numerical failures (a computation cannot be completed at
the requested point, exit code 3).
"""

from __future__ import annotations


class ModeScatterError(Exception):
    """Base class for all package-specific errors."""

    exit_code = 1


class ConfigurationError(ModeScatterError):
    """Malformed input: bad arguments, unparseable files, unknown references."""

    exit_code = 2


class ModelValidationError(ModeScatterError):
    """A model violates a structural or physical invariant."""

    exit_code = 1

    def __init__(self, message: str, errors: tuple[str, ...] = ()) -> None:
        super().__init__(message)
        self.errors = errors


class ModelUnstableError(ModelValidationError):
    """The assembled dynamical matrix has an eigenvalue with positive real part."""


class NumericalError(ModeScatterError):
    """A computation failed at a specific point (singularity, domain, quadrature)."""

    exit_code = 3


class NearSingularError(NumericalError):
    """The resolvent is numerically singular at some frequency."""

    def __init__(self, message: str, omega: float) -> None:
        super().__init__(message)
        self.omega = omega


class DomainError(NumericalError):
    """An input lies outside the mathematical domain of the operation."""


class UndefinedNoiseError(NumericalError):
    """Added noise is requested where the transfer efficiency vanishes."""


class SignalNulledError(NumericalError):
    """The heterodyne signal transfer cancels exactly at the requested phase."""


class PoleError(NumericalError):
    """A susceptibility is evaluated exactly at a real pole."""


class QuadratureError(NumericalError):
    """A numerical integral failed its grid-convergence check."""


class NoHeraldError(NumericalError):
    """An entanglement protocol produced no heralds to condition on."""

    def __init__(self, message: str, herald_count: int = 0) -> None:
        super().__init__(message)
        self.herald_count = herald_count


class ValidityWarning(RuntimeWarning):
    """A closed-form expression was used outside its stated regime."""
