"""Numerical knobs shared by every series and quadrature in the package."""

from dataclasses import dataclass


@dataclass(frozen=True)
class Settings:
    series_tol: float = 1e-12
    max_terms: int = 10_000
    # rounding slack tolerated outside [0, 1] before a value is rejected
    prob_slack: float = 1e-12
    quad_tol: float = 1e-9


SETTINGS = Settings()


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of the function."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature failed to reach its tolerance within the cap."""
