"""Exception taxonomy mapped to CLI exit codes.

ConfigError maps to exit 2 (usage/config), the numerical family to exit 3.
Scientific failures (a hypothesis or acceptance check that evaluates false)
are ordinary results, not exceptions; the CLI turns them into exit 1.
"""


class ConfigError(ValueError):
    """Bad user input: unknown keys, out-of-range parameters, missing files."""


class NumericalError(RuntimeError):
    """A numerical procedure could not reach its contract."""


class DomainError(NumericalError):
    """Evaluation requested outside the valid domain (e.g. g where f = 0)."""


class ResolutionError(NumericalError):
    """Quadrature or grid resolution insufficient for the requested quantity."""


class TruncationError(NumericalError):
    """Domain truncation dominates the requested quantity."""


class ProjectionError(NumericalError):
    """No projection root found in the bracket after expansion."""
