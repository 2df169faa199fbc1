"""Exception types shared across the toolkit.

Exit-code mapping used by the CLI: ValidationError -> 1, NumericalError -> 2.
"""


class PhasecatError(Exception):
    """Base class for toolkit errors."""


class ValidationError(PhasecatError):
    """Bad input: malformed files, inconsistent grids, violated preconditions."""


class NumericalError(PhasecatError):
    """A computation failed its own quality gates (divergence, ill-conditioning,
    cross-check disagreement)."""
