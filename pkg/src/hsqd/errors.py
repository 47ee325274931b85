"""Exception hierarchy shared across the package.

Each class maps onto one CLI exit code so that failures surface uniformly:
validation problems exit 2, resource caps exit 3, solver non-convergence
exits 4.
"""


class HsqdError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class ValidationError(HsqdError):
    """Malformed input, violated invariant, or inconsistent configuration."""

    exit_code = 2


class CapExceededError(HsqdError):
    """A configured resource cap (sector size, subspace dimension) was hit."""

    exit_code = 3


class ConvergenceError(HsqdError):
    """An iterative solver failed to reach its tolerance."""

    exit_code = 4
