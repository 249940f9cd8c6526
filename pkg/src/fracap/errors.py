"""Exception and warning types shared across the package."""


class FracapError(Exception):
    """Base class for all package errors."""


class BoundViolation(FracapError):
    """An exponent field sampled a value outside (1, inf)."""


class GridMismatch(FracapError):
    """Two objects defined on different grids were combined."""


class NonFiniteInput(FracapError):
    """A grid function with NaN or infinite entries was passed in."""


class ZeroModular(FracapError):
    """An operation requiring a positive modular got the zero function."""


class TooManyFreeNodes(FracapError):
    """The brute-force oracle was asked for more free nodes than it enumerates."""


class InfeasibleMask(FracapError):
    """A pin mask is empty or does not live on the problem grid."""


class MaskNotInDomain(FracapError):
    """A relative-capacity target is not contained in its domain mask."""


class MaskNotInTarget(FracapError):
    """An interior-capacity subset is not contained in the target mask."""


class ParseError(FracapError):
    """A config file is syntactically malformed or carries unknown keys."""


class ValidationError(FracapError):
    """A config value violates a documented invariant."""


class DensityConditionUnmet(UserWarning):
    """Smoothed-admissible comparison requested without a shift-invariant pair exponent."""
