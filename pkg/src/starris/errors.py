"""Exception types raised across the package."""


class StarRisError(Exception):
    """Base class for all package errors."""


class PassivityViolation(StarRisError, ValueError):
    """Transmitted plus reflected power fraction exceeds one."""


class DegenerateImpedance(StarRisError, ZeroDivisionError):
    pass


class LengthMismatch(StarRisError, ValueError):
    pass


class PartitionMismatch(StarRisError, ValueError):
    """M_t + M_r does not equal the number of elements."""


class NonPositiveDistance(StarRisError, ValueError):
    pass


class TooCloseToSurface(StarRisError, ValueError):
    """An observation point lies within ``min_distance`` of an element centre."""


class EmptyRegion(StarRisError, ValueError):
    pass


class ResolutionTooCoarse(StarRisError, RuntimeError):
    """The convolution oracle failed its grid-doubling self-consistency check."""


class InsufficientPoints(StarRisError, ValueError):
    pass


class ZeroProbability(StarRisError, ValueError):
    """A curve point has zero probability (Monte Carlo floor reached)."""


class ScenarioError(StarRisError, ValueError):
    """A scenario document failed schema validation."""


class NearFieldRegionWarning(UserWarning):
    """A far-field formula was evaluated inside the near-field boundary."""
