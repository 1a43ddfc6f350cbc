"""Exception hierarchy.

Every error raised on purpose by the toolkit derives from ``ChainStarError``
so callers (and the CLI) can separate physics/usage failures from bugs.
"""


class ChainStarError(Exception):
    pass


class DimensionTooLarge(ChainStarError, ValueError):
    pass


class SiteOutOfRange(ChainStarError, IndexError):
    pass


class TooManySitesKept(ChainStarError, ValueError):
    pass


class InvalidSpec(ChainStarError, ValueError):
    pass


class NonUniformFields(ChainStarError, ValueError):
    pass


class ChainTooShort(ChainStarError, ValueError):
    pass


class EvenMForYZ(ChainStarError, ValueError):
    pass


class ShapeMismatch(ChainStarError, ValueError):
    pass


class SectorCountTooLarge(ChainStarError, ValueError):
    pass


class NoConvergence(ChainStarError, RuntimeError):
    pass


class NoConventionMatches(ChainStarError, RuntimeError):
    pass


class NotResonant(ChainStarError, ValueError):
    pass


class NotAState(ChainStarError, ValueError):
    pass


class IndexOutOfRange(ChainStarError, IndexError):
    pass


class ImpossibleOutcome(ChainStarError, ValueError):
    pass


class PathMismatch(ChainStarError, RuntimeError):
    """Two independent computations of the same quantity disagree."""
