"""Exception types shared across the package."""


class AMMError(Exception):
    """Base class for every error raised by ``amm``."""

    exit_code = 2


class DimensionMismatch(AMMError, ValueError):
    exit_code = 3


class AllZeroWeights(AMMError, ValueError):
    pass


class NegativeWeight(AMMError, ValueError):
    pass


class AllZeroChain(AMMError, ValueError):
    pass


class UnsupportedQ(AMMError, ValueError):
    pass


class ZeroSupport(AMMError, ValueError):
    pass


class UnsupportedSketch(AMMError, ValueError):
    pass


class InvalidAccuracy(AMMError, ValueError):
    pass


class TooLargeToEnumerate(AMMError, ValueError):
    exit_code = 4


class BadSpec(AMMError, ValueError):
    pass
