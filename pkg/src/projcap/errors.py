"""Exception types raised by projcap operations."""


class ProjcapError(Exception):
    """Base class for all projcap errors."""


class NumericFailure(ProjcapError):
    """A computation ran but could not certify its result (CLI exit code 1)."""


class ZeroVector(ProjcapError, ValueError):
    pass


class DimensionMismatch(ProjcapError, ValueError):
    pass


class ChartUndefined(ProjcapError, ValueError):
    pass


class ChartMismatch(ProjcapError, ValueError):
    pass


class IndexOutOfRange(ProjcapError, IndexError):
    pass


class EmptyMeasure(ProjcapError, ValueError):
    pass


class SingleAtom(ProjcapError, ValueError):
    pass


class SharedAtoms(ProjcapError, ValueError):
    pass


class UnsortedGrid(ProjcapError, ValueError):
    pass


class AtomCoincidence(ProjcapError, ValueError):
    pass


class TooFewPoints(ProjcapError, ValueError):
    pass


class CoincidentSamples(ProjcapError, ValueError):
    pass


class DegenerateGamma(ProjcapError, ValueError):
    pass


class EmptySet(ProjcapError, ValueError):
    pass


class GridTooClose(ProjcapError, ValueError):
    pass


class SamplerExhausted(NumericFailure):
    pass


class NonConvergence(NumericFailure):
    pass


class LevelUnreachable(NumericFailure):
    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
