"""Exception hierarchy shared by all epival modules."""


class EpivalError(Exception):
    """Base class for all library errors."""


class DimensionUnsupported(EpivalError):
    pass


class DimensionMismatch(EpivalError, ValueError):
    pass


class DegenerateInput(EpivalError, ValueError):
    pass


class Unbounded(EpivalError, ValueError):
    pass


class EmptyInput(EpivalError, ValueError):
    pass


class EmptyDomain(EpivalError, ValueError):
    pass


class OutsideDomain(EpivalError, ValueError):
    pass


class NegativeScale(EpivalError, ValueError):
    pass


class ZeroWeight(EpivalError, ValueError):
    pass


class UnboundedWindow(EpivalError, ValueError):
    pass


class SupportExceedsGrid(EpivalError, ValueError):
    pass


class ArityMismatch(EpivalError, ValueError):
    pass


class RankDeficient(EpivalError, ValueError):
    pass


class RetryExhausted(EpivalError, RuntimeError):
    pass


class OracleFailure(EpivalError, RuntimeError):
    pass
