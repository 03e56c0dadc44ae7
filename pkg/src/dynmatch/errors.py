"""Exception hierarchy shared by every module of the package."""


class DynMatchError(Exception):
    """Base class for all package errors."""


class MarketError(DynMatchError, ValueError):
    """A candidate market violates one of the model assumptions.

    ``line`` is set when the error was detected while parsing an instance file.
    """

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DuplicateUtility(MarketError):
    pass


class ZeroUtility(MarketError):
    pass


class DiscountOutOfRange(MarketError):
    pass


class UnknownAgentReference(MarketError):
    pass


class MissingUtility(MarketError):
    pass


class DuplicateAgent(MarketError):
    pass


class ParseError(DynMatchError, ValueError):
    def __init__(self, line, column, reason):
        self.line = line
        self.column = column
        self.reason = reason
        super().__init__(f"line {line}, column {column}: {reason}")


class InstanceTooLarge(DynMatchError):
    pass


class InternalLatticeViolation(DynMatchError):
    """No simultaneous optimum exists in the stable set; the market is malformed."""


class NotStable(DynMatchError, ValueError):
    pass


class InfeasibleOffer(DynMatchError):
    def __init__(self, firm, reason):
        self.firm = firm
        super().__init__(f"infeasible offer by {firm}: {reason}")


class InfeasibleResponse(DynMatchError):
    def __init__(self, worker, reason):
        self.worker = worker
        super().__init__(f"infeasible response by {worker}: {reason}")


class NoStationaryTail(DynMatchError):
    def __init__(self, message, trace=None):
        self.trace = trace
        super().__init__(message)


class NoImprovingOffer(DynMatchError):
    pass


class WorkerUnmatched(DynMatchError, ValueError):
    pass


class NoBoundary(DynMatchError):
    pass
