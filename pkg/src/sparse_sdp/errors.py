"""Exception types shared across the solver stack."""


class SparseSdpError(Exception):
    """Base class for all library-specific errors."""


class NotPositiveDefinite(SparseSdpError):
    """A Cholesky pivot was not strictly positive.

    ``pivot`` is the 0-based index of the offending pivot.  Line searches
    catch this to reject trial points that left the cone.
    """

    def __init__(self, pivot, message=None):
        self.pivot = int(pivot)
        super().__init__(message or f"pivot {self.pivot} is not strictly positive")


class NotChordal(SparseSdpError):
    """(1..n) is not a perfect elimination ordering of the given pattern."""


class RipFailure(SparseSdpError):
    """No running-intersection ordering could be produced for the cliques."""


class NotCompletable(SparseSdpError):
    """A partial matrix has no positive definite completion."""


class InfeasiblePoint(SparseSdpError):
    """A point violates the positive definiteness required by the potential."""


class InfeasibleStart(SparseSdpError):
    """The initial point handed to the solver is not strictly feasible."""


class CgStall(SparseSdpError):
    """Conjugate gradient hit its iteration cap before the tolerance.

    Raised only in strict mode; the routine otherwise returns its best
    iterate with ``converged=False``.  ``result`` carries that iterate.
    """

    def __init__(self, result):
        self.result = result
        super().__init__(
            f"conjugate gradient stalled after {result.iterations} iterations "
            f"(residual {result.residual_norm:.3e})"
        )


class NoDecrease(SparseSdpError):
    """No feasible step-size starting point exists for the potential search."""


class IterationLimit(SparseSdpError):
    """The main loop ran out of iterations (or stalled) before convergence.

    ``report`` holds the partial solve report accumulated so far.
    """

    def __init__(self, message, report=None):
        self.report = report
        super().__init__(message)


class TooManyEdges(SparseSdpError):
    """Requested more edges than a simple graph on n vertices can hold."""


class SdpaParseError(SparseSdpError):
    """Malformed SDPA sparse input; ``line`` is the 1-based offending line."""

    def __init__(self, line, message):
        self.line = int(line)
        super().__init__(f"line {line}: {message}")
