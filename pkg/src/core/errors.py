"""
Error types raised by the laboratory

All errors derive from NicdLabError so the command line can map any
precondition failure to a single exit code.
"""


class NicdLabError(Exception):
    """Base class for every error raised by the laboratory"""


class EncodingError(NicdLabError, ValueError):
    """A textual function, instance or chain encoding could not be parsed"""


class DimensionMismatch(NicdLabError, ValueError):
    """Two cube functions live on cubes of different dimension"""


class NegativeEntryForLowNorm(NicdLabError, ValueError):
    """A p-norm with p < 1 was requested for a function with a negative entry"""


class EmptyStartSet(NicdLabError, ValueError):
    """A random walk was asked to start from the empty set"""


class InvalidInstance(NicdLabError, ValueError):
    """Edges do not form a tree, the player set or protocol is malformed, or chain weights are degenerate"""


class ArityMismatch(NicdLabError, ValueError):
    """A protocol function has the wrong number of coordinates"""


class MissingPlayerFunction(NicdLabError, ValueError):
    """A protocol does not cover exactly the players of its instance"""


class UnbalancedFunction(NicdLabError, ValueError):
    """A protocol uses an unbalanced function without the override flag"""


class TooLargeForBruteForce(NicdLabError, ValueError):
    """Joint enumeration would exceed the configured size limit"""


class FamilyTooLarge(NicdLabError, ValueError):
    """A search family is too large to enumerate at the requested n"""


class NotReversible(NicdLabError, ValueError):
    """A transition matrix is not stochastic or violates detailed balance"""


class NotErgodic(NicdLabError, ValueError):
    """A chain is reducible or periodic"""


class InapplicableHypotheses(NicdLabError, ValueError):
    """The equality characterisation needs delta < 1 and lambda_1 > -1 + delta"""


class DomainError(NicdLabError, ValueError):
    """A numeric argument lies outside the domain of the function"""


class RhoOutOfRange(DomainError):
    """A correlation lies outside the range an operation accepts"""


class DegenerateCorrelation(DomainError):
    """A bivariate normal correlation of exactly +1 or -1"""


class PreconditionError(NicdLabError, ValueError):
    """A verification check was invoked outside its preconditions"""
