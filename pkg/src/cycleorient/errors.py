"""Exception hierarchy for the orientation pipeline.

Input problems raise InputError subclasses (CLI exit code 1).  A proven
bound failing at runtime raises BoundViolation (CLI exit code 2), which
always indicates an implementation bug, never a bad instance.
"""


class CycleOrientError(Exception):
    pass


class InputError(CycleOrientError):
    pass


class NegativeLength(InputError):
    pass


class SelfLoop(InputError):
    pass


class NotTwoEdgeConnected(InputError):
    pass


class NodeNotOnPath(CycleOrientError):
    pass


class Unreachable(CycleOrientError):
    pass


class NoCycle(CycleOrientError):
    pass


class MalformedIntersection(CycleOrientError):
    """A cycle's overlap with its prospective father is not a single
    z-path or an attached cycle.  Signals a non-planar or corrupted
    instance."""


class NoCrossNode(CycleOrientError):
    """Crossing cycles share no node off the common ancestor; the input
    cannot be planar."""


class EmptyCandidate(CycleOrientError):
    pass


class UnsupportedInstance(CycleOrientError):
    """Two very-heavy outer-crossings in one containment level."""


class LedgerMiss(CycleOrientError):
    """An edge carries a direction but no recorded setter."""


class MissingContainingBrother(CycleOrientError):
    pass


class BrokenInvariant(CycleOrientError):
    """A structural property the construction guarantees was violated."""


class AncestorRelation(CycleOrientError):
    """LCA queried for cycles where one is an ancestor of the other."""


class BrokenI(BrokenInvariant):
    """Served nodes of a cycle are not covered by one directed run."""


class BoundViolation(CycleOrientError):
    pass


class NotStronglyConnected(CycleOrientError):
    pass


class TooLarge(CycleOrientError):
    pass


class GenerationFailed(CycleOrientError):
    pass
