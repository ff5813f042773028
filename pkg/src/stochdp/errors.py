"""Exception hierarchy shared across the engine."""


class StochDPError(Exception):
    """Base class for all engine errors."""


class TreeError(StochDPError):
    def __init__(self, node, message):
        super().__init__(f"node {node!r}: {message}")
        self.node = node


class NonUnitProbability(TreeError):
    pass


class NonPositiveProbability(TreeError):
    pass


class OrphanNode(TreeError):
    pass


class StageGap(TreeError):
    pass


class DuplicateNode(TreeError):
    pass


class MissingValue(StochDPError):
    pass


class UnboundedBelow(StochDPError):
    """A minimization whose value is -inf; ``ray`` is a descent direction."""

    def __init__(self, message="unbounded below", ray=None, node=None):
        super().__init__(message)
        self.ray = ray
        self.node = node


class ImproperInput(StochDPError):
    pass


class DimensionBudgetExceeded(StochDPError):
    pass


class FMRowCapExceeded(StochDPError):
    pass


class LinearityViolated(StochDPError):
    """A cone of recession directions that should be a subspace is not.

    ``witness`` lies in the cone while its negative does not.
    """

    def __init__(self, node, witness, stage=None):
        super().__init__(f"recession cone at node {node!r} is not a linear space "
                         f"(witness {tuple(str(w) for w in witness)})")
        self.node = node
        self.witness = tuple(witness)
        self.stage = stage


class Infeasible(StochDPError):
    """No adapted decision gives a finite objective; the value is +inf."""


class LowerBoundViolated(StochDPError):
    pass


class NotPSD(StochDPError):
    pass


class SchemaError(StochDPError):
    pass
