"""Exception types shared across fisherlab."""


class FisherLabError(Exception):
    """Base class for library errors."""


class GridTooSmallError(FisherLabError, ValueError):
    """Probability mass reaches the grid boundary; the box must grow."""


class GridResourceError(FisherLabError, RuntimeError):
    """The grid needed to resolve a state exceeds the sample cap."""


class StateError(FisherLabError, ValueError):
    """An initial state could not be built, parsed or validated."""


class InvariantError(FisherLabError, RuntimeError):
    """A physical invariant asserted during a computation was violated."""
