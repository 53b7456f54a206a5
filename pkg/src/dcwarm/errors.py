"""Exception types shared across the toolkit."""


class DcwarmError(Exception):
    """Base class for all toolkit errors."""


class CapacityError(DcwarmError):
    """Problem size exceeds a hard desk-scale cap of an exhaustive routine."""


class InfeasibleStartError(DcwarmError):
    """Descent started from a point outside the effective domain."""


class DivergenceError(DcwarmError):
    """Iteration safety cap exceeded; indicates a broken local oracle."""


class UnboundedDirectionError(DcwarmError):
    """Objective stays linear along a direction beyond the step cap."""


class InfeasibleSystemError(DcwarmError):
    """Constraint system is empty (negative cycle) or an instance invariant fails."""


class InvariantViolationError(DcwarmError):
    """An internal invariant that should hold by construction was violated."""


class ContractError(DcwarmError):
    """A caller violated a documented precondition."""
