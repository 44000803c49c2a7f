"""Exception types shared across the package."""


class InvalidInstanceError(ValueError):
    """Raised for malformed or out-of-contract problem instances."""


class PolicyMismatchError(ValueError):
    """Raised when a policy is asked to run on an instance it does not support."""


class SimulationError(RuntimeError):
    """Raised when a simulation cannot make progress (livelock, bad decision)."""


class MalformedTrajectoryError(ValueError):
    """Raised when a trajectory violates its structural invariants."""
