"""Exception types raised across the package."""


class WorkflowError(ValueError):
    """Structural problem with a workflow graph (cycle, bad edge, ...)."""


class IngestionError(WorkflowError):
    """A workflow file could not be turned into a workflow."""


class InfeasibleError(ValueError):
    """No cipher assignment satisfies the security constraints."""


class ProblemTooLarge(ValueError):
    """Instance exceeds what the exhaustive oracle will enumerate."""


class PoolExhaustedError(RuntimeError):
    """Every pool instance is already taken at the current topological level."""
