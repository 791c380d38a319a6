"""Exception hierarchy for the fogplace package."""


class FogPlaceError(Exception):
    """Base class for all fogplace errors."""


class InvalidParameterError(FogPlaceError, ValueError):
    """A builder or operation received an out-of-contract parameter."""


class NoPathError(FogPlaceError):
    """No route exists between the requested endpoints."""


class InstanceError(FogPlaceError):
    """A problem instance violates its construction contract."""


class WeightHierarchyError(InstanceError):
    """Objective weights do not enforce the strict priority ordering
    blocked > components > servers > power for the given instance."""


class NodeLocalCapacityError(FogPlaceError):
    """Pinned node-local workloads cannot fit their home location.

    Distinct from blocking: only real-time workloads may be blocked, so an
    instance whose node-local population does not fit is rejected outright.
    """


class InfeasibleAssignmentError(FogPlaceError):
    """An assignment handed to accounting exceeds compute capacity."""


class InstanceTooLargeError(FogPlaceError):
    """The brute-force oracle refuses instances beyond its size guard."""


class SolverError(FogPlaceError):
    """The MILP backend failed or returned an inconsistent result."""


class TimeoutNoIncumbentError(SolverError):
    """The time limit elapsed before any feasible solution was found."""


class SolutionValidationError(FogPlaceError):
    """A placement solution violates the model constraints."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__(
            "solution failed validation:\n" + "\n".join(f"- {v}" for v in self.violations)
        )


class UnvalidatedSolutionError(FogPlaceError):
    """Metrics were requested for a solution that has not been validated."""


class NegativeTrafficError(FogPlaceError, ValueError):
    """A per-link traffic value was negative."""
