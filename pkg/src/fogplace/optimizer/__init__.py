"""Exact placement optimization: instance model, MILP formulation, solver,
brute-force oracle, greedy warm start and independent solution validator."""

from .formulation import MilpProblem, build_milp
from .greedy import greedy_warm_start
from .instance import (
    DEFAULT_TRAFFIC_SPLIT,
    ObjectiveBreakdown,
    ObjectiveWeights,
    PlacementSolution,
    ProblemInstance,
    RegularTrafficProfile,
    score_assignment,
)
from .oracle import brute_force_oracle
from .solver import solve, solve_instance
from .validator import validate_solution

__all__ = [
    "DEFAULT_TRAFFIC_SPLIT",
    "MilpProblem",
    "ObjectiveBreakdown",
    "ObjectiveWeights",
    "PlacementSolution",
    "ProblemInstance",
    "RegularTrafficProfile",
    "brute_force_oracle",
    "build_milp",
    "greedy_warm_start",
    "score_assignment",
    "solve",
    "solve_instance",
    "validate_solution",
]
