"""fogplace: exact placement optimization for fog workloads on a metro/access
network, comparing traditional and disaggregated server deployments."""

__version__ = "0.1.0"

from .capacity import (
    ComputeLocation,
    PlacementMode,
    ResourceType,
    ServerConfig,
    activation_accounting,
    ds_allocation_feasible,
    fits_on_server,
)
from .metrics import BlockedCause, MetricsReport, compute_metrics
from .optimizer import (
    ObjectiveWeights,
    PlacementSolution,
    ProblemInstance,
    RegularTrafficProfile,
    brute_force_oracle,
    build_milp,
    greedy_warm_start,
    solve,
    solve_instance,
    validate_solution,
)
from .power import PowerBreakdown, evaluate_power
from .topology import (
    LinkSegment,
    NodeKind,
    Topology,
    build_paper_topology,
    build_ring_topology,
    enumerate_paths,
    hop_count,
)
from .workload import (
    WorkloadCounts,
    WorkloadSet,
    apply_traffic_scale,
    generate,
)

__all__ = [
    "BlockedCause",
    "ComputeLocation",
    "LinkSegment",
    "MetricsReport",
    "NodeKind",
    "ObjectiveWeights",
    "PlacementMode",
    "PlacementSolution",
    "PowerBreakdown",
    "ProblemInstance",
    "RegularTrafficProfile",
    "ResourceType",
    "ServerConfig",
    "Topology",
    "WorkloadCounts",
    "WorkloadSet",
    "activation_accounting",
    "apply_traffic_scale",
    "brute_force_oracle",
    "build_milp",
    "build_paper_topology",
    "build_ring_topology",
    "compute_metrics",
    "ds_allocation_feasible",
    "enumerate_paths",
    "evaluate_power",
    "fits_on_server",
    "generate",
    "greedy_warm_start",
    "hop_count",
    "solve",
    "solve_instance",
    "validate_solution",
]
