"""Problem instances and placement solutions.

An instance bundles the network, the workload population, the server mode,
objective weights, a resolved per-link regular-traffic background and the
traffic split. A placed real-time workload emits two commodities: one
between its host and its source access node (fraction_to_source x uplink)
and one between its host and the hyperscale DC (fraction_to_dc x uplink).
A workload hosted at its own source uses no links for the source commodity.

``score_assignment`` is the single scoring path used by the MILP decoder,
the brute-force oracle and the greedy heuristic, so their objective values
are bitwise comparable.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

from ..capacity import (
    Activation,
    ComputeLocation,
    PlacementMode,
    ResourceVector,
    activation_accounting,
    demand_of,
)
from ..errors import InstanceError, InvalidParameterError, WeightHierarchyError
from ..power import evaluate_power, link_power_coefficient
from ..topology import LinkSegment, NetworkPath, NodeKind, Topology, zero_hop_path
from ..workload import Workload, WorkloadKind, WorkloadSet

DEFAULT_TRAFFIC_SPLIT = (0.5, 0.5)

# Default background-load fractions of link capacity. These are calibration
# knobs, not measured values; the defaults reproduce the reference blocking
# trends (see README) and can be overridden per run or per link.
DEFAULT_METRO_ACCESS_FRACTION = 0.5
DEFAULT_LAST_MILE_FRACTION = 0.5
DEFAULT_METRO_CORE_FRACTION = 0.1


@dataclass(frozen=True)
class ObjectiveWeights:
    """Costs per blocked workload, active component and active server.

    The power term has fixed weight 1, so a strict hierarchy
    blocked > components > servers > power requires each cost to dominate
    everything below it; ``validate_hierarchy`` checks this against the
    instance's worst case.
    """

    blocked_cost: float = 1e9
    component_cost: float = 1e6
    server_cost: float = 1e4

    def __post_init__(self):
        if min(self.blocked_cost, self.component_cost, self.server_cost) <= 0:
            raise InvalidParameterError("objective weights must be positive")

    def validate_hierarchy(self, max_nc: int, max_ns: int, max_tnpc: float) -> None:
        if self.server_cost <= max_tnpc:
            raise WeightHierarchyError(
                f"server_cost {self.server_cost} must exceed max TNPC {max_tnpc:.3f}"
            )
        if self.component_cost <= self.server_cost * max_ns + max_tnpc:
            raise WeightHierarchyError(
                f"component_cost {self.component_cost} must exceed "
                f"server_cost*max_NS + max TNPC = "
                f"{self.server_cost * max_ns + max_tnpc:.3f}"
            )
        if self.blocked_cost <= self.component_cost * max_nc + self.server_cost * max_ns + max_tnpc:
            raise WeightHierarchyError(
                f"blocked_cost {self.blocked_cost} must exceed "
                f"component_cost*max_NC + server_cost*max_NS + max TNPC = "
                f"{self.component_cost * max_nc + self.server_cost * max_ns + max_tnpc:.3f}"
            )


@dataclass(frozen=True)
class RegularTrafficProfile:
    """Background load, as capacity fractions per segment plus per-link overrides."""

    metro_access_fraction: float = DEFAULT_METRO_ACCESS_FRACTION
    last_mile_fraction: float = DEFAULT_LAST_MILE_FRACTION
    metro_core_fraction: float = DEFAULT_METRO_CORE_FRACTION
    link_overrides: tuple[tuple[str, float], ...] = ()  # (link id, absolute Gb/s)

    def __post_init__(self):
        for name in ("metro_access_fraction", "last_mile_fraction", "metro_core_fraction"):
            value = getattr(self, name)
            if not 0.0 <= value < 1.0:
                raise InvalidParameterError(f"{name} must be in [0, 1), got {value}")

    def resolve(self, topology: Topology) -> dict[str, float]:
        """Per-link background traffic in Gb/s. The gateway uplink carries none."""
        fractions = {
            LinkSegment.METRO_ACCESS: self.metro_access_fraction,
            LinkSegment.LAST_MILE: self.last_mile_fraction,
            LinkSegment.METRO_CORE: self.metro_core_fraction,
            LinkSegment.GATEWAY_UPLINK: 0.0,
        }
        overrides = dict(self.link_overrides)
        resolved = {}
        for link in topology.links.values():
            if link.id in overrides:
                resolved[link.id] = float(overrides[link.id])
            else:
                resolved[link.id] = fractions[link.segment] * link.capacity_gbps
        return resolved

    def to_dict(self) -> dict:
        return {
            "metro_access_fraction": self.metro_access_fraction,
            "last_mile_fraction": self.last_mile_fraction,
            "metro_core_fraction": self.metro_core_fraction,
            "link_overrides": [list(item) for item in self.link_overrides],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "RegularTrafficProfile":
        return cls(
            metro_access_fraction=data["metro_access_fraction"],
            last_mile_fraction=data["last_mile_fraction"],
            metro_core_fraction=data["metro_core_fraction"],
            link_overrides=tuple((lid, rate) for lid, rate in data["link_overrides"]),
        )


def default_locations(
    topology: Topology,
    co_servers: int = 6,
    bo_servers: int = 6,
    cs_servers: int = 4,
    server_config=None,
) -> dict[str, ComputeLocation]:
    """Fit every CO/BO/CS with servers (reference counts 6/6/4)."""
    from ..capacity import DEFAULT_SERVER_CONFIG

    config = server_config or DEFAULT_SERVER_CONFIG
    counts = {
        NodeKind.METRO_CO: co_servers,
        NodeKind.ENTERPRISE_BO: bo_servers,
        NodeKind.RADIO_CS: cs_servers,
    }
    return {
        node.id: ComputeLocation(node.id, counts[node.kind], config)
        for node in topology.compute_nodes()
    }


@dataclass(frozen=True)
class ProblemInstance:
    topology: Topology
    workloads: WorkloadSet
    locations: Mapping[str, ComputeLocation]
    mode: PlacementMode
    weights: ObjectiveWeights = ObjectiveWeights()
    regular_traffic: Mapping[str, float] = field(default_factory=dict)  # per link, Gb/s
    traffic_split: tuple[float, float] = DEFAULT_TRAFFIC_SPLIT  # (to source, to DC)
    include_regular_in_power: bool = True

    def __post_init__(self):
        to_source, to_dc = self.traffic_split
        if not (0.0 <= to_source <= 1.0 and 0.0 <= to_dc <= 1.0):
            raise InstanceError(f"traffic split fractions must be in [0, 1]: {self.traffic_split}")
        for link in self.topology.links.values():
            reg = self.regular_traffic.get(link.id, 0.0)
            if reg < 0:
                raise InstanceError(f"negative regular traffic on {link.id}")
            if reg >= link.capacity_gbps:
                raise InstanceError(
                    f"regular traffic {reg} on {link.id} reaches its capacity "
                    f"{link.capacity_gbps}; instance rejected"
                )
        compute_ids = {n.id for n in self.topology.compute_nodes()}
        for loc_id in self.locations:
            if loc_id not in compute_ids:
                raise InstanceError(f"location {loc_id} is not a CO/BO/CS node")
        for w in self.workloads.workloads:
            if w.source_node not in self.topology.nodes:
                raise InstanceError(f"workload {w.id}: unknown source {w.source_node}")
            if w.kind == WorkloadKind.NODE_LOCAL:
                if w.home_location not in self.locations:
                    raise InstanceError(
                        f"workload {w.id}: home {w.home_location} is not a compute location"
                    )
            else:
                kind = self.topology.nodes[w.source_node].kind
                if kind not in (NodeKind.RADIO_CS, NodeKind.PON_ONU):
                    raise InstanceError(
                        f"workload {w.id}: real-time sources must be CS or ONU nodes"
                    )
        self.weights.validate_hierarchy(self.max_nc(), self.max_ns(), self.max_tnpc())

    # -- derived views -----------------------------------------------------

    def real_time_workloads(self) -> list[Workload]:
        return self.workloads.real_time()

    def node_local_workloads(self) -> list[Workload]:
        return self.workloads.node_local()

    def demands(self) -> dict[str, ResourceVector]:
        return {w.id: demand_of(w) for w in self.workloads.workloads}

    def location_order(self) -> list[str]:
        return list(self.locations.keys())

    def rate_to_source(self, w: Workload) -> float:
        return self.traffic_split[0] * w.uplink_gbps

    def rate_to_dc(self, w: Workload) -> float:
        return self.traffic_split[1] * w.uplink_gbps

    def source_paths(self, w: Workload, loc_id: str) -> tuple[NetworkPath, ...]:
        if loc_id == w.source_node:
            return (zero_hop_path(loc_id),)
        return self.topology.paths_between(w.source_node, loc_id)

    def dc_paths(self, loc_id: str) -> tuple[NetworkPath, ...]:
        return self.topology.paths_between(loc_id, self.topology.dc_node)

    def link_room(self, link_id: str) -> float:
        """Capacity left for modelled flows after the background load."""
        link = self.topology.links[link_id]
        return link.capacity_gbps - self.regular_traffic.get(link_id, 0.0)

    def max_ns(self) -> int:
        return sum(loc.server_count for loc in self.locations.values())

    def max_nc(self) -> int:
        return 3 * self.max_ns()

    def max_tnpc(self) -> float:
        """Worst-case TNPC: every link saturated (background included)."""
        static = evaluate_power(self.topology, {}).static_total
        load = math.fsum(
            link_power_coefficient(self.topology, link.id) * link.capacity_gbps
            for link in self.topology.links.values()
            if link_power_coefficient(self.topology, link.id) > 0
        )
        return static + load


@dataclass(frozen=True)
class ObjectiveBreakdown:
    blocked_count: int
    nc: int
    ns: int
    tnpc: float
    weighted_total: float


@dataclass
class PlacementSolution:
    mode: PlacementMode
    hosts: dict[str, str | None]  # workload id -> location (None = blocked real-time)
    servers: dict[str, int]  # TS only: workload id -> chassis index at its host
    source_paths: dict[str, tuple[str, ...]]  # placed real-time only, link ids
    dc_paths: dict[str, tuple[str, ...]]
    link_flows: dict[str, float]  # modelled flow per link, background excluded
    activation: Activation
    breakdown: ObjectiveBreakdown
    optimal: bool
    gap: float | None
    wall_time_s: float
    validated: bool = False

    def blocked_ids(self) -> list[str]:
        return [wid for wid, host in self.hosts.items() if host is None]

    def equivalent_to(self, other: "PlacementSolution") -> bool:
        """Field-for-field equality, ignoring timing and validation state."""
        return (
            self.mode == other.mode
            and self.hosts == other.hosts
            and self.servers == other.servers
            and self.source_paths == other.source_paths
            and self.dc_paths == other.dc_paths
            and self.link_flows == other.link_flows
            and self.activation == other.activation
            and self.breakdown == other.breakdown
            and self.optimal == other.optimal
        )

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "fogplace-solution/1",
            "mode": self.mode.value,
            "hosts": self.hosts,
            "servers": self.servers,
            "source_paths": {k: list(v) for k, v in self.source_paths.items()},
            "dc_paths": {k: list(v) for k, v in self.dc_paths.items()},
            "link_flows": self.link_flows,
            "activation": {
                "ns_per_location": dict(self.activation.ns_per_location),
                "nc": self.activation.nc,
                "ns": self.activation.ns,
                "chassis_components": {
                    loc: [[r.value for r in types] for types in per_chassis]
                    for loc, per_chassis in self.activation.chassis_components.items()
                },
            },
            "breakdown": {
                "blocked_count": self.breakdown.blocked_count,
                "nc": self.breakdown.nc,
                "ns": self.breakdown.ns,
                "tnpc": self.breakdown.tnpc,
                "weighted_total": self.breakdown.weighted_total,
            },
            "optimal": self.optimal,
            "gap": self.gap,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PlacementSolution":
        from ..capacity import ResourceType

        if data.get("format") != "fogplace-solution/1":
            raise InvalidParameterError("unrecognized solution format")
        activation = Activation(
            ns_per_location=dict(data["activation"]["ns_per_location"]),
            nc=data["activation"]["nc"],
            ns=data["activation"]["ns"],
            chassis_components={
                loc: tuple(tuple(ResourceType(r) for r in types) for types in per_chassis)
                for loc, per_chassis in data["activation"]["chassis_components"].items()
            },
        )
        b = data["breakdown"]
        return cls(
            mode=PlacementMode(data["mode"]),
            hosts=dict(data["hosts"]),
            servers={k: int(v) for k, v in data["servers"].items()},
            source_paths={k: tuple(v) for k, v in data["source_paths"].items()},
            dc_paths={k: tuple(v) for k, v in data["dc_paths"].items()},
            link_flows=dict(data["link_flows"]),
            activation=activation,
            breakdown=ObjectiveBreakdown(
                blocked_count=b["blocked_count"],
                nc=b["nc"],
                ns=b["ns"],
                tnpc=b["tnpc"],
                weighted_total=b["weighted_total"],
            ),
            optimal=data["optimal"],
            gap=data["gap"],
            wall_time_s=0.0,
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PlacementSolution":
        return cls.from_dict(json.loads(Path(path).read_text()))


def traffic_with_background(instance: ProblemInstance, flows: Mapping[str, float]) -> dict[str, float]:
    return {
        link_id: flows.get(link_id, 0.0) + instance.regular_traffic.get(link_id, 0.0)
        for link_id in instance.topology.links
    }


def compute_link_flows(
    instance: ProblemInstance,
    hosts: Mapping[str, str | None],
    source_paths: Mapping[str, tuple[str, ...]],
    dc_paths: Mapping[str, tuple[str, ...]],
) -> dict[str, float]:
    """Per-link modelled flow from the chosen paths (background excluded).

    Uses fsum per link so equal contribution multisets give identical totals.
    """
    contributions: dict[str, list[float]] = {link_id: [] for link_id in instance.topology.links}
    for w in instance.real_time_workloads():
        if hosts[w.id] is None:
            continue
        for link_id in source_paths[w.id]:
            contributions[link_id].append(instance.rate_to_source(w))
        for link_id in dc_paths[w.id]:
            contributions[link_id].append(instance.rate_to_dc(w))
    return {link_id: math.fsum(values) for link_id, values in contributions.items()}


def score_assignment(
    instance: ProblemInstance,
    hosts: Mapping[str, str | None],
    servers: Mapping[str, int],
    source_paths: Mapping[str, tuple[str, ...]],
    dc_paths: Mapping[str, tuple[str, ...]],
    *,
    optimal: bool,
    gap: float | None = None,
    wall_time_s: float = 0.0,
) -> PlacementSolution:
    """Build a fully scored PlacementSolution from an assignment and path choice."""
    flows = compute_link_flows(instance, hosts, source_paths, dc_paths)
    placed = {wid: host for wid, host in hosts.items() if host is not None}
    activation = activation_accounting(
        placed,
        instance.demands(),
        instance.locations,
        instance.mode,
        servers=servers if instance.mode == PlacementMode.TRADITIONAL else None,
    )
    power_traffic = traffic_with_background(instance, flows) if instance.include_regular_in_power else flows
    tnpc = evaluate_power(instance.topology, power_traffic).tnpc
    blocked = sum(1 for host in hosts.values() if host is None)
    weighted = math.fsum(
        [
            instance.weights.blocked_cost * blocked,
            instance.weights.component_cost * activation.nc,
            instance.weights.server_cost * activation.ns,
            tnpc,
        ]
    )
    return PlacementSolution(
        mode=instance.mode,
        hosts=dict(hosts),
        servers=dict(servers),
        source_paths=dict(source_paths),
        dc_paths=dict(dc_paths),
        link_flows=flows,
        activation=activation,
        breakdown=ObjectiveBreakdown(
            blocked_count=blocked,
            nc=activation.nc,
            ns=activation.ns,
            tnpc=tnpc,
            weighted_total=weighted,
        ),
        optimal=optimal,
        gap=gap,
        wall_time_s=wall_time_s,
    )
