"""Derived study metrics for a validated placement solution.

Blocked-cause attribution re-tests each blocked workload against the residual
state of the solution (everything else stays where the optimizer put it)
under three single relaxations, assigning the first one that would unblock
it: (1) its own last-mile tail made infinite, (2) all CS/BO access uplinks
made infinite, (3) compute capacity made infinite everywhere. Workloads that
none of the single relaxations unblocks are lumped into the third bucket:
reaching them would take several relaxations at once, which still means
usable capacity was stranded behind the network.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from statistics import mean
from typing import Mapping

from .capacity import CAPACITY_TOL, PlacementMode, ResourceVector
from .errors import UnvalidatedSolutionError
from .optimizer.instance import PlacementSolution, ProblemInstance, traffic_with_background
from .power import PowerBreakdown, evaluate_power
from .topology import LinkSegment, NodeKind
from .workload import Workload


class BlockedCause(Enum):
    ACCESS_TAIL = "access_tail_capacity"
    ACCESS_UPLINK = "cs_bo_uplink_capacity"
    STRANDED_REMOTE = "stranded_remote_capacity"


@dataclass(frozen=True)
class MetricsReport:
    mode: str
    blocked_count: int
    blocked_by_cause: Mapping[str, int]
    active_servers: int
    idle_servers: int
    active_components: int
    idle_components: int
    idle_server_share_bo: float | None
    idle_server_share_cs: float | None
    traffic_by_segment: Mapping[str, float]
    traffic_with_background_by_segment: Mapping[str, float]
    power: PowerBreakdown
    avg_hop_count: float | None

    def to_record(self) -> dict:
        """Flat record with stable column names (traffic in Gb/s, power in W)."""
        record = {
            "mode": self.mode,
            "blocked_count": self.blocked_count,
            "active_servers": self.active_servers,
            "idle_servers": self.idle_servers,
            "active_components": self.active_components,
            "idle_components": self.idle_components,
            "idle_share_bo": self.idle_server_share_bo,
            "idle_share_cs": self.idle_server_share_cs,
            "tnpc_w": self.power.tnpc,
            "power_static_w": self.power.static_total,
            "power_load_w": self.power.load_proportional_total,
            "avg_hop_count": self.avg_hop_count,
        }
        for cause in BlockedCause:
            record[f"blocked_{cause.value}"] = self.blocked_by_cause.get(cause.value, 0)
        for segment in LinkSegment:
            record[f"traffic_{segment.value}_gbps"] = self.traffic_by_segment.get(
                segment.value, 0.0
            )
            record[f"traffic_bg_{segment.value}_gbps"] = (
                self.traffic_with_background_by_segment.get(segment.value, 0.0)
            )
            record[f"power_{segment.value}_w"] = self.power.per_segment.get(segment, 0.0)
        return record


class _ResidualState:
    """Leftover compute and link capacity after the solution's placements."""

    def __init__(self, instance: ProblemInstance, solution: PlacementSolution):
        self.instance = instance
        demands = instance.demands()
        self.link_room = {
            link_id: instance.link_room(link_id) - solution.link_flows.get(link_id, 0.0)
            for link_id in instance.topology.links
        }
        self.chassis_residual: dict[tuple[str, int], ResourceVector] = {}
        self.pool_residual: dict[str, ResourceVector] = {}
        if instance.mode == PlacementMode.TRADITIONAL:
            for loc_id, loc in instance.locations.items():
                for i in range(loc.server_count):
                    self.chassis_residual[(loc_id, i)] = loc.server_config.capacity_vector()
            for wid, host in solution.hosts.items():
                if host is None:
                    continue
                key = (host, solution.servers[wid])
                self.chassis_residual[key] = self.chassis_residual[key].sub(demands[wid])
        else:
            self.pool_residual = {
                loc_id: loc.pool_vector() for loc_id, loc in instance.locations.items()
            }
            for wid, host in solution.hosts.items():
                if host is None:
                    continue
                self.pool_residual[host] = self.pool_residual[host].sub(demands[wid])

    def compute_fits(self, demand: ResourceVector, loc_id: str) -> bool:
        if self.instance.mode == PlacementMode.TRADITIONAL:
            loc = self.instance.locations[loc_id]
            return any(
                demand.fits_within(self.chassis_residual[(loc_id, i)])
                for i in range(loc.server_count)
            )
        return demand.fits_within(self.pool_residual[loc_id])

    def placeable(self, w: Workload, relaxed_links: frozenset[str], relax_compute: bool) -> bool:
        instance = self.instance
        demand = instance.demands()[w.id]
        rate_src = instance.rate_to_source(w)
        rate_dc = instance.rate_to_dc(w)
        for loc_id in instance.location_order():
            if not relax_compute and not self.compute_fits(demand, loc_id):
                continue
            for src in instance.source_paths(w, loc_id):
                for dc in instance.dc_paths(loc_id):
                    need: dict[str, float] = {}
                    for link_id in src.links:
                        need[link_id] = need.get(link_id, 0.0) + rate_src
                    for link_id in dc.links:
                        need[link_id] = need.get(link_id, 0.0) + rate_dc
                    if all(
                        link_id in relaxed_links or v <= self.link_room[link_id] + CAPACITY_TOL
                        for link_id, v in need.items()
                    ):
                        return True
        return False


def _attribute_causes(
    instance: ProblemInstance, solution: PlacementSolution
) -> dict[str, int]:
    counts = {cause.value: 0 for cause in BlockedCause}
    blocked = [w for w in instance.real_time_workloads() if solution.hosts[w.id] is None]
    if not blocked:
        return counts
    state = _ResidualState(instance, solution)
    uplinks = frozenset(
        link.id for link in instance.topology.links_of_segment(LinkSegment.METRO_ACCESS)
    )
    for w in blocked:
        source_kind = instance.topology.nodes[w.source_node].kind
        if source_kind == NodeKind.PON_ONU:
            tail = frozenset({instance.topology.attachment_link(w.source_node).id})
            if state.placeable(w, tail, relax_compute=False):
                counts[BlockedCause.ACCESS_TAIL.value] += 1
                continue
        if state.placeable(w, uplinks, relax_compute=False):
            counts[BlockedCause.ACCESS_UPLINK.value] += 1
            continue
        counts[BlockedCause.STRANDED_REMOTE.value] += 1
    return counts


def compute_metrics(solution: PlacementSolution, instance: ProblemInstance) -> MetricsReport:
    if not solution.validated:
        raise UnvalidatedSolutionError("validate the solution before computing metrics")

    total_servers = sum(loc.server_count for loc in instance.locations.values())
    total_components = 3 * total_servers
    active_servers = solution.activation.ns
    active_components = solution.activation.nc

    idle_bo = idle_cs = 0
    for loc_id, loc in instance.locations.items():
        idle_here = loc.server_count - solution.activation.ns_per_location[loc_id]
        kind = instance.topology.nodes[loc_id].kind
        if kind == NodeKind.ENTERPRISE_BO:
            idle_bo += idle_here
        elif kind == NodeKind.RADIO_CS:
            idle_cs += idle_here
    idle_edge = idle_bo + idle_cs
    share_bo = idle_bo / idle_edge if idle_edge else None
    share_cs = idle_cs / idle_edge if idle_edge else None

    with_background = traffic_with_background(instance, solution.link_flows)
    traffic_by_segment: dict[str, float] = {}
    traffic_bg_by_segment: dict[str, float] = {}
    for segment in LinkSegment:
        links = instance.topology.links_of_segment(segment)
        traffic_by_segment[segment.value] = math.fsum(
            solution.link_flows[link.id] for link in links
        )
        traffic_bg_by_segment[segment.value] = math.fsum(
            with_background[link.id] for link in links
        )

    power_traffic = with_background if instance.include_regular_in_power else solution.link_flows
    power = evaluate_power(instance.topology, power_traffic)

    hops = [
        len(solution.source_paths[w.id])
        for w in instance.real_time_workloads()
        if solution.hosts[w.id] is not None
    ]
    avg_hops = mean(hops) if hops else None

    return MetricsReport(
        mode=instance.mode.value,
        blocked_count=solution.breakdown.blocked_count,
        blocked_by_cause=_attribute_causes(instance, solution),
        active_servers=active_servers,
        idle_servers=total_servers - active_servers,
        active_components=active_components,
        idle_components=total_components - active_components,
        idle_server_share_bo=share_bo,
        idle_server_share_cs=share_cs,
        traffic_by_segment=traffic_by_segment,
        traffic_with_background_by_segment=traffic_bg_by_segment,
        power=power,
        avg_hop_count=avg_hops,
    )
