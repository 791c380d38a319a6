"""Independent checker for placement solutions.

Re-verifies a solution against the model constraints using only the instance
and the solution itself (never solver internals): assignment shape, pinning,
compute capacity, path validity, flow totals, link capacity and the
objective breakdown.
"""

from __future__ import annotations

import math

from ..capacity import (
    CAPACITY_TOL,
    PlacementMode,
    ResourceVector,
    activation_accounting,
)
from ..errors import SolutionValidationError
from ..workload import WorkloadKind
from .instance import PlacementSolution, ProblemInstance, traffic_with_background
from ..power import evaluate_power

_REL_TOL = 1e-9


def _close(a: float, b: float) -> bool:
    return abs(a - b) <= _REL_TOL * max(1.0, abs(a), abs(b))


def _check_path_chain(instance, start: str, end: str, links: tuple[str, ...], label: str,
                      violations: list[str]) -> None:
    if not links:
        if start != end:
            violations.append(f"{label}: empty path but {start} != {end}")
        return
    current = start
    visited = {start}
    for link_id in links:
        link = instance.topology.links.get(link_id)
        if link is None:
            violations.append(f"{label}: unknown link {link_id}")
            return
        if current not in link.endpoints:
            violations.append(f"{label}: link {link_id} does not extend from {current}")
            return
        current = link.other_end(current)
        if current in visited:
            violations.append(f"{label}: path revisits node {current}")
            return
        visited.add(current)
    if current != end:
        violations.append(f"{label}: path ends at {current}, expected {end}")


def validate_solution(instance: ProblemInstance, solution: PlacementSolution) -> PlacementSolution:
    """Raise SolutionValidationError on any violation; otherwise mark validated."""
    violations: list[str] = []
    workloads = {w.id: w for w in instance.workloads.workloads}

    if solution.mode != instance.mode:
        violations.append(f"mode mismatch: {solution.mode} vs {instance.mode}")
    if set(solution.hosts) != set(workloads):
        violations.append("hosts must cover exactly the instance workloads")

    for wid, host in solution.hosts.items():
        w = workloads.get(wid)
        if w is None:
            continue
        if w.kind == WorkloadKind.NODE_LOCAL:
            if host != w.home_location:
                violations.append(f"{wid}: node-local workload not at home ({host})")
        elif host is not None and host not in instance.locations:
            violations.append(f"{wid}: host {host} is not a compute location")

    # compute capacity
    demands = instance.demands()
    if instance.mode == PlacementMode.TRADITIONAL:
        per_chassis: dict[tuple[str, int], ResourceVector] = {}
        for wid, host in solution.hosts.items():
            if host is None:
                continue
            chassis = solution.servers.get(wid)
            location = instance.locations.get(host)
            if location is None:
                continue
            if chassis is None or not 0 <= chassis < location.server_count:
                violations.append(f"{wid}: missing or out-of-range chassis {chassis}")
                continue
            key = (host, chassis)
            per_chassis[key] = per_chassis.get(key, ResourceVector.zero()).add(demands[wid])
        for (loc_id, chassis), load in per_chassis.items():
            cap = instance.locations[loc_id].server_config.capacity_vector()
            if not load.fits_within(cap):
                violations.append(f"chassis {loc_id}/{chassis} over capacity: {load}")
    else:
        if solution.servers:
            violations.append("servers map must be empty in disaggregated mode")
        per_location: dict[str, ResourceVector] = {}
        for wid, host in solution.hosts.items():
            if host is None:
                continue
            per_location[host] = per_location.get(host, ResourceVector.zero()).add(demands[wid])
        for loc_id, load in per_location.items():
            if loc_id in instance.locations and not load.fits_within(
                instance.locations[loc_id].pool_vector()
            ):
                violations.append(f"pool {loc_id} over capacity: {load}")

    # paths
    dc = instance.topology.dc_node
    for w in instance.real_time_workloads():
        host = solution.hosts.get(w.id)
        if host is None:
            if w.id in solution.source_paths or w.id in solution.dc_paths:
                violations.append(f"{w.id}: blocked workload has paths")
            continue
        if w.id not in solution.source_paths or w.id not in solution.dc_paths:
            violations.append(f"{w.id}: placed workload missing a path")
            continue
        _check_path_chain(instance, w.source_node, host, solution.source_paths[w.id],
                          f"{w.id} source path", violations)
        _check_path_chain(instance, host, dc, solution.dc_paths[w.id],
                          f"{w.id} dc path", violations)
    for wid in solution.source_paths:
        if workloads.get(wid) is not None and workloads[wid].kind == WorkloadKind.NODE_LOCAL:
            violations.append(f"{wid}: node-local workloads route no traffic")

    # flows and link capacity
    contributions: dict[str, list[float]] = {link_id: [] for link_id in instance.topology.links}
    for w in instance.real_time_workloads():
        if solution.hosts.get(w.id) is None:
            continue
        for link_id in solution.source_paths.get(w.id, ()):
            if link_id in contributions:
                contributions[link_id].append(instance.rate_to_source(w))
        for link_id in solution.dc_paths.get(w.id, ()):
            if link_id in contributions:
                contributions[link_id].append(instance.rate_to_dc(w))
    if set(solution.link_flows) != set(instance.topology.links):
        violations.append("link_flows must cover exactly the topology links")
    else:
        for link_id, values in contributions.items():
            expected = math.fsum(values)
            if not _close(solution.link_flows[link_id], expected):
                violations.append(
                    f"{link_id}: declared flow {solution.link_flows[link_id]} != "
                    f"recomputed {expected}"
                )
        for link_id, link in instance.topology.links.items():
            total = solution.link_flows[link_id] + instance.regular_traffic.get(link_id, 0.0)
            if total > link.capacity_gbps + CAPACITY_TOL:
                violations.append(
                    f"{link_id}: flow+background {total} exceeds capacity {link.capacity_gbps}"
                )

    # accounting and objective breakdown
    placed = {wid: host for wid, host in solution.hosts.items() if host is not None}
    try:
        activation = activation_accounting(
            placed,
            demands,
            instance.locations,
            instance.mode,
            servers=solution.servers if instance.mode == PlacementMode.TRADITIONAL else None,
        )
    except Exception as exc:  # noqa: BLE001 - reported as a violation
        violations.append(f"activation accounting failed: {exc}")
        activation = None
    if activation is not None:
        if activation != solution.activation:
            violations.append("activation map disagrees with recomputed accounting")
        blocked = sum(1 for host in solution.hosts.values() if host is None)
        if solution.breakdown.blocked_count != blocked:
            violations.append(
                f"blocked_count {solution.breakdown.blocked_count} != actual {blocked}"
            )
        if solution.breakdown.nc != activation.nc or solution.breakdown.ns != activation.ns:
            violations.append("NC/NS in breakdown disagree with accounting")
        traffic = (
            traffic_with_background(instance, solution.link_flows)
            if instance.include_regular_in_power
            else solution.link_flows
        )
        tnpc = evaluate_power(instance.topology, traffic).tnpc
        if not _close(solution.breakdown.tnpc, tnpc):
            violations.append(f"TNPC {solution.breakdown.tnpc} != recomputed {tnpc}")
        weighted = math.fsum(
            [
                instance.weights.blocked_cost * blocked,
                instance.weights.component_cost * activation.nc,
                instance.weights.server_cost * activation.ns,
                tnpc,
            ]
        )
        if not _close(solution.breakdown.weighted_total, weighted):
            violations.append(
                f"weighted total {solution.breakdown.weighted_total} != recomputed {weighted}"
            )

    if violations:
        raise SolutionValidationError(violations)
    solution.validated = True
    return solution
