"""Deterministic first-fit heuristic; used as an upper bound and sanity check.

Real-time workloads are tried in decreasing-uplink order against candidate
locations in increasing-hop order, taking the first location whose compute
residual and whose shortest feasible path pair admit the workload. The
result is always constraint-valid but generally not optimal.
"""

from __future__ import annotations

import time

from ..capacity import (
    CAPACITY_TOL,
    PlacementMode,
    exact_min_server_packing,
)
from ..errors import NodeLocalCapacityError
from .instance import PlacementSolution, ProblemInstance, score_assignment


def _place_node_local(instance: ProblemInstance, residuals, pools) -> dict[str, int]:
    """Pin node-local workloads; first-fit-decreasing with an exact fallback."""
    demands = instance.demands()
    servers: dict[str, int] = {}
    by_location: dict[str, list] = {}
    for w in instance.node_local_workloads():
        by_location.setdefault(w.home_location, []).append(w)

    for loc_id, members in by_location.items():
        location = instance.locations[loc_id]
        if instance.mode == PlacementMode.DISAGGREGATED:
            for w in members:
                pools[loc_id] = pools[loc_id].sub(demands[w.id])
            if min(pools[loc_id].cpu, pools[loc_id].ram, pools[loc_id].storage) < -CAPACITY_TOL:
                raise NodeLocalCapacityError(f"node-local workloads do not fit pool at {loc_id}")
            continue
        ordered = sorted(
            members,
            key=lambda w: (-w.cpu_cores, -w.ram_gb, -w.storage_gb, w.id),
        )
        placed: dict[str, int] = {}
        for w in ordered:
            for i in range(location.server_count):
                if demands[w.id].fits_within(residuals[(loc_id, i)]):
                    residuals[(loc_id, i)] = residuals[(loc_id, i)].sub(demands[w.id])
                    placed[w.id] = i
                    break
            else:
                break
        if len(placed) != len(members):
            # First-fit failed; fall back to the exhaustive packing.
            exact = exact_min_server_packing([w.id for w in members], demands, location)
            if exact is None:
                raise NodeLocalCapacityError(f"node-local workloads do not fit {loc_id}")
            for i in range(location.server_count):
                residuals[(loc_id, i)] = location.server_config.capacity_vector()
            for wid, chassis in exact.items():
                residuals[(loc_id, chassis)] = residuals[(loc_id, chassis)].sub(demands[wid])
            placed = exact
        servers.update(placed)
    return servers


def greedy_warm_start(instance: ProblemInstance) -> PlacementSolution:
    started = time.perf_counter()
    demands = instance.demands()
    residuals = {
        (loc_id, i): loc.server_config.capacity_vector()
        for loc_id, loc in instance.locations.items()
        for i in range(loc.server_count)
    }
    pools = {loc_id: loc.pool_vector() for loc_id, loc in instance.locations.items()}
    link_room = {link_id: instance.link_room(link_id) for link_id in instance.topology.links}

    servers = _place_node_local(instance, residuals, pools)
    hosts: dict[str, str | None] = {w.id: w.home_location for w in instance.node_local_workloads()}
    source_paths: dict[str, tuple[str, ...]] = {}
    dc_paths: dict[str, tuple[str, ...]] = {}

    def hop_rank(w, loc_id: str) -> tuple[int, str]:
        return (instance.source_paths(w, loc_id)[0].hop_count, loc_id)

    ordered = sorted(instance.real_time_workloads(), key=lambda w: (-w.uplink_gbps, w.id))
    for w in ordered:
        placed = False
        for loc_id in sorted(instance.location_order(), key=lambda lid: hop_rank(w, lid)):
            location = instance.locations[loc_id]
            chassis = None
            if instance.mode == PlacementMode.TRADITIONAL:
                for i in range(location.server_count):
                    if demands[w.id].fits_within(residuals[(loc_id, i)]):
                        chassis = i
                        break
                if chassis is None:
                    continue
            else:
                if not demands[w.id].fits_within(pools[loc_id]):
                    continue

            rate_src = instance.rate_to_source(w)
            rate_dc = instance.rate_to_dc(w)
            chosen = None
            for src in instance.source_paths(w, loc_id):
                for dc in instance.dc_paths(loc_id):
                    need: dict[str, float] = {}
                    for link_id in src.links:
                        need[link_id] = need.get(link_id, 0.0) + rate_src
                    for link_id in dc.links:
                        need[link_id] = need.get(link_id, 0.0) + rate_dc
                    if all(v <= link_room[link_id] + CAPACITY_TOL for link_id, v in need.items()):
                        chosen = (src, dc, need)
                        break
                if chosen:
                    break
            if chosen is None:
                continue

            src, dc, need = chosen
            hosts[w.id] = loc_id
            source_paths[w.id] = src.links
            dc_paths[w.id] = dc.links
            if instance.mode == PlacementMode.TRADITIONAL:
                servers[w.id] = chassis
                residuals[(loc_id, chassis)] = residuals[(loc_id, chassis)].sub(demands[w.id])
            else:
                pools[loc_id] = pools[loc_id].sub(demands[w.id])
            for link_id, v in need.items():
                link_room[link_id] -= v
            placed = True
            break
        if not placed:
            hosts[w.id] = None

    return score_assignment(
        instance,
        hosts,
        servers,
        source_paths,
        dc_paths,
        optimal=False,
        wall_time_s=time.perf_counter() - started,
    )
