"""Brute-force placement oracle for tiny instances.

Exhaustively enumerates every (host or blocked) choice and every candidate
path pair per real-time workload, checks compute and link capacity, and
returns the minimum-objective solution. Ties are broken by the
lexicographically smallest assignment vector, where each workload's options
are ordered (locations in instance order x source paths x DC paths, blocked
last).

The search is independent of the MILP machinery; it shares only the
objective definition (accounting and power evaluation), which dedicated
tests pin against hand-derived values.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass

from ..capacity import (
    CAPACITY_TOL,
    RESOURCE_TYPES,
    PlacementMode,
    ResourceVector,
    exact_min_server_packing,
)
from ..errors import InstanceTooLargeError, NodeLocalCapacityError
from ..power import evaluate_power, link_power_coefficient
from .instance import PlacementSolution, ProblemInstance, score_assignment

_MAX_REAL_TIME = 4
_MAX_LOCATIONS = 3
_MAX_SERVERS_PER_LOCATION = 2


@dataclass(frozen=True)
class _Option:
    """One way to handle a real-time workload: a host with chosen paths, or blocked."""

    location: str | None
    source_links: tuple[str, ...] = ()
    dc_links: tuple[str, ...] = ()
    contributions: tuple[tuple[str, float], ...] = ()  # (link id, Gb/s)
    power_cost: float = 0.0  # load-proportional watts added by this option


def _guard(instance: ProblemInstance) -> None:
    rt_count = len(instance.real_time_workloads())
    if rt_count > _MAX_REAL_TIME:
        raise InstanceTooLargeError(f"{rt_count} real-time workloads > {_MAX_REAL_TIME}")
    if len(instance.locations) > _MAX_LOCATIONS:
        raise InstanceTooLargeError(f"{len(instance.locations)} locations > {_MAX_LOCATIONS}")
    for loc in instance.locations.values():
        if loc.server_count > _MAX_SERVERS_PER_LOCATION:
            raise InstanceTooLargeError(
                f"{loc.node_id} has {loc.server_count} servers > {_MAX_SERVERS_PER_LOCATION}"
            )


class _LocationAccounting:
    """Per-location feasibility/accounting cache keyed by the placed id set."""

    def __init__(self, instance: ProblemInstance):
        self.instance = instance
        self.demands = instance.demands()
        self.nl_by_location: dict[str, list[str]] = {loc: [] for loc in instance.locations}
        for w in instance.node_local_workloads():
            self.nl_by_location[w.home_location].append(w.id)
        self._cache: dict[tuple[str, tuple[str, ...]], tuple | None] = {}

    def evaluate(self, loc_id: str, rt_ids: tuple[str, ...]):
        """Returns (nc, ns, packing or None) or None when infeasible."""
        key = (loc_id, rt_ids)
        if key in self._cache:
            return self._cache[key]
        location = self.instance.locations[loc_id]
        wids = self.nl_by_location[loc_id] + list(rt_ids)
        result = None
        if self.instance.mode == PlacementMode.TRADITIONAL:
            packing = exact_min_server_packing(wids, self.demands, location)
            if packing is not None:
                ns = len(set(packing.values()))
                result = (3 * ns, ns, packing)
        else:
            total = ResourceVector.zero()
            for wid in wids:
                total = total.add(self.demands[wid])
            if total.fits_within(location.pool_vector()):
                cap = location.server_config.capacity_vector()
                counts = []
                for r in RESOURCE_TYPES:
                    demand = total.get(r)
                    counts.append(
                        0 if demand <= 0.0 else int(math.ceil(demand / cap.get(r) - 1e-12))
                    )
                result = (sum(counts), max(counts), None)
        self._cache[key] = result
        return result


def brute_force_oracle(instance: ProblemInstance) -> PlacementSolution:
    """Enumerate all assignments of a tiny instance and return the optimum."""
    started = time.perf_counter()
    _guard(instance)

    accounting = _LocationAccounting(instance)
    for loc_id in instance.locations:
        if accounting.evaluate(loc_id, ()) is None:
            raise NodeLocalCapacityError(
                f"node-local workloads do not fit location {loc_id} "
                f"under mode={instance.mode.value}"
            )

    rt = instance.real_time_workloads()
    link_room = {link_id: instance.link_room(link_id) for link_id in instance.topology.links}
    coef = {link_id: link_power_coefficient(instance.topology, link_id)
            for link_id in instance.topology.links}

    options: list[list[_Option]] = []
    for w in rt:
        w_options = []
        for loc_id in instance.location_order():
            for src in instance.source_paths(w, loc_id):
                for dc in instance.dc_paths(loc_id):
                    contributions = tuple(
                        [(link_id, instance.rate_to_source(w)) for link_id in src.links]
                        + [(link_id, instance.rate_to_dc(w)) for link_id in dc.links]
                    )
                    power = sum(coef[link_id] * rate for link_id, rate in contributions)
                    w_options.append(
                        _Option(loc_id, src.links, dc.links, contributions, power)
                    )
        w_options.append(_Option(None))
        options.append(w_options)

    base_traffic = dict(instance.regular_traffic) if instance.include_regular_in_power else {}
    base_power = evaluate_power(instance.topology, base_traffic).tnpc
    weights = instance.weights

    best_value = math.inf
    best_combo: tuple[_Option, ...] | None = None

    for combo in itertools.product(*options):
        flows: dict[str, float] = {}
        feasible = True
        for option in combo:
            for link_id, rate in option.contributions:
                flows[link_id] = flows.get(link_id, 0.0) + rate
        for link_id, flow in flows.items():
            if flow > link_room[link_id] + CAPACITY_TOL:
                feasible = False
                break
        if not feasible:
            continue

        rt_at: dict[str, list[str]] = {}
        blocked = 0
        for w, option in zip(rt, combo):
            if option.location is None:
                blocked += 1
            else:
                rt_at.setdefault(option.location, []).append(w.id)

        nc = ns = 0
        power = base_power
        for loc_id in instance.location_order():
            evaluated = accounting.evaluate(loc_id, tuple(rt_at.get(loc_id, [])))
            if evaluated is None:
                feasible = False
                break
            nc += evaluated[0]
            ns += evaluated[1]
        if not feasible:
            continue
        for option in combo:
            power += option.power_cost

        value = (
            weights.blocked_cost * blocked
            + weights.component_cost * nc
            + weights.server_cost * ns
            + power
        )
        if value < best_value:
            best_value = value
            best_combo = combo

    assert best_combo is not None  # the all-blocked combo is always feasible

    hosts: dict[str, str | None] = {}
    servers: dict[str, int] = {}
    source_paths: dict[str, tuple[str, ...]] = {}
    dc_paths: dict[str, tuple[str, ...]] = {}
    for w in instance.node_local_workloads():
        hosts[w.id] = w.home_location
    rt_at = {}
    for w, option in zip(rt, best_combo):
        hosts[w.id] = option.location
        if option.location is not None:
            rt_at.setdefault(option.location, []).append(w.id)
            source_paths[w.id] = option.source_links
            dc_paths[w.id] = option.dc_links
    if instance.mode == PlacementMode.TRADITIONAL:
        for loc_id in instance.location_order():
            evaluated = accounting.evaluate(loc_id, tuple(rt_at.get(loc_id, [])))
            servers.update(evaluated[2])

    return score_assignment(
        instance,
        hosts,
        servers,
        source_paths,
        dc_paths,
        optimal=True,
        wall_time_s=time.perf_counter() - started,
    )
