"""Compute capacity semantics for traditional and disaggregated servers.

A traditional server (TS) is a chassis; a workload placed on it must draw
CPU, RAM and storage from that single chassis. A disaggregated server (DS)
location pools each resource type across all of its chassis: workloads draw
each resource type from the location-wide pool, never across locations.

Each chassis contributes exactly one component per resource type, so a
location with S servers exposes 3*S components. Activation accounting turns
an assignment into the number of active components (NC) and active chassis
(NS): under TS a chassis is active iff it hosts a workload (NC = 3*NS);
under DS the minimal number of components per type covers the pooled demand
and components are packed into the fewest chassis, filling each chassis
before opening the next.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Mapping

from .errors import InfeasibleAssignmentError, InvalidParameterError
from .workload import Workload

#: Tolerance for capacity comparisons on summed float demands.
CAPACITY_TOL = 1e-9


class ResourceType(Enum):
    CPU = "cpu"
    RAM = "ram"
    STORAGE = "storage"


RESOURCE_TYPES = (ResourceType.CPU, ResourceType.RAM, ResourceType.STORAGE)


@dataclass(frozen=True)
class ResourceVector:
    cpu: float
    ram: float
    storage: float

    def get(self, r: ResourceType) -> float:
        return {ResourceType.CPU: self.cpu, ResourceType.RAM: self.ram,
                ResourceType.STORAGE: self.storage}[r]

    def add(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(self.cpu + other.cpu, self.ram + other.ram,
                              self.storage + other.storage)

    def sub(self, other: "ResourceVector") -> "ResourceVector":
        return ResourceVector(self.cpu - other.cpu, self.ram - other.ram,
                              self.storage - other.storage)

    def scale(self, k: float) -> "ResourceVector":
        return ResourceVector(self.cpu * k, self.ram * k, self.storage * k)

    def fits_within(self, other: "ResourceVector", tol: float = CAPACITY_TOL) -> bool:
        return (self.cpu <= other.cpu + tol and self.ram <= other.ram + tol
                and self.storage <= other.storage + tol)

    @classmethod
    def zero(cls) -> "ResourceVector":
        return cls(0.0, 0.0, 0.0)


def demand_of(workload: Workload) -> ResourceVector:
    return ResourceVector(float(workload.cpu_cores), workload.ram_gb, workload.storage_gb)


@dataclass(frozen=True)
class ServerConfig:
    cpu_cores: int = 12
    ram_gb: float = 64.0
    storage_gb: float = 300.0

    def __post_init__(self):
        if self.cpu_cores <= 0 or self.ram_gb <= 0 or self.storage_gb <= 0:
            raise InvalidParameterError("server capacities must be positive")

    def capacity(self, r: ResourceType) -> float:
        return self.capacity_vector().get(r)

    def capacity_vector(self) -> ResourceVector:
        return ResourceVector(float(self.cpu_cores), self.ram_gb, self.storage_gb)


DEFAULT_SERVER_CONFIG = ServerConfig()


@dataclass(frozen=True)
class ComputeLocation:
    node_id: str
    server_count: int
    server_config: ServerConfig = DEFAULT_SERVER_CONFIG

    def __post_init__(self):
        if self.server_count <= 0:
            raise InvalidParameterError(f"{self.node_id}: server_count must be positive")

    def pool_vector(self) -> ResourceVector:
        return self.server_config.capacity_vector().scale(self.server_count)


@dataclass(frozen=True)
class ResourceComponent:
    location: str
    chassis_index: int
    component_type: ResourceType
    capacity: float


def components_of(location: ComputeLocation) -> tuple[ResourceComponent, ...]:
    """All 3 * server_count components of a location, chassis-major order."""
    return tuple(
        ResourceComponent(location.node_id, i, r, location.server_config.capacity(r))
        for i in range(location.server_count)
        for r in RESOURCE_TYPES
    )


class PlacementMode(Enum):
    TRADITIONAL = "ts"
    DISAGGREGATED = "ds"


def fits_on_server(workload: Workload, server_config: ServerConfig,
                   residual: ResourceVector) -> bool:
    """TS packing predicate: all three demands fit one chassis's residual."""
    for r in RESOURCE_TYPES:
        if residual.get(r) > server_config.capacity(r) + CAPACITY_TOL:
            raise InvalidParameterError("residual exceeds server capacity")
    return demand_of(workload).fits_within(residual)


def ds_allocation_feasible(workloads, location: ComputeLocation) -> bool:
    """Pooled feasibility: per resource type, total demand fits the location pool."""
    total = ResourceVector.zero()
    for w in workloads:
        total = total.add(demand_of(w))
    return total.fits_within(location.pool_vector())


def _component_count(total_demand: float, unit_capacity: float) -> int:
    if total_demand <= 0.0:
        return 0
    # Guard against float fuzz pushing an exact multiple over the next unit.
    return int(math.ceil(total_demand / unit_capacity - 1e-12))


def exact_min_server_packing(
    wids,
    demands: Mapping[str, ResourceVector],
    location: ComputeLocation,
) -> dict[str, int] | None:
    """Exhaustive TS packing of workloads onto a location's chassis.

    Returns an assignment using the minimum number of chassis, or None when
    no feasible packing exists. Deterministic: workloads are handled in id
    order and only the first empty chassis may be opened (chassis within a
    location are interchangeable).
    """
    ordered = sorted(wids)
    cap = location.server_config.capacity_vector()
    residuals = [cap] * location.server_count
    assign: dict[str, int] = {}
    best: dict[str, int] | None = None
    best_used = location.server_count + 1

    def recurse(pos: int, used: int) -> None:
        nonlocal best, best_used
        if used >= best_used:
            return
        if pos == len(ordered):
            best = dict(assign)
            best_used = used
            return
        wid = ordered[pos]
        d = demands[wid]
        for i in range(min(used + 1, location.server_count)):
            if d.fits_within(residuals[i]):
                saved = residuals[i]
                residuals[i] = saved.sub(d)
                assign[wid] = i
                recurse(pos + 1, max(used, i + 1))
                residuals[i] = saved
                del assign[wid]

    recurse(0, 0)
    return best


@dataclass(frozen=True)
class Activation:
    """Active-resource accounting for an assignment.

    ``chassis_components`` maps each location to a per-chassis tuple of the
    active component types on that chassis (empty tuple = idle chassis).
    """

    ns_per_location: Mapping[str, int]
    nc: int
    ns: int
    chassis_components: Mapping[str, tuple[tuple[ResourceType, ...], ...]]


def activation_accounting(
    placed: Mapping[str, str],
    demands: Mapping[str, ResourceVector],
    locations: Mapping[str, ComputeLocation],
    mode: PlacementMode,
    servers: Mapping[str, int] | None = None,
) -> Activation:
    """Count active components/chassis for a feasible assignment.

    ``placed`` maps workload id -> location node id (placed workloads only).
    TS mode additionally needs ``servers`` (workload id -> chassis index) and
    verifies per-chassis capacity; DS mode verifies the pooled capacity.
    """
    by_location: dict[str, list[str]] = {loc: [] for loc in locations}
    for wid, loc in placed.items():
        if loc not in locations:
            raise InfeasibleAssignmentError(f"{wid} assigned to unknown location {loc}")
        by_location[loc].append(wid)

    ns_per_location: dict[str, int] = {}
    chassis_components: dict[str, tuple[tuple[ResourceType, ...], ...]] = {}
    nc = 0

    for loc_id, location in locations.items():
        wids = by_location[loc_id]
        cap = location.server_config.capacity_vector()

        if mode == PlacementMode.TRADITIONAL:
            if servers is None:
                raise InvalidParameterError("TS accounting needs a workload->chassis map")
            used: dict[int, ResourceVector] = {}
            for wid in wids:
                chassis = servers.get(wid)
                if chassis is None or not 0 <= chassis < location.server_count:
                    raise InfeasibleAssignmentError(f"{wid}: bad chassis index {chassis}")
                used[chassis] = used.get(chassis, ResourceVector.zero()).add(demands[wid])
            for chassis, load in used.items():
                if not load.fits_within(cap):
                    raise InfeasibleAssignmentError(
                        f"{loc_id} chassis {chassis} over capacity"
                    )
            per_chassis = tuple(
                tuple(RESOURCE_TYPES) if i in used else ()
                for i in range(location.server_count)
            )
            ns_here = len(used)
        else:
            total = ResourceVector.zero()
            for wid in wids:
                total = total.add(demands[wid])
            if not total.fits_within(location.pool_vector()):
                raise InfeasibleAssignmentError(f"{loc_id} pool over capacity")
            counts = {
                r: _component_count(total.get(r), cap.get(r)) for r in RESOURCE_TYPES
            }
            ns_here = max(counts.values())
            per_chassis = tuple(
                tuple(r for r in RESOURCE_TYPES if counts[r] > i)
                for i in range(location.server_count)
            )

        ns_per_location[loc_id] = ns_here
        chassis_components[loc_id] = per_chassis
        nc += sum(len(types) for types in per_chassis)

    return Activation(
        ns_per_location=ns_per_location,
        nc=nc,
        ns=sum(ns_per_location.values()),
        chassis_components=chassis_components,
    )
