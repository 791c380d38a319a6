"""Workload population generation.

Two kinds of workloads exist. Node-local workloads (VMs/VNFs belonging to a
CO, BO or CS) are pinned to their home location and generate no modelled
network traffic; their communication is part of the regular-traffic
background. Real-time workloads originate at a CS or a residential ONU and
must be placed somewhere in the fog (or be blocked).

Demands are drawn with numpy's PCG64 generator. Every workload gets its own
stream keyed by (seed, co_index, role, slot), so changing one count never
reshuffles the draws of the others and the population is reproducible from
the seed alone.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import InvalidParameterError
from .topology import NodeKind, Topology


class WorkloadKind(Enum):
    NODE_LOCAL = "node_local"
    REAL_TIME = "real_time"


@dataclass(frozen=True)
class Workload:
    id: str
    kind: WorkloadKind
    source_node: str
    cpu_cores: int
    ram_gb: float
    storage_gb: float
    uplink_gbps: float
    home_location: str | None = None  # set for node-local workloads only

    def __post_init__(self):
        if self.kind == WorkloadKind.NODE_LOCAL and self.home_location != self.source_node:
            raise InvalidParameterError(
                f"workload {self.id}: node-local workloads live at their source node"
            )
        if self.kind == WorkloadKind.REAL_TIME and self.home_location is not None:
            raise InvalidParameterError(f"workload {self.id}: real-time workloads have no home")


@dataclass(frozen=True)
class DemandRanges:
    """Closed sampling ranges; cores are integral, the rest continuous."""

    cpu_cores: tuple[int, int] = (3, 12)
    ram_gb: tuple[float, float] = (20.0, 60.0)
    storage_gb: tuple[float, float] = (20.0, 120.0)
    uplink_gbps: tuple[float, float] = (1.0, 2.0)


@dataclass(frozen=True)
class WorkloadCounts:
    co_local: int = 4
    bo_local: int = 4
    cs_local: int = 2
    cs_realtime: int = 1  # per CS
    onu_realtime: int = 1  # per ONU

    def __post_init__(self):
        for name in ("co_local", "bo_local", "cs_local", "cs_realtime", "onu_realtime"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"count {name} must be >= 0")


PAPER_COUNTS = WorkloadCounts()

# Per-workload stream keys: role codes keep streams disjoint across kinds.
_ROLE_CO_LOCAL = 0
_ROLE_BO_LOCAL = 1
_ROLE_CS_LOCAL = 2
_ROLE_CS_RT = 3
_ROLE_ONU_RT = 4


@dataclass(frozen=True)
class WorkloadSet:
    workloads: tuple[Workload, ...]
    seed: int
    traffic_scale: float = 1.0

    def real_time(self) -> list[Workload]:
        return [w for w in self.workloads if w.kind == WorkloadKind.REAL_TIME]

    def node_local(self) -> list[Workload]:
        return [w for w in self.workloads if w.kind == WorkloadKind.NODE_LOCAL]

    def by_id(self) -> dict[str, Workload]:
        return {w.id: w for w in self.workloads}

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        return {
            "format": "fogplace-workloads/1",
            "seed": self.seed,
            "traffic_scale": self.traffic_scale,
            "workloads": [
                {
                    "id": w.id,
                    "kind": w.kind.value,
                    "source_node": w.source_node,
                    "cpu_cores": w.cpu_cores,
                    "ram_gb": w.ram_gb,
                    "storage_gb": w.storage_gb,
                    "uplink_gbps": w.uplink_gbps,
                    "home_location": w.home_location,
                }
                for w in self.workloads
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "WorkloadSet":
        if data.get("format") != "fogplace-workloads/1":
            raise InvalidParameterError("unrecognized workload-set format")
        workloads = tuple(
            Workload(
                id=d["id"],
                kind=WorkloadKind(d["kind"]),
                source_node=d["source_node"],
                cpu_cores=d["cpu_cores"],
                ram_gb=d["ram_gb"],
                storage_gb=d["storage_gb"],
                uplink_gbps=d["uplink_gbps"],
                home_location=d["home_location"],
            )
            for d in data["workloads"]
        )
        return cls(workloads=workloads, seed=data["seed"], traffic_scale=data["traffic_scale"])

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "WorkloadSet":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _draw(seed_key: list[int], ranges: DemandRanges) -> tuple[int, float, float, float]:
    rng = np.random.default_rng(seed_key)
    cpu = int(rng.integers(ranges.cpu_cores[0], ranges.cpu_cores[1] + 1))
    ram = float(rng.uniform(*ranges.ram_gb))
    storage = float(rng.uniform(*ranges.storage_gb))
    uplink = float(rng.uniform(*ranges.uplink_gbps))
    return cpu, ram, storage, uplink


def generate(
    topology: Topology,
    seed: int,
    counts: WorkloadCounts = PAPER_COUNTS,
    ranges: DemandRanges = DemandRanges(),
) -> WorkloadSet:
    """Generate the seeded workload population for a topology.

    Pure function of (topology shape, seed, counts, ranges); repeated calls
    return identical sets.
    """
    if seed < 0:
        raise InvalidParameterError("seed must be a non-negative integer")

    workloads: list[Workload] = []

    def node_local(node_id: str, co: int, role: int, slot: int) -> Workload:
        cpu, ram, storage, uplink = _draw([seed, co, role, slot], ranges)
        return Workload(
            id=f"nl-{node_id}-{slot}",
            kind=WorkloadKind.NODE_LOCAL,
            source_node=node_id,
            cpu_cores=cpu,
            ram_gb=ram,
            storage_gb=storage,
            uplink_gbps=uplink,
            home_location=node_id,
        )

    onus_by_co: dict[int, list[str]] = {}
    for node in topology.nodes.values():
        if node.kind == NodeKind.PON_ONU:
            onus_by_co.setdefault(node.co_index, []).append(node.id)

    for i, co_id in enumerate(topology.co_ring):
        for s in range(counts.co_local):
            workloads.append(node_local(co_id, i, _ROLE_CO_LOCAL, s))
        bo_id = f"bo{i}"
        if bo_id in topology.nodes:
            for s in range(counts.bo_local):
                workloads.append(node_local(bo_id, i, _ROLE_BO_LOCAL, s))
        cs_id = f"cs{i}"
        if cs_id in topology.nodes:
            for s in range(counts.cs_local):
                workloads.append(node_local(cs_id, i, _ROLE_CS_LOCAL, s))
            for s in range(counts.cs_realtime):
                cpu, ram, storage, uplink = _draw([seed, i, _ROLE_CS_RT, s], ranges)
                workloads.append(
                    Workload(
                        id=f"rt-{cs_id}-{s}",
                        kind=WorkloadKind.REAL_TIME,
                        source_node=cs_id,
                        cpu_cores=cpu,
                        ram_gb=ram,
                        storage_gb=storage,
                        uplink_gbps=uplink,
                    )
                )
        for j, onu_id in enumerate(onus_by_co.get(i, [])):  # construction order
            for s in range(counts.onu_realtime):
                cpu, ram, storage, uplink = _draw([seed, i, _ROLE_ONU_RT, j, s], ranges)
                workloads.append(
                    Workload(
                        id=f"rt-{onu_id}-{s}",
                        kind=WorkloadKind.REAL_TIME,
                        source_node=onu_id,
                        cpu_cores=cpu,
                        ram_gb=ram,
                        storage_gb=storage,
                        uplink_gbps=uplink,
                    )
                )

    return WorkloadSet(workloads=tuple(workloads), seed=seed, traffic_scale=1.0)


def apply_traffic_scale(workload_set: WorkloadSet, scale: float) -> WorkloadSet:
    """Scale real-time uplink rates; node-local workloads are untouched."""
    if scale <= 0:
        raise InvalidParameterError(f"traffic scale must be > 0, got {scale}")
    scaled = tuple(
        replace(w, uplink_gbps=w.uplink_gbps * scale) if w.kind == WorkloadKind.REAL_TIME else w
        for w in workload_set.workloads
    )
    return WorkloadSet(
        workloads=scaled,
        seed=workload_set.seed,
        traffic_scale=workload_set.traffic_scale * scale,
    )
