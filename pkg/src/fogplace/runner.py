"""Experiment harness: scenario grid execution, instance dump/replay and the
oracle self-check.

A scenario cell is (server mode, traffic scenario, access-link capacity);
the reference grid is {ts,ds} x {s1,s2} x {10,40} Gb/s. Every run is a pure
function of its ScenarioConfig, so reruns produce byte-identical outputs and
a dumped instance replays to the identical solution.
"""

from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field, replace
from multiprocessing import Pool
from pathlib import Path
from statistics import mean, stdev
from typing import Iterable

import numpy as np

from . import __version__
from .capacity import ComputeLocation, PlacementMode, ServerConfig
from .errors import InvalidParameterError
from .metrics import MetricsReport, compute_metrics
from .optimizer import (
    ObjectiveWeights,
    PlacementSolution,
    ProblemInstance,
    RegularTrafficProfile,
    brute_force_oracle,
    solve_instance,
    validate_solution,
)
from .optimizer.instance import default_locations
from .topology import Topology, build_paper_topology, build_ring_topology
from .workload import WorkloadCounts, WorkloadSet, apply_traffic_scale, generate

TRAFFIC_SCENARIOS = {"s1": 1.0, "s2": 2.0}
PAPER_ACCESS_CAPACITIES = (10.0, 40.0)


@dataclass(frozen=True)
class ScenarioConfig:
    mode: PlacementMode = PlacementMode.TRADITIONAL
    traffic_scenario: str = "s1"
    access_link_gbps: float = 10.0
    seed: int = 0
    onus_per_co: int = 4
    co_servers: int = 6
    bo_servers: int = 6
    cs_servers: int = 4
    weights: ObjectiveWeights = ObjectiveWeights()
    regular_traffic: RegularTrafficProfile = RegularTrafficProfile()
    traffic_split: tuple[float, float] = (0.5, 0.5)
    time_limit_s: float = 600.0

    def __post_init__(self):
        if self.traffic_scenario not in TRAFFIC_SCENARIOS:
            raise InvalidParameterError(
                f"unknown traffic scenario {self.traffic_scenario!r}; "
                f"expected one of {sorted(TRAFFIC_SCENARIOS)}"
            )

    @property
    def traffic_scale(self) -> float:
        return TRAFFIC_SCENARIOS[self.traffic_scenario]

    def cell_key(self) -> tuple:
        return (self.mode.value, self.traffic_scenario, self.access_link_gbps, self.seed)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode.value,
            "traffic_scenario": self.traffic_scenario,
            "access_link_gbps": self.access_link_gbps,
            "seed": self.seed,
            "onus_per_co": self.onus_per_co,
            "co_servers": self.co_servers,
            "bo_servers": self.bo_servers,
            "cs_servers": self.cs_servers,
            "weights": {
                "blocked_cost": self.weights.blocked_cost,
                "component_cost": self.weights.component_cost,
                "server_cost": self.weights.server_cost,
            },
            "regular_traffic": self.regular_traffic.to_dict(),
            "traffic_split": list(self.traffic_split),
            "time_limit_s": self.time_limit_s,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ScenarioConfig":
        return cls(
            mode=PlacementMode(data["mode"]),
            traffic_scenario=data["traffic_scenario"],
            access_link_gbps=data["access_link_gbps"],
            seed=data["seed"],
            onus_per_co=data["onus_per_co"],
            co_servers=data["co_servers"],
            bo_servers=data["bo_servers"],
            cs_servers=data["cs_servers"],
            weights=ObjectiveWeights(**data["weights"]),
            regular_traffic=RegularTrafficProfile.from_dict(data["regular_traffic"]),
            traffic_split=tuple(data["traffic_split"]),
            time_limit_s=data["time_limit_s"],
        )


def build_instance(config: ScenarioConfig) -> ProblemInstance:
    topology = build_paper_topology(config.access_link_gbps, config.onus_per_co)
    workloads = generate(topology, config.seed)
    workloads = apply_traffic_scale(workloads, config.traffic_scale)
    return ProblemInstance(
        topology=topology,
        workloads=workloads,
        locations=default_locations(
            topology, config.co_servers, config.bo_servers, config.cs_servers
        ),
        mode=config.mode,
        weights=config.weights,
        regular_traffic=config.regular_traffic.resolve(topology),
        traffic_split=config.traffic_split,
    )


@dataclass
class RunResult:
    config: ScenarioConfig
    solution: PlacementSolution
    report: MetricsReport

    def record(self) -> dict:
        row = {
            "mode": self.config.mode.value,
            "scenario": self.config.traffic_scenario,
            "access_link_gbps": self.config.access_link_gbps,
            "seed": self.config.seed,
            "optimal": int(self.solution.optimal),
            "objective": self.solution.breakdown.weighted_total,
            "nc": self.solution.breakdown.nc,
            "ns": self.solution.breakdown.ns,
        }
        metrics = self.report.to_record()
        metrics.pop("mode", None)
        row.update(metrics)
        return row


def run_cell(config: ScenarioConfig) -> RunResult:
    instance = build_instance(config)
    solution = solve_instance(instance, time_limit_s=config.time_limit_s)
    validate_solution(instance, solution)
    report = compute_metrics(solution, instance)
    return RunResult(config=config, solution=solution, report=report)


def expand_grid(
    modes: Iterable[PlacementMode],
    scenarios: Iterable[str],
    capacities: Iterable[float],
    seeds: Iterable[int],
    base: ScenarioConfig = ScenarioConfig(),
) -> list[ScenarioConfig]:
    configs = [
        replace(base, mode=mode, traffic_scenario=scenario, access_link_gbps=cap, seed=seed)
        for mode in modes
        for scenario in scenarios
        for cap in capacities
        for seed in seeds
    ]
    return sorted(configs, key=lambda c: c.cell_key())


@dataclass
class GridResult:
    results: list[RunResult]
    rows: list[dict] = field(default_factory=list)
    summary_rows: list[dict] = field(default_factory=list)

    @property
    def all_optimal(self) -> bool:
        return all(r.solution.optimal for r in self.results)

    def by_cell(self) -> dict[tuple, RunResult]:
        return {r.config.cell_key(): r for r in self.results}


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _write_csv(path: Path, columns: list[str], rows: list[dict]) -> None:
    with path.open("w", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_format_cell(row.get(col)) for col in columns])


_CELL_COLUMNS = ["mode", "scenario", "access_link_gbps"]


def _summarize(rows: list[dict]) -> list[dict]:
    numeric = [
        col
        for col in rows[0]
        if col not in _CELL_COLUMNS + ["seed"] and isinstance(rows[0][col], (int, float))
    ]
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        cells.setdefault(tuple(row[c] for c in _CELL_COLUMNS), []).append(row)
    summary = []
    for cell_key in sorted(cells, key=str):
        members = cells[cell_key]
        entry = dict(zip(_CELL_COLUMNS, cell_key))
        entry["n_seeds"] = len(members)
        for col in numeric:
            values = [m[col] for m in members if m[col] is not None]
            entry[f"{col}_mean"] = mean(values) if values else None
            entry[f"{col}_std"] = stdev(values) if len(values) > 1 else 0.0 if values else None
        summary.append(entry)
    return summary


_PLOT_FILES = {
    "fig_blocked.csv": ["blocked_count"],
    "fig_resources.csv": [
        "active_servers",
        "idle_servers",
        "active_components",
        "idle_components",
    ],
    "fig_power.csv": [
        "tnpc_w",
        "power_metro_core_w",
        "power_metro_access_w",
        "power_last_mile_w",
    ],
    "fig_traffic.csv": [
        "traffic_bg_metro_core_gbps",
        "traffic_bg_metro_access_gbps",
        "traffic_bg_last_mile_gbps",
        "traffic_metro_core_gbps",
        "traffic_metro_access_gbps",
        "traffic_last_mile_gbps",
    ],
    "table_hops.csv": ["avg_hop_count"],
}


def run_grid(
    configs: list[ScenarioConfig],
    out_dir: str | Path | None = None,
    parallel: int = 1,
    dump_instances: bool = False,
) -> GridResult:
    """Run every config; write per-run and aggregate files when out_dir is set."""
    ordered = sorted(configs, key=lambda c: c.cell_key())
    if parallel > 1:
        with Pool(processes=parallel) as pool:
            results = pool.map(run_cell, ordered)
    else:
        results = [run_cell(config) for config in ordered]

    grid = GridResult(results=results)
    grid.rows = [r.record() for r in results]
    grid.summary_rows = _summarize(grid.rows) if grid.rows else []

    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        columns = list(grid.rows[0].keys()) if grid.rows else []
        _write_csv(out / "runs.csv", columns, grid.rows)
        if grid.summary_rows:
            _write_csv(out / "summary.csv", list(grid.summary_rows[0].keys()), grid.summary_rows)
        for name, metric_cols in _PLOT_FILES.items():
            cols = _CELL_COLUMNS + ["n_seeds"]
            for metric in metric_cols:
                cols += [f"{metric}_mean", f"{metric}_std"]
            _write_csv(out / name, cols, grid.summary_rows)
        manifest = {
            "package": "fogplace",
            "version": __version__,
            "configs": [c.to_dict() for c in ordered],
            "all_optimal": grid.all_optimal,
        }
        (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
        solutions_dir = out / "solutions"
        solutions_dir.mkdir(exist_ok=True)
        for result in results:
            name = "_".join(str(part) for part in result.config.cell_key())
            result.solution.save(solutions_dir / f"{name}.json")
        if dump_instances:
            for config in ordered:
                name = "_".join(str(part) for part in config.cell_key())
                dump_instance(config, out / "instances" / name)
    return grid


# -- instance dump / replay -------------------------------------------------


def dump_instance(config: ScenarioConfig, out_dir: str | Path) -> Path:
    """Write the fully materialized instance of a scenario to text files."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    instance = build_instance(config)
    instance.topology.save(out / "topology.json")
    instance.workloads.save(out / "workloads.json")
    (out / "regular_traffic.json").write_text(
        json.dumps(dict(instance.regular_traffic), indent=2, sort_keys=True) + "\n"
    )
    (out / "config.json").write_text(
        json.dumps(config.to_dict(), indent=2, sort_keys=True) + "\n"
    )
    return out


def load_instance(in_dir: str | Path) -> tuple[ScenarioConfig, ProblemInstance]:
    """Rebuild a dumped instance bit-identically from its files."""
    path = Path(in_dir)
    config = ScenarioConfig.from_dict(json.loads((path / "config.json").read_text()))
    topology = Topology.load(path / "topology.json")
    workloads = WorkloadSet.load(path / "workloads.json")
    regular = json.loads((path / "regular_traffic.json").read_text())
    instance = ProblemInstance(
        topology=topology,
        workloads=workloads,
        locations=default_locations(
            topology, config.co_servers, config.bo_servers, config.cs_servers
        ),
        mode=config.mode,
        weights=config.weights,
        regular_traffic=regular,
        traffic_split=config.traffic_split,
    )
    return config, instance


# -- oracle self-check -------------------------------------------------------


def random_tiny_instance(rng: np.random.Generator, mode: PlacementMode) -> ProblemInstance:
    """A random oracle-scale instance: one CO region, <=3 locations, <=4 real-time."""
    onus = int(rng.integers(1, 4))
    access = float(rng.choice([1.5, 2.0, 3.0, 6.0]))
    topology = build_ring_topology(
        n_cos=1, onus_per_co=onus, access_link_gbps=access, pon_link_gbps=10.0
    )
    counts = WorkloadCounts(
        co_local=int(rng.integers(0, 3)),
        bo_local=int(rng.integers(0, 3)),
        cs_local=int(rng.integers(0, 2)),
        cs_realtime=int(rng.integers(0, 2)),
        onu_realtime=1,
    )
    workloads = generate(topology, seed=int(rng.integers(0, 2**31)), counts=counts)
    if rng.uniform() < 0.4:
        workloads = apply_traffic_scale(workloads, 2.0)
    profile = RegularTrafficProfile(
        metro_access_fraction=float(rng.uniform(0.0, 0.6)),
        last_mile_fraction=float(rng.uniform(0.0, 0.6)),
        metro_core_fraction=0.1,
    )
    split = [(0.5, 0.5), (1.0, 0.5), (0.3, 0.7)][int(rng.integers(0, 3))]
    locations = {
        node.id: ComputeLocation(node.id, 2, ServerConfig())
        for node in topology.compute_nodes()
    }
    return ProblemInstance(
        topology=topology,
        workloads=workloads,
        locations=locations,
        mode=mode,
        regular_traffic=profile.resolve(topology),
        traffic_split=split,
    )


@dataclass
class OracleCheckResult:
    checked: int
    mismatches: list[str]
    elapsed_s: float

    @property
    def ok(self) -> bool:
        return not self.mismatches


def run_oracle_check(count: int = 50, base_seed: int = 0,
                     time_limit_s: float = 60.0) -> OracleCheckResult:
    """Cross-check the MILP solve against the brute-force oracle on tiny instances."""
    started = time.perf_counter()
    mismatches = []
    for index in range(count):
        rng = np.random.default_rng([base_seed, index])
        mode = PlacementMode.TRADITIONAL if index % 2 == 0 else PlacementMode.DISAGGREGATED
        instance = random_tiny_instance(rng, mode)
        solved = solve_instance(instance, time_limit_s=time_limit_s)
        validate_solution(instance, solved)
        reference = brute_force_oracle(instance)
        validate_solution(instance, reference)
        if solved.breakdown.weighted_total != reference.breakdown.weighted_total:
            mismatches.append(
                f"instance {index} ({mode.value}): solve objective "
                f"{solved.breakdown.weighted_total!r} != oracle "
                f"{reference.breakdown.weighted_total!r}"
            )
    return OracleCheckResult(
        checked=count, mismatches=mismatches, elapsed_s=time.perf_counter() - started
    )
