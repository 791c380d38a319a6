"""Solver-agnostic MILP formulation of the placement problem.

Variables (binary unless noted):

* ``b[f]``            real-time workload f is blocked
* TS: ``x[w,s]``      workload w occupies chassis s (node-local w: chassis of
                      its home location only); the host indicator y[w,l] is
                      the sum of x over the location's chassis
* DS: ``y[w,l]``      workload w hosted at location l (node-local w: fixed 1
                      at its home)
* ``p[f,l,k]``        placed workload f at l routes its source commodity on
                      candidate path k (a zero-hop placement has one empty
                      candidate path)
* ``q[f,l,k]``        same for the host-to-DC commodity
* TS: ``v[l,i]``      chassis i at location l active
* DS: ``u[l,r]``      active components of resource type r at location l
                      (integer 0..server_count; components of one type are
                      interchangeable, so a count encodes them exactly)
* DS: ``m[l]``        active chassis at location l (integer, >= every u[l,r])
* ``t[e] >= 0``       total modelled flow on link e (continuous)

Constraints: single host or blocked per real-time workload; node-local
workloads pinned to their home; per-chassis packing (TS) or per-location
resource pooling with chassis coupling (DS); one path per commodity of a
placed workload; flow totals per link; link capacity net of the background
load (as bounds on t).

Solver-hardening extras (all exact):

* TS symmetry orders: chassis within a location are interchangeable, so
  activation and occupancy are forced non-increasing in the chassis index.
* TS conflict cliques: workloads demanding more than half a resource can
  never share a chassis, giving one strong clique row per chassis/resource.
* Pinned lower bounds: the node-local population alone forces a provable
  minimum of chassis (TS, exact packing) or components (DS, capacity
  ceiling) per location; those variables are fixed up front.

Objective: weighted sum of blocked count, active components, active chassis
and load-proportional power, plus a constant for static device power (and
background-load power when it is included).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np

from ..capacity import (
    RESOURCE_TYPES,
    PlacementMode,
    ResourceType,
    exact_min_server_packing,
)
from ..errors import NodeLocalCapacityError
from ..power import evaluate_power, link_power_coefficient
from ..topology import LinkSegment, NodeKind
from .instance import ProblemInstance


@dataclass
class Row:
    name: str
    coeffs: list[tuple[int, float]]
    lb: float
    ub: float


@dataclass
class FormulationGroups:
    """Variable-index maps used for staging, decoding and export."""

    blocked: dict[str, int] = field(default_factory=dict)
    x: dict[tuple[str, str, int], int] = field(default_factory=dict)  # TS (wid, loc, chassis)
    y: dict[tuple[str, str], int] = field(default_factory=dict)  # DS (wid, loc)
    p: dict[tuple[str, str, int], int] = field(default_factory=dict)
    q: dict[tuple[str, str, int], int] = field(default_factory=dict)
    component_count: dict[tuple[str, ResourceType], int] = field(default_factory=dict)  # DS
    server_count: dict[str, int] = field(default_factory=dict)  # DS
    v: dict[tuple[str, int], int] = field(default_factory=dict)  # TS
    t: dict[str, int] = field(default_factory=dict)
    source_path_links: dict[tuple[str, str], tuple[tuple[str, ...], ...]] = field(
        default_factory=dict
    )
    dc_path_links: dict[str, tuple[tuple[str, ...], ...]] = field(default_factory=dict)

    def nc_expression(self, mode: PlacementMode) -> list[tuple[int, float]]:
        if mode == PlacementMode.TRADITIONAL:
            return [(idx, 3.0) for idx in self.v.values()]
        return [(idx, 1.0) for idx in self.component_count.values()]

    def ns_expression(self, mode: PlacementMode) -> list[tuple[int, float]]:
        if mode == PlacementMode.TRADITIONAL:
            return [(idx, 1.0) for idx in self.v.values()]
        return [(idx, 1.0) for idx in self.server_count.values()]


@dataclass
class MilpProblem:
    instance: ProblemInstance
    names: list[str]
    is_integer: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    rows: list[Row]
    objective: np.ndarray
    objective_constant: float
    groups: FormulationGroups
    max_nc: int
    max_ns: int

    @property
    def n_vars(self) -> int:
        return len(self.names)

    def to_lp_text(self) -> str:
        """CPLEX LP-format export for cross-checking with external solvers."""

        def term(coef: float, name: str, first: bool) -> str:
            sign = "-" if coef < 0 else ("" if first else "+")
            return f" {sign} {abs(coef):.17g} {name}".rstrip() if sign else f" {abs(coef):.17g} {name}"

        def expr(coeffs) -> str:
            parts = []
            for i, (idx, coef) in enumerate(coeffs):
                parts.append(term(coef, self.names[idx], first=(i == 0)))
            return "".join(parts) if parts else " 0 " + self.names[0]

        lines = [
            f"\\ fogplace placement MILP (mode={self.instance.mode.value})",
            f"\\ objective constant (add to optimum): {self.objective_constant!r}",
            "Minimize",
            " obj:" + expr([(i, c) for i, c in enumerate(self.objective.tolist()) if c != 0.0]),
            "Subject To",
        ]
        for row in self.rows:
            if row.lb == row.ub:
                lines.append(f" {row.name}:{expr(row.coeffs)} = {row.lb!r}")
            elif row.lb == -math.inf:
                lines.append(f" {row.name}:{expr(row.coeffs)} <= {row.ub!r}")
            elif row.ub == math.inf:
                lines.append(f" {row.name}:{expr(row.coeffs)} >= {row.lb!r}")
            else:
                lines.append(f" {row.name}:{expr(row.coeffs)} <= {row.ub!r}")
                lines.append(f" {row.name}_lo:{expr(row.coeffs)} >= {row.lb!r}")
        lines.append("Bounds")
        for i, name in enumerate(self.names):
            lines.append(f" {self.lb[i]!r} <= {name} <= {self.ub[i]!r}")
        lines.append("Generals")
        for i, name in enumerate(self.names):
            if self.is_integer[i]:
                lines.append(f" {name}")
        lines.append("End")
        return "\n".join(lines) + "\n"

    def save_lp(self, path: str | Path) -> None:
        Path(path).write_text(self.to_lp_text())


def _lp_name(raw: str) -> str:
    return raw.replace("-", "_").replace(":", "_")


def _precheck_node_local(instance: ProblemInstance) -> None:
    """Reject instances whose pinned workloads clearly cannot fit their home."""
    demands = instance.demands()
    per_location: dict[str, list[str]] = {loc: [] for loc in instance.locations}
    for w in instance.node_local_workloads():
        per_location[w.home_location].append(w.id)
        if instance.mode == PlacementMode.TRADITIONAL:
            cap = instance.locations[w.home_location].server_config.capacity_vector()
            if not demands[w.id].fits_within(cap):
                raise NodeLocalCapacityError(
                    f"node-local workload {w.id} exceeds a single server at "
                    f"{w.home_location}"
                )
    for loc_id, wids in per_location.items():
        location = instance.locations[loc_id]
        total = demand_of_sum(demands, wids)
        if not total.fits_within(location.pool_vector()):
            raise NodeLocalCapacityError(
                f"node-local workloads at {loc_id} exceed its pooled capacity"
            )


def demand_of_sum(demands, wids):
    from ..capacity import ResourceVector

    total = ResourceVector.zero()
    for wid in wids:
        total = total.add(demands[wid])
    return total


def routing_never_binds(instance: ProblemInstance) -> bool:
    """True when no ring/gateway link can bind under any path selection.

    Candidate paths between fixed endpoints differ only on ring links (and
    the gateway uplink), so when even the sum of every commodity's rate fits
    each of those links, path choice cannot affect feasibility and the count
    stage may drop the routing variables entirely.
    """
    rt = instance.real_time_workloads()
    worst_case = math.fsum(
        instance.rate_to_source(w) + instance.rate_to_dc(w) for w in rt
    )
    for link in instance.topology.links.values():
        if link.segment in (LinkSegment.METRO_CORE, LinkSegment.GATEWAY_UPLINK):
            if worst_case > instance.link_room(link.id) + 1e-9:
                return False
    return True


def build_milp(instance: ProblemInstance) -> MilpProblem:
    """Full placement MILP, routing included."""
    return _build(instance, include_routing=True)


def build_count_milp(instance: ProblemInstance) -> MilpProblem:
    """Assignment-only MILP for the count stage (requires routing_never_binds).

    Pendant links (PON tails, BO/CS uplinks) are crossed by every candidate
    path of the commodities that touch them, so their loads are exact linear
    functions of the assignment; ring and gateway links are slack by
    precondition. The model therefore needs no path or flow variables.
    """
    return _build(instance, include_routing=False)


def _build(instance: ProblemInstance, include_routing: bool) -> MilpProblem:
    _precheck_node_local(instance)

    topo = instance.topology
    mode = instance.mode
    weights = instance.weights
    demands = instance.demands()
    locations = instance.locations
    loc_order = instance.location_order()
    rt = instance.real_time_workloads()
    nl = instance.node_local_workloads()

    names: list[str] = []
    is_integer: list[int] = []
    lbs: list[float] = []
    ubs: list[float] = []
    groups = FormulationGroups()

    def add_var(name: str, integer: bool, lb: float, ub: float) -> int:
        names.append(_lp_name(name))
        is_integer.append(1 if integer else 0)
        lbs.append(lb)
        ubs.append(ub)
        return len(names) - 1

    for w in rt:
        groups.blocked[w.id] = add_var(f"b_{w.id}", True, 0.0, 1.0)

    if mode == PlacementMode.TRADITIONAL:
        for w in nl + rt:
            candidate_locs = [w.home_location] if w.home_location else loc_order
            for loc_id in candidate_locs:
                for i in range(locations[loc_id].server_count):
                    groups.x[(w.id, loc_id, i)] = add_var(f"x_{w.id}_{loc_id}_{i}", True, 0.0, 1.0)
    else:
        for w in nl:
            groups.y[(w.id, w.home_location)] = add_var(
                f"y_{w.id}_{w.home_location}", True, 1.0, 1.0  # pinned
            )
        for w in rt:
            for loc_id in loc_order:
                groups.y[(w.id, loc_id)] = add_var(f"y_{w.id}_{loc_id}", True, 0.0, 1.0)

    if include_routing:
        for w in rt:
            for loc_id in loc_order:
                paths = instance.source_paths(w, loc_id)
                groups.source_path_links[(w.id, loc_id)] = tuple(path.links for path in paths)
                for k in range(len(paths)):
                    groups.p[(w.id, loc_id, k)] = add_var(f"p_{w.id}_{loc_id}_{k}", True, 0.0, 1.0)
        for loc_id in loc_order:
            groups.dc_path_links[loc_id] = tuple(path.links for path in instance.dc_paths(loc_id))
        for w in rt:
            for loc_id in loc_order:
                for k in range(len(groups.dc_path_links[loc_id])):
                    groups.q[(w.id, loc_id, k)] = add_var(f"q_{w.id}_{loc_id}_{k}", True, 0.0, 1.0)

    # Lower bounds forced by the pinned node-local population alone.
    nl_by_location: dict[str, list[str]] = {loc_id: [] for loc_id in loc_order}
    for w in nl:
        nl_by_location[w.home_location].append(w.id)

    def nl_component_floor(loc_id: str, r: ResourceType) -> int:
        cap_r = locations[loc_id].server_config.capacity(r)
        total = math.fsum(demands[wid].get(r) for wid in nl_by_location[loc_id])
        return 0 if total <= 0.0 else int(math.ceil(total / cap_r - 1e-12))

    if mode == PlacementMode.DISAGGREGATED:
        for loc_id in loc_order:
            count = locations[loc_id].server_count
            floors = {r: nl_component_floor(loc_id, r) for r in RESOURCE_TYPES}
            for r in RESOURCE_TYPES:
                groups.component_count[(loc_id, r)] = add_var(
                    f"u_{loc_id}_{r.value}", True, float(floors[r]), float(count)
                )
            groups.server_count[loc_id] = add_var(
                f"m_{loc_id}", True, float(max(floors.values())), float(count)
            )
    else:
        for loc_id in loc_order:
            nl_packing = exact_min_server_packing(
                nl_by_location[loc_id], demands, locations[loc_id]
            )
            if nl_packing is None:
                raise NodeLocalCapacityError(
                    f"node-local workloads cannot be packed onto the servers of {loc_id}"
                )
            chassis_floor = len(set(nl_packing.values()))
            for i in range(locations[loc_id].server_count):
                groups.v[(loc_id, i)] = add_var(
                    f"v_{loc_id}_{i}", True, 1.0 if i < chassis_floor else 0.0, 1.0
                )

    if include_routing:
        for link in topo.links.values():
            room = instance.link_room(link.id)
            groups.t[link.id] = add_var(f"t_{link.id}", False, 0.0, room)

    rows: list[Row] = []

    def host_indicator(wid: str, loc_id: str) -> list[tuple[int, float]]:
        if mode == PlacementMode.TRADITIONAL:
            count = locations[loc_id].server_count
            return [(groups.x[(wid, loc_id, i)], 1.0) for i in range(count)
                    if (wid, loc_id, i) in groups.x]
        idx = groups.y.get((wid, loc_id))
        return [(idx, 1.0)] if idx is not None else []

    # (a) assignment: exactly one host or blocked (real-time); pinned home (node-local)
    for w in rt:
        coeffs = [(groups.blocked[w.id], 1.0)]
        for loc_id in loc_order:
            coeffs.extend(host_indicator(w.id, loc_id))
        rows.append(Row(f"assign_{w.id}", coeffs, 1.0, 1.0))
    if mode == PlacementMode.TRADITIONAL:
        for w in nl:
            coeffs = host_indicator(w.id, w.home_location)
            rows.append(Row(f"assign_{w.id}", coeffs, 1.0, 1.0))
    # DS node-local pinning is by variable bounds.

    # (b)/(c) capacity
    if mode == PlacementMode.TRADITIONAL:
        for loc_id in loc_order:
            location = locations[loc_id]
            cap = location.server_config.capacity_vector()
            for i in range(location.server_count):
                members = [
                    (w, groups.x[(w.id, loc_id, i)])
                    for w in nl + rt
                    if (w.id, loc_id, i) in groups.x
                ]
                for r in RESOURCE_TYPES:
                    coeffs = [(idx, demands[w.id].get(r)) for w, idx in members]
                    coeffs.append((groups.v[(loc_id, i)], -cap.get(r)))
                    rows.append(
                        Row(f"pack_{loc_id}_{i}_{r.value}", coeffs, -math.inf, 0.0)
                    )
                # conflict cliques: two workloads each demanding more than half
                # a resource can never share the chassis
                for r in RESOURCE_TYPES:
                    clique = [
                        idx for w, idx in members if demands[w.id].get(r) > cap.get(r) / 2.0
                    ]
                    if len(clique) > 1:
                        coeffs = [(idx, 1.0) for idx in clique]
                        coeffs.append((groups.v[(loc_id, i)], -1.0))
                        rows.append(
                            Row(f"clique_{loc_id}_{i}_{r.value}", coeffs, -math.inf, 0.0)
                        )
    else:
        for loc_id in loc_order:
            location = locations[loc_id]
            cap = location.server_config.capacity_vector()
            for r in RESOURCE_TYPES:
                coeffs = [
                    (groups.y[(w.id, loc_id)], demands[w.id].get(r))
                    for w in nl + rt
                    if (w.id, loc_id) in groups.y
                ]
                coeffs.append((groups.component_count[(loc_id, r)], -cap.get(r)))
                rows.append(Row(f"pool_{loc_id}_{r.value}", coeffs, -math.inf, 0.0))
                rows.append(
                    Row(
                        f"chassis_{loc_id}_{r.value}",
                        [
                            (groups.component_count[(loc_id, r)], 1.0),
                            (groups.server_count[loc_id], -1.0),
                        ],
                        -math.inf,
                        0.0,
                    )
                )

    # TS chassis symmetry: activation and occupancy non-increasing in index
    if mode == PlacementMode.TRADITIONAL:
        for loc_id in loc_order:
            location = locations[loc_id]
            for i in range(location.server_count - 1):
                rows.append(
                    Row(
                        f"vsym_{loc_id}_{i}",
                        [(groups.v[(loc_id, i + 1)], 1.0), (groups.v[(loc_id, i)], -1.0)],
                        -math.inf,
                        0.0,
                    )
                )
                coeffs = []
                for w in nl + rt:
                    if (w.id, loc_id, i + 1) in groups.x:
                        coeffs.append((groups.x[(w.id, loc_id, i + 1)], 1.0))
                        coeffs.append((groups.x[(w.id, loc_id, i)], -1.0))
                rows.append(Row(f"occsym_{loc_id}_{i}", coeffs, -math.inf, 0.0))

    if include_routing:
        # (d) one chosen path per commodity of a placed workload
        for w in rt:
            for loc_id in loc_order:
                host = host_indicator(w.id, loc_id)
                n_src = len(groups.source_path_links[(w.id, loc_id)])
                coeffs = [(groups.p[(w.id, loc_id, k)], 1.0) for k in range(n_src)]
                coeffs.extend((idx, -c) for idx, c in host)
                rows.append(Row(f"srcpath_{w.id}_{loc_id}", coeffs, 0.0, 0.0))
                n_dc = len(groups.dc_path_links[loc_id])
                coeffs = [(groups.q[(w.id, loc_id, k)], 1.0) for k in range(n_dc)]
                coeffs.extend((idx, -c) for idx, c in host)
                rows.append(Row(f"dcpath_{w.id}_{loc_id}", coeffs, 0.0, 0.0))

        # (e) per-link flow totals
        link_terms: dict[str, list[tuple[int, float]]] = {link_id: [] for link_id in topo.links}
        rt_by_id = {w.id: w for w in rt}
        for (wid, loc_id, k), idx in groups.p.items():
            rate = instance.rate_to_source(rt_by_id[wid])
            for link_id in groups.source_path_links[(wid, loc_id)][k]:
                link_terms[link_id].append((idx, -rate))
        for (wid, loc_id, k), idx in groups.q.items():
            rate = instance.rate_to_dc(rt_by_id[wid])
            for link_id in groups.dc_path_links[loc_id][k]:
                link_terms[link_id].append((idx, -rate))
        for link_id in topo.links:
            coeffs = [(groups.t[link_id], 1.0)] + link_terms[link_id]
            rows.append(Row(f"flow_{link_id}", coeffs, 0.0, 0.0))
        # (f) capacity net of background is the upper bound on each t variable.
    else:
        # Exact pendant-link capacity rows in assignment variables. Every
        # candidate path of a commodity crosses the same pendant links, so
        # path choice cannot change these loads.
        for node in topo.nodes.values():
            if node.kind not in (NodeKind.PON_ONU, NodeKind.RADIO_CS, NodeKind.ENTERPRISE_BO):
                continue
            link = topo.attachment_link(node.id)
            room = instance.link_room(link.id)
            coeffs: list[tuple[int, float]] = []
            constant = 0.0
            for w in rt:
                rate_src = instance.rate_to_source(w)
                rate_dc = instance.rate_to_dc(w)
                if w.source_node == node.id:
                    # source commodity crosses the tail unless hosted at the
                    # source itself; a self-hosted workload still sends its
                    # DC commodity through the tail
                    constant += rate_src
                    blocked_idx = groups.blocked[w.id]
                    coeffs.append((blocked_idx, -rate_src))
                    if node.id in locations:
                        for idx, c in host_indicator(w.id, node.id):
                            coeffs.append((idx, (rate_dc - rate_src) * c))
                elif node.id in locations:
                    for idx, c in host_indicator(w.id, node.id):
                        coeffs.append((idx, (rate_src + rate_dc) * c))
            if coeffs or constant > 0:
                rows.append(Row(f"tail_{link.id}", coeffs, -math.inf, room - constant))

    # (g) weighted objective
    objective = np.zeros(len(names))
    for idx in groups.blocked.values():
        objective[idx] = weights.blocked_cost
    for idx, coef in groups.nc_expression(mode):
        objective[idx] += weights.component_cost * coef
    for idx, coef in groups.ns_expression(mode):
        objective[idx] += weights.server_cost * coef
    for link_id, idx in groups.t.items():
        objective[idx] = link_power_coefficient(topo, link_id)

    static_power = evaluate_power(topo, {}).static_total
    constant = static_power
    if instance.include_regular_in_power:
        constant += math.fsum(
            link_power_coefficient(topo, link_id) * reg
            for link_id, reg in instance.regular_traffic.items()
            if reg > 0
        )

    max_ns = instance.max_ns()
    return MilpProblem(
        instance=instance,
        names=names,
        is_integer=np.array(is_integer),
        lb=np.array(lbs),
        ub=np.array(ubs),
        rows=rows,
        objective=objective,
        objective_constant=constant,
        groups=groups,
        max_nc=3 * max_ns,
        max_ns=max_ns,
    )
