"""Metro/access network model.

The network is a ring of metro central offices (COs). Each CO fronts one
enterprise branch office (BO), one radio cell site (CS) and a small PON tree
of optical network units (ONUs). One CO is the gateway and carries an
effectively unbounded uplink towards a remote hyperscale datacentre (DC).

Device wiring determines every load-proportional power term, so the charging
rules are fixed here and documented for reproducibility:

* last-mile link (CO-ONU): charges the ONU (static) and the CO's OLT (per Gb/s)
* BO access link (CO-BO): charges the BO's CPE (static) and the CO's metro
  Ethernet access router (per Gb/s)
* CS access link (CO-CS): charges the CO's access router (per Gb/s)
* ring link (CO-CO): charges the aggregation routers of both endpoint COs
  (per Gb/s each)
* gateway uplink (CO-DC): charges nothing (the core network is out of scope)

Topologies are immutable after construction; the path cache is filled on
first use and is safe for concurrent readers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .errors import InvalidParameterError, NoPathError

# Default device wattages (metro Ethernet and PON equipment classes).
CPE_WATTS = 75.0
ONU_WATTS = 15.0
AGGREGATION_ROUTER_WATTS_PER_GBPS = 0.9
ACCESS_ROUTER_WATTS_PER_GBPS = 0.243
OLT_WATTS_PER_GBPS = 1.75

# Stand-in for "unbounded" capacity on the DC uplink; finite so exports stay
# strict JSON and LP bounds stay well formed.
UNBOUNDED_GBPS = 1e9

DEFAULT_CORE_LINK_GBPS = 200.0
DEFAULT_PON_LINK_GBPS = 10.0


class NodeKind(Enum):
    METRO_CO = "metro_co"
    ENTERPRISE_BO = "enterprise_bo"
    RADIO_CS = "radio_cs"
    PON_ONU = "pon_onu"
    HYPERSCALE_DC = "hyperscale_dc"


#: Node kinds that may carry compute capacity.
COMPUTE_NODE_KINDS = frozenset(
    {NodeKind.METRO_CO, NodeKind.ENTERPRISE_BO, NodeKind.RADIO_CS}
)


class DeviceKind(Enum):
    CPE = "cpe"
    AGGREGATION_ROUTER = "aggregation_router"
    ACCESS_ROUTER = "access_router"
    OLT = "olt"
    ONU = "onu"


class LinkSegment(Enum):
    METRO_CORE = "metro_core"
    METRO_ACCESS = "metro_access"
    LAST_MILE = "last_mile"
    GATEWAY_UPLINK = "gateway_uplink"


@dataclass(frozen=True)
class StaticPower:
    """Always-on power draw in watts."""

    watts: float

    def __post_init__(self):
        if self.watts <= 0:
            raise InvalidParameterError(f"static wattage must be > 0, got {self.watts}")


@dataclass(frozen=True)
class LoadProportionalPower:
    """Power draw proportional to the traffic crossing the device."""

    watts_per_gbps: float

    def __post_init__(self):
        if self.watts_per_gbps <= 0:
            raise InvalidParameterError(
                f"load-proportional coefficient must be > 0, got {self.watts_per_gbps}"
            )


PowerProfile = StaticPower | LoadProportionalPower


@dataclass(frozen=True)
class Node:
    id: str
    kind: NodeKind
    co_index: int  # index of the owning CO (a CO owns itself; the DC belongs to the gateway CO)


@dataclass(frozen=True)
class NetworkDevice:
    id: str
    kind: DeviceKind
    power: PowerProfile
    node: str  # node the device is attached to


@dataclass(frozen=True)
class Link:
    id: str
    endpoints: tuple[str, str]
    capacity_gbps: float
    segment: LinkSegment
    traversed_devices: tuple[str, ...]  # device ids associated with this link

    def __post_init__(self):
        if self.capacity_gbps <= 0:
            raise InvalidParameterError(f"link {self.id}: capacity must be > 0")
        if self.endpoints[0] == self.endpoints[1]:
            raise InvalidParameterError(f"link {self.id}: endpoints must be distinct")

    def other_end(self, node_id: str) -> str:
        a, b = self.endpoints
        if node_id == a:
            return b
        if node_id == b:
            return a
        raise InvalidParameterError(f"{node_id} is not an endpoint of link {self.id}")


@dataclass(frozen=True)
class NetworkPath:
    """A simple path stored as node sequence plus the links between them.

    A zero-hop path (workload hosted at its own source) is represented by a
    single-node sequence with no links.
    """

    nodes: tuple[str, ...]
    links: tuple[str, ...]

    @property
    def hop_count(self) -> int:
        return len(self.links)


@dataclass
class Topology:
    nodes: dict[str, Node]
    links: dict[str, Link]
    devices: dict[str, NetworkDevice]
    gateway_co: str
    co_ring: tuple[str, ...]  # CO ids in ring order; "clockwise" walks increasing index
    _pair_links: dict[frozenset, str] = field(default_factory=dict, repr=False)
    _path_cache: dict[tuple[str, str], tuple[NetworkPath, ...]] = field(
        default_factory=dict, repr=False
    )

    def __post_init__(self):
        if not self._pair_links:
            for link in self.links.values():
                self._pair_links[frozenset(link.endpoints)] = link.id

    # -- structure queries -------------------------------------------------

    def nodes_of_kind(self, kind: NodeKind) -> list[Node]:
        return [n for n in self.nodes.values() if n.kind == kind]

    @property
    def dc_node(self) -> str:
        (dc,) = [n.id for n in self.nodes.values() if n.kind == NodeKind.HYPERSCALE_DC]
        return dc

    def compute_nodes(self) -> list[Node]:
        """CO, BO and CS nodes, in construction order."""
        return [n for n in self.nodes.values() if n.kind in COMPUTE_NODE_KINDS]

    def link_between(self, a: str, b: str) -> Link:
        key = frozenset((a, b))
        link_id = self._pair_links.get(key)
        if link_id is None:
            raise NoPathError(f"no link between {a} and {b}")
        return self.links[link_id]

    def links_of_segment(self, segment: LinkSegment) -> list[Link]:
        return [e for e in self.links.values() if e.segment == segment]

    def attachment_link(self, node_id: str) -> Link:
        """The single link tying a non-CO node to its CO."""
        node = self.nodes[node_id]
        if node.kind == NodeKind.METRO_CO:
            raise InvalidParameterError(f"{node_id} is a CO and has no attachment link")
        return self.link_between(node_id, self.co_ring[node.co_index])

    # -- routing -----------------------------------------------------------

    def _co_routes(self, co_a: str, co_b: str) -> list[tuple[str, ...]]:
        """CO node sequences from co_a to co_b along each ring direction.

        The increasing-index walk comes first; a two-CO ring degenerates to a
        single route.
        """
        if co_a == co_b:
            return [(co_a,)]
        ring = self.co_ring
        n = len(ring)
        ia, ib = ring.index(co_a), ring.index(co_b)
        clockwise = tuple(ring[(ia + step) % n] for step in range((ib - ia) % n + 1))
        counter = tuple(ring[(ia - step) % n] for step in range((ia - ib) % n + 1))
        routes = [clockwise]
        if counter != clockwise:
            routes.append(counter)
        return routes

    def paths_between(self, src: str, dst: str) -> tuple[NetworkPath, ...]:
        """All simple paths whose CO-level segment follows a ring direction.

        Deterministic order: fewer hops first, then the increasing-index ring
        direction before the decreasing one.
        """
        if src == dst:
            raise InvalidParameterError("src and dst must differ")
        cached = self._path_cache.get((src, dst))
        if cached is not None:
            return cached
        for node_id in (src, dst):
            if node_id not in self.nodes:
                raise InvalidParameterError(f"unknown node {node_id}")

        src_node, dst_node = self.nodes[src], self.nodes[dst]
        co_src = self.co_ring[src_node.co_index]
        co_dst = self.co_ring[dst_node.co_index]
        prefix = () if src_node.kind == NodeKind.METRO_CO else (src,)
        suffix = () if dst_node.kind == NodeKind.METRO_CO else (dst,)

        paths = []
        seen = set()
        for route in self._co_routes(co_src, co_dst):
            node_seq = prefix + route + suffix
            link_seq = tuple(
                self.link_between(a, b).id for a, b in zip(node_seq, node_seq[1:])
            )
            if link_seq not in seen:
                seen.add(link_seq)
                paths.append(NetworkPath(nodes=node_seq, links=link_seq))
        paths.sort(key=lambda p: p.hop_count)  # stable: ties keep ring order
        result = tuple(paths)
        self._path_cache[(src, dst)] = result
        return result

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        def profile_dict(p: PowerProfile) -> dict:
            if isinstance(p, StaticPower):
                return {"profile": "static", "watts": p.watts}
            return {"profile": "load_proportional", "watts_per_gbps": p.watts_per_gbps}

        return {
            "format": "fogplace-topology/1",
            "gateway_co": self.gateway_co,
            "co_ring": list(self.co_ring),
            "nodes": [
                {"id": n.id, "kind": n.kind.value, "co_index": n.co_index}
                for n in self.nodes.values()
            ],
            "links": [
                {
                    "id": e.id,
                    "endpoints": list(e.endpoints),
                    "capacity_gbps": e.capacity_gbps,
                    "segment": e.segment.value,
                    "traversed_devices": list(e.traversed_devices),
                }
                for e in self.links.values()
            ],
            "devices": [
                {"id": d.id, "kind": d.kind.value, "node": d.node, **profile_dict(d.power)}
                for d in self.devices.values()
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Topology":
        if data.get("format") != "fogplace-topology/1":
            raise InvalidParameterError("unrecognized topology format")
        nodes = {
            d["id"]: Node(d["id"], NodeKind(d["kind"]), d["co_index"])
            for d in data["nodes"]
        }
        links = {}
        for d in data["links"]:
            links[d["id"]] = Link(
                id=d["id"],
                endpoints=tuple(d["endpoints"]),
                capacity_gbps=d["capacity_gbps"],
                segment=LinkSegment(d["segment"]),
                traversed_devices=tuple(d["traversed_devices"]),
            )
        devices = {}
        for d in data["devices"]:
            if d["profile"] == "static":
                power: PowerProfile = StaticPower(d["watts"])
            else:
                power = LoadProportionalPower(d["watts_per_gbps"])
            devices[d["id"]] = NetworkDevice(d["id"], DeviceKind(d["kind"]), power, d["node"])
        return cls(
            nodes=nodes,
            links=links,
            devices=devices,
            gateway_co=data["gateway_co"],
            co_ring=tuple(data["co_ring"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Topology":
        return cls.from_dict(json.loads(Path(path).read_text()))


def build_ring_topology(
    n_cos: int = 6,
    onus_per_co: int = 4,
    access_link_gbps: float = 10.0,
    core_link_gbps: float = DEFAULT_CORE_LINK_GBPS,
    pon_link_gbps: float = DEFAULT_PON_LINK_GBPS,
    gateway_co_index: int = 0,
    gateway_link_gbps: float = UNBOUNDED_GBPS,
) -> Topology:
    """Build a CO ring with one BO, one CS and a PON tree per CO.

    ``access_link_gbps`` applies to the BO and CS uplinks only; last-mile PON
    tails keep ``pon_link_gbps`` regardless (scaling the access tier does not
    upgrade the PON plant).
    """
    if n_cos < 1:
        raise InvalidParameterError(f"n_cos must be >= 1, got {n_cos}")
    if onus_per_co < 1:
        raise InvalidParameterError(f"onus_per_co must be >= 1, got {onus_per_co}")
    if access_link_gbps <= 0 or core_link_gbps <= 0 or pon_link_gbps <= 0:
        raise InvalidParameterError("link capacities must be > 0")
    if not 0 <= gateway_co_index < n_cos:
        raise InvalidParameterError(f"gateway_co_index {gateway_co_index} out of range")

    nodes: dict[str, Node] = {}
    links: dict[str, Link] = {}
    devices: dict[str, NetworkDevice] = {}

    def add_node(node: Node) -> None:
        nodes[node.id] = node

    def add_device(dev: NetworkDevice) -> None:
        devices[dev.id] = dev

    def add_link(link: Link) -> None:
        links[link.id] = link

    co_ids = tuple(f"co{i}" for i in range(n_cos))
    for i, co in enumerate(co_ids):
        add_node(Node(co, NodeKind.METRO_CO, i))
        add_device(
            NetworkDevice(
                f"aggr-{co}",
                DeviceKind.AGGREGATION_ROUTER,
                LoadProportionalPower(AGGREGATION_ROUTER_WATTS_PER_GBPS),
                co,
            )
        )
        add_device(
            NetworkDevice(
                f"accr-{co}",
                DeviceKind.ACCESS_ROUTER,
                LoadProportionalPower(ACCESS_ROUTER_WATTS_PER_GBPS),
                co,
            )
        )
        add_device(
            NetworkDevice(
                f"olt-{co}", DeviceKind.OLT, LoadProportionalPower(OLT_WATTS_PER_GBPS), co
            )
        )

    # Ring links; degenerate sizes get fewer (n=1: none, n=2: a single link).
    if n_cos >= 2:
        ring_pairs = [(i, (i + 1) % n_cos) for i in range(n_cos if n_cos > 2 else 1)]
        for i, j in ring_pairs:
            a, b = co_ids[i], co_ids[j]
            add_link(
                Link(
                    id=f"core-{a}-{b}",
                    endpoints=(a, b),
                    capacity_gbps=core_link_gbps,
                    segment=LinkSegment.METRO_CORE,
                    traversed_devices=(f"aggr-{a}", f"aggr-{b}"),
                )
            )

    for i, co in enumerate(co_ids):
        bo = f"bo{i}"
        add_node(Node(bo, NodeKind.ENTERPRISE_BO, i))
        add_device(NetworkDevice(f"cpe-{bo}", DeviceKind.CPE, StaticPower(CPE_WATTS), bo))
        add_link(
            Link(
                id=f"acc-{co}-{bo}",
                endpoints=(co, bo),
                capacity_gbps=access_link_gbps,
                segment=LinkSegment.METRO_ACCESS,
                traversed_devices=(f"cpe-{bo}", f"accr-{co}"),
            )
        )

        cs = f"cs{i}"
        add_node(Node(cs, NodeKind.RADIO_CS, i))
        add_link(
            Link(
                id=f"acc-{co}-{cs}",
                endpoints=(co, cs),
                capacity_gbps=access_link_gbps,
                segment=LinkSegment.METRO_ACCESS,
                traversed_devices=(f"accr-{co}",),
            )
        )

        for j in range(onus_per_co):
            onu = f"onu{i}-{j}"
            add_node(Node(onu, NodeKind.PON_ONU, i))
            add_device(NetworkDevice(f"onudev-{onu}", DeviceKind.ONU, StaticPower(ONU_WATTS), onu))
            add_link(
                Link(
                    id=f"pon-{co}-{onu}",
                    endpoints=(co, onu),
                    capacity_gbps=pon_link_gbps,
                    segment=LinkSegment.LAST_MILE,
                    traversed_devices=(f"onudev-{onu}", f"olt-{co}"),
                )
            )

    gateway = co_ids[gateway_co_index]
    add_node(Node("dc", NodeKind.HYPERSCALE_DC, gateway_co_index))
    add_link(
        Link(
            id=f"gw-{gateway}-dc",
            endpoints=(gateway, "dc"),
            capacity_gbps=gateway_link_gbps,
            segment=LinkSegment.GATEWAY_UPLINK,
            traversed_devices=(),
        )
    )

    return Topology(nodes=nodes, links=links, devices=devices, gateway_co=gateway, co_ring=co_ids)


def build_paper_topology(access_link_gbps: float = 10.0, onus_per_co: int = 4) -> Topology:
    """The six-CO reference network used by the experiment grid."""
    return build_ring_topology(
        n_cos=6, onus_per_co=onus_per_co, access_link_gbps=access_link_gbps
    )


def enumerate_paths(topology: Topology, src: str, dst: str) -> tuple[NetworkPath, ...]:
    """Candidate simple paths between two distinct nodes (see Topology.paths_between)."""
    return topology.paths_between(src, dst)


def hop_count(topology: Topology, path: NetworkPath) -> int:
    """Number of links on a path, after checking the path is a valid chain."""
    if len(path.nodes) != len(path.links) + 1 or not path.nodes:
        raise InvalidParameterError("malformed path")
    if len(set(path.nodes)) != len(path.nodes):
        raise InvalidParameterError("path repeats a node")
    for (a, b), link_id in zip(zip(path.nodes, path.nodes[1:]), path.links):
        link = topology.links.get(link_id)
        if link is None or frozenset((a, b)) != frozenset(link.endpoints):
            raise InvalidParameterError(f"link {link_id} does not connect {a}-{b}")
    return len(path.links)


def zero_hop_path(node_id: str) -> NetworkPath:
    """Path of a workload hosted at its own source node."""
    return NetworkPath(nodes=(node_id,), links=())
