"""Total network power consumption (TNPC) over metro and access devices.

Static devices (CPEs, ONUs) draw their full wattage unconditionally: they sit
at a single customer location and carry regular traffic whether or not fog
workloads are placed behind them. Load-proportional devices (OLTs, access
routers, aggregation routers) draw watts_per_gbps times the traffic summed
over every link that charges them.

All sums use math.fsum, so totals are exact (correctly rounded) and
independent of link enumeration order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping

from .errors import NegativeTrafficError
from .topology import LinkSegment, LoadProportionalPower, StaticPower, Topology


@dataclass(frozen=True)
class PowerBreakdown:
    static_total: float
    load_proportional_total: float
    per_device: Mapping[str, float]
    per_segment: Mapping[LinkSegment, float]

    @property
    def tnpc(self) -> float:
        return self.static_total + self.load_proportional_total


def evaluate_power(topology: Topology, link_traffic: Mapping[str, float]) -> PowerBreakdown:
    """Evaluate TNPC for a per-link traffic map (Gb/s; missing links mean 0)."""
    for link_id, value in link_traffic.items():
        if value < 0:
            raise NegativeTrafficError(f"negative traffic {value} on link {link_id}")

    device_loads: dict[str, list[float]] = {dev_id: [] for dev_id in topology.devices}
    device_segment: dict[str, LinkSegment] = {}
    segment_terms: dict[LinkSegment, list[float]] = {seg: [] for seg in LinkSegment}

    for link in topology.links.values():
        traffic = link_traffic.get(link.id, 0.0)
        for dev_id in link.traversed_devices:
            device_segment.setdefault(dev_id, link.segment)
            device = topology.devices[dev_id]
            if isinstance(device.power, LoadProportionalPower):
                device_loads[dev_id].append(traffic)
                segment_terms[link.segment].append(device.power.watts_per_gbps * traffic)

    per_device: dict[str, float] = {}
    static_values: list[float] = []
    load_values: list[float] = []
    for dev_id, device in topology.devices.items():
        if isinstance(device.power, StaticPower):
            per_device[dev_id] = device.power.watts
            static_values.append(device.power.watts)
            segment = device_segment.get(dev_id)
            if segment is not None:
                segment_terms[segment].append(device.power.watts)
        else:
            watts = device.power.watts_per_gbps * math.fsum(device_loads[dev_id])
            per_device[dev_id] = watts
            load_values.append(watts)

    per_segment = {seg: math.fsum(terms) for seg, terms in segment_terms.items()}
    return PowerBreakdown(
        static_total=math.fsum(static_values),
        load_proportional_total=math.fsum(load_values),
        per_device=per_device,
        per_segment=per_segment,
    )


def link_power_coefficient(topology: Topology, link_id: str) -> float:
    """W/(Gb/s) charged for traffic on a link (sum over its load-proportional devices)."""
    link = topology.links[link_id]
    coefs = [
        topology.devices[d].power.watts_per_gbps
        for d in link.traversed_devices
        if isinstance(topology.devices[d].power, LoadProportionalPower)
    ]
    return math.fsum(coefs)
