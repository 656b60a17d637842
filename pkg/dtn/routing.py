# lunarnet/dtn/routing.py
"""Contact-graph routing: earliest arrival over the time-expanded plan."""
import heapq
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from radio.contact_plan import ContactPlan
from simkernel.clock import MICROS_PER_SECOND, SimTime

_NEVER = float("inf")


@dataclass(frozen=True)
class Hop:
    src: str
    dst: str
    depart: SimTime
    arrival: SimTime


@dataclass(frozen=True)
class Route:
    hops: Tuple[Hop, ...]

    @property
    def next_hop(self) -> str:
        return self.hops[0].dst

    @property
    def depart(self) -> SimTime:
        return self.hops[0].depart

    @property
    def arrival(self) -> SimTime:
        return self.hops[-1].arrival


def serialization_time(size_bytes: int, bandwidth_bps: int) -> SimTime:
    return -(-size_bytes * 8 * MICROS_PER_SECOND // bandwidth_bps)


def earliest_hop(plan: ContactPlan, u: str, v: str, ready: SimTime,
                 size_bytes: int, horizon: SimTime) -> Optional[Hop]:
    """First departure at or after ready whose serialization fits the contact.

    Arrival adds the shortest one-way delay the link can draw.
    """
    delay = plan.config(u, v).min_delay
    for start, end in plan.up_intervals(u, v, horizon, since=ready):
        depart = max(ready, start)
        tx = serialization_time(size_bytes, plan.state_at(u, v, depart).bandwidth_bps)
        if depart + tx <= end:
            return Hop(u, v, depart, depart + tx + delay)
    return None


def earliest_arrival(plan: ContactPlan, src: str, dst: str, now: SimTime,
                     size_bytes: int, horizon: SimTime,
                     exclude: Tuple[str, ...] = ()) -> Optional[Route]:
    """Dijkstra on arrival time; waiting at nodes is free."""
    if src == dst:
        return None
    best: Dict[str, SimTime] = {src: now}
    via: Dict[str, Hop] = {}
    heap: List[Tuple[SimTime, str]] = [(now, src)]
    done = set()
    while heap:
        t, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        if u == dst:
            break
        for v in plan.neighbors(u):
            if v in done or v in exclude:
                continue
            hop = earliest_hop(plan, u, v, t, size_bytes, horizon)
            if hop is not None and hop.arrival < best.get(v, _NEVER):
                best[v] = hop.arrival
                via[v] = hop
                heapq.heappush(heap, (hop.arrival, v))
    if dst not in via:
        return None
    hops: List[Hop] = []
    node = dst
    while node != src:
        hop = via[node]
        hops.append(hop)
        node = hop.src
    return Route(tuple(reversed(hops)))
