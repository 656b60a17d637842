# lunarnet/dtn/oracle.py
"""Exhaustive earliest-arrival search used to check the forwarding code.

Shares nothing with ``dtn.routing``: every simple path of the topology is
walked hop by hop, taking the earliest departure that fits the bundle into
a contact, and the minimum arrival over all paths wins. Up spans are
rebuilt here from the raw occlusion windows and halts of the plan.
"""
from dataclasses import dataclass
from typing import List, Optional, Tuple

import networkx as nx

from radio.contact_plan import ContactPlan
from radio.topology import LinkKey, link_key
from simkernel.clock import MICROS_PER_SECOND, SimTime
from .bundle import Bundle


@dataclass(frozen=True)
class Journey:
    path: Tuple[str, ...]
    arrival: SimTime


def _down_spans(plan: ContactPlan, key: LinkKey) -> List[Tuple[SimTime, SimTime]]:
    spans = [(w.start, w.end) for w in plan.windows.get(key, ())]
    spans.extend((h.start, h.end) for h in plan.halts if h.node in key)
    return sorted(spans)


def _is_down(spans: List[Tuple[SimTime, SimTime]], t: SimTime) -> bool:
    return any(start <= t < end for start, end in spans)


def _bandwidth(plan: ContactPlan, key: LinkKey, t: SimTime) -> int:
    cfg = plan.links[key]
    for d in plan.degradations.get(key, ()):
        if d.start <= t < d.end and d.bandwidth_bps:
            return d.bandwidth_bps
    return cfg.baseline.bandwidth_bps


def _hop_arrival(plan: ContactPlan, u: str, v: str, ready: SimTime,
                 size_bytes: int, horizon: SimTime) -> Optional[SimTime]:
    key = link_key(u, v)
    cfg = plan.links[key]
    if not cfg.baseline.up:
        return None
    spans = _down_spans(plan, key)
    # candidate departures: the ready time and every moment a down span ends
    candidates = sorted({ready} | {end for _, end in spans if end > ready})
    for depart in candidates:
        if depart >= horizon:
            break
        if _is_down(spans, depart):
            continue
        bits = size_bytes * 8 * MICROS_PER_SECOND
        done = depart + -(-bits // _bandwidth(plan, key, depart))
        # the whole serialization must sit inside one up span
        blocked = any(start < done and end > depart for start, end in spans)
        if not blocked and done <= horizon:
            return done + cfg.min_delay
    return None


def earliest_journey(plan: ContactPlan, bundle: Bundle, horizon: SimTime,
                     since: Optional[SimTime] = None) -> Optional[Journey]:
    """Earliest arrival of ``bundle`` at its destination over any simple path."""
    graph = nx.Graph()
    graph.add_edges_from(plan.links)
    if bundle.src not in graph or bundle.dst not in graph:
        return None
    start = bundle.created_at if since is None else since
    best: Optional[Journey] = None
    for path in nx.all_simple_paths(graph, bundle.src, bundle.dst):
        t: Optional[SimTime] = start
        for u, v in zip(path, path[1:]):
            t = _hop_arrival(plan, u, v, t, bundle.size_bytes, horizon)
            if t is None:
                break
        if t is not None and (best is None or t < best.arrival):
            best = Journey(tuple(path), t)
    return best


def deliverable(plan: ContactPlan, bundle: Bundle, horizon: SimTime) -> bool:
    journey = earliest_journey(plan, bundle, horizon)
    return journey is not None and journey.arrival < bundle.expires_at
