# lunarnet/scenario/narrative.py
"""Trace assertions for the EVA incident storyline."""
from dataclasses import dataclass
from typing import Any, Dict, List, Optional

from radio.topology import Tier
from simkernel.clock import seconds
from .spec import OcclusionEvent, ScenarioSpec

MODE_ORDER = ("PUSH_REALTIME", "PULL_CACHED", "AUTONOMOUS_BULK")
EARTH_RTT_FLOOR_S = 1.5


@dataclass(frozen=True)
class NarrativeCheck:
    name: str
    passed: bool
    detail: str


def _first(records: List[Dict[str, Any]], kind: str, **match: Any) -> Optional[Dict[str, Any]]:
    for r in records:
        if r["kind"] == kind and all(r.get(k) == v for k, v in match.items()):
            return r
    return None


def _occluded(spec: ScenarioSpec, a: str, b: str, t: int) -> bool:
    pair = {a, b}
    return any(isinstance(e, OcclusionEvent) and set(e.link) == pair
               and seconds(e.start_s) <= t < seconds(e.end_s) for e in spec.events)


def alert_after_third_miss(records, spec) -> NarrativeCheck:
    alert = _first(records, "alert_raised")
    if alert is None:
        return NarrativeCheck("a", False, "no alert was raised")
    third = next((r for r in records if r["kind"] == "ping_missed" and r["consecutive"] >= 3),
                 None)
    if third is None or third["t"] != alert["t"] or third["watcher"] != alert["agent"]:
        return NarrativeCheck("a", False, f"alert at {alert['t']} does not follow a third miss")
    return NarrativeCheck("a", True, f"alert raised by {alert['agent']} at t={alert['t']}")


def alert_via_relay(records, spec) -> NarrativeCheck:
    base = spec.nodes_of(Tier.BASE)[0]
    relays = set(spec.nodes_of(Tier.RELAY_HUB))
    alert = _first(records, "alert_raised")
    received = _first(records, "a2a_delivered", agent=base, msg_kind="ALERT")
    if alert is None or received is None:
        return NarrativeCheck("b", False, "alert never reached base")
    if received["src"] not in relays or received["via"] != "RELAY":
        return NarrativeCheck("b", False, f"alert reached base from {received['src']} "
                                          f"via {received['via']}")
    if not _occluded(spec, alert["agent"], base, received["t"]):
        return NarrativeCheck("b", False, f"{alert['agent']}-{base} was not occluded")
    return NarrativeCheck("b", True, f"relayed by {received['src']} at t={received['t']}")


def reallocation_before_earth(records, spec) -> NarrativeCheck:
    base = spec.nodes_of(Tier.BASE)[0]
    received = _first(records, "alert_received", agent=base)
    realloc = _first(records, "policy_reallocated")
    if received is None or realloc is None:
        return NarrativeCheck("c", False, "no reallocation after the alert")
    window = realloc["t"] - received["t"]
    if not 0 <= window < seconds(EARTH_RTT_FLOOR_S):
        return NarrativeCheck("c", False, f"reallocation {window} us after alert receipt")
    earth_reply = _first(records, "a2a_delivered", agent=base, msg_kind="POLICY_UPDATE")
    if earth_reply is not None and earth_reply["t"] <= realloc["t"]:
        return NarrativeCheck("c", False, "Earth answered before the local reallocation")
    return NarrativeCheck("c", True, f"reallocated {window} us after alert receipt")


def rescue_replanned(records, spec) -> NarrativeCheck:
    planned = _first(records, "locomotion_planned")
    replanned = _first(records, "locomotion_replanned")
    if planned is None or replanned is None:
        return NarrativeCheck("d", False, "rescue rover never replanned")
    drops = [seconds(c.at_s) for c in spec.terrain.changes] if spec.terrain else []
    if not drops or replanned["t"] < min(drops) or replanned["t"] < planned["t"]:
        return NarrativeCheck("d", False, f"replan at {replanned['t']} precedes the quality drop")
    return NarrativeCheck("d", True, f"replanned at t={replanned['t']}, cost "
                                     f"{replanned['old_cost']} -> {replanned['new_cost']}")


def mode_progression(records, spec) -> NarrativeCheck:
    for agent in spec.agents:
        modes = [r["mode"] for r in records
                 if r["kind"] == "agent_state" and r["agent"] == agent.node]
        position = 0
        for mode in modes:
            if position < len(MODE_ORDER) and mode == MODE_ORDER[position]:
                position += 1
        if position == len(MODE_ORDER):
            return NarrativeCheck("e", True, f"{agent.node} went through all three modes")
    return NarrativeCheck("e", False, "no agent traversed PUSH -> PULL -> AUTONOMOUS")


CHECKS = (alert_after_third_miss, alert_via_relay, reallocation_before_earth,
          rescue_replanned, mode_progression)


def check_narrative(records: List[Dict[str, Any]], spec: ScenarioSpec) -> List[NarrativeCheck]:
    return [check(records, spec) for check in CHECKS]
