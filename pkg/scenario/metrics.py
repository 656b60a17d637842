# lunarnet/scenario/metrics.py
import csv
import io
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from simkernel.clock import as_seconds

POLICY_KINDS = ("policy_initialized", "policy_reallocated", "policy_restored", "policy_applied")


@dataclass
class MetricsReport:
    duration_s: float
    alert_e2e_latency_s: Optional[float]
    delivery_ratio: Dict[str, float]
    autonomous_decision_fraction: float
    emergency_bandwidth_timeline: List[Dict[str, Any]]
    regime_timeline: Dict[str, List[List[Any]]]
    mode_timeline: Dict[str, List[List[Any]]]
    messages_by_tier: Dict[str, int]
    earth_rtt_s: List[float] = field(default_factory=list)

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "MetricsReport":
        return cls(**data)

    def to_csv(self) -> str:
        """Flat (metric, key, value) rows."""
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["metric", "key", "value"])
        writer.writerow(["duration_s", "", self.duration_s])
        writer.writerow(["alert_e2e_latency_s", "",
                         "" if self.alert_e2e_latency_s is None else self.alert_e2e_latency_s])
        for cls_name, ratio in sorted(self.delivery_ratio.items()):
            writer.writerow(["delivery_ratio", cls_name, ratio])
        writer.writerow(["autonomous_decision_fraction", "", self.autonomous_decision_fraction])
        for point in self.emergency_bandwidth_timeline:
            for link, share in sorted(point["emergency"].items()):
                writer.writerow(["emergency_share", f"{point['t_s']}@{link}", share])
        for name, timeline in (("regime", self.regime_timeline), ("mode", self.mode_timeline)):
            for node, points in sorted(timeline.items()):
                for t_s, value in points:
                    writer.writerow([name, f"{node}@{t_s}", value])
        for tier, count in sorted(self.messages_by_tier.items()):
            writer.writerow(["messages_by_tier", tier, count])
        for i, rtt in enumerate(self.earth_rtt_s):
            writer.writerow(["earth_rtt_s", i, rtt])
        return out.getvalue()


def _change_points(points: Iterable[List[Any]]) -> List[List[Any]]:
    result: List[List[Any]] = []
    for t_s, value in points:
        if not result or result[-1][1] != value:
            result.append([t_s, value])
    return result


def compute_metrics(records: List[Dict[str, Any]]) -> MetricsReport:
    """Derive the run report from trace records alone."""
    duration = 0
    alert_at = None
    alert_received_at = None
    created: Counter = Counter()
    delivered: Counter = Counter()
    expired: Counter = Counter()
    local = executed = 0
    policy_points: List[Dict[str, Any]] = []
    regimes: Dict[str, List[List[Any]]] = {}
    modes: Dict[str, List[List[Any]]] = {}
    tiers: Counter = Counter()
    rtts: List[float] = []

    for r in records:
        kind = r["kind"]
        if kind == "run_started":
            duration = r["duration"]
        elif kind == "alert_raised" and alert_at is None:
            alert_at = r["t"]
        elif kind == "alert_received" and r.get("role") == "BASE" and alert_received_at is None:
            alert_received_at = r["t"]
        elif kind == "bundle_created":
            created[r["priority"]] += 1
        elif kind == "bundle_delivered":
            delivered[r["priority"]] += 1
        elif kind == "bundle_expired":
            expired[r["priority"]] += 1
        elif kind == "decision" and r["executed"]:
            executed += 1
            local += r["made_by"] == "LOCAL"
        elif kind in POLICY_KINDS:
            policy_points.append({
                "t_s": as_seconds(r["t"]), "event": kind,
                "emergency": {link: s["EMERGENCY"] for link, s in sorted(r["shares"].items())},
            })
        elif kind == "agent_state":
            t_s = as_seconds(r["t"])
            regimes.setdefault(r["agent"], []).append([t_s, r["regime"]])
            modes.setdefault(r["agent"], []).append([t_s, r["mode"]])
        elif kind == "a2a_sent":
            tiers[r["tier"]] += 1
        elif kind == "earth_round_trip":
            rtts.append(r["rtt_s"])

    if policy_points and policy_points[-1]["t_s"] < as_seconds(duration):
        policy_points.append(dict(policy_points[-1], t_s=as_seconds(duration), event="end"))

    ratios = {}
    for cls_name in sorted(created):
        resolved = delivered[cls_name] + expired[cls_name]
        ratios[cls_name] = delivered[cls_name] / resolved if resolved else 1.0

    latency = None
    if alert_at is not None and alert_received_at is not None:
        latency = as_seconds(alert_received_at - alert_at)

    return MetricsReport(
        duration_s=as_seconds(duration),
        alert_e2e_latency_s=latency,
        delivery_ratio=ratios,
        autonomous_decision_fraction=local / executed if executed else 0.0,
        emergency_bandwidth_timeline=policy_points,
        regime_timeline={n: _change_points(p) for n, p in sorted(regimes.items())},
        mode_timeline={n: _change_points(p) for n, p in sorted(modes.items())},
        messages_by_tier=dict(sorted(tiers.items())),
        earth_rtt_s=rtts,
    )
