# lunarnet/agent/cognitive.py
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional, Set, Tuple

import numpy as np

from a2a.codec import MalformedPayload, UnknownKind, decode, encode
from a2a.framing import ChecksumMismatch, IncompleteMessage
from a2a.messages import (AlertBody, CompressionTier, MessageKind, SemanticMessage,
                          SemanticStateVector, select_tier)
from capabilities.locomotion import NoPath, path_cost
from capabilities.terrain import Cell
from dtn.bundle import Bundle
from dtn.network import DtnNetwork
from dtn.routing import earliest_arrival
from radio.model import LinkDown, RadioModel
from radio.regime import DEFAULT_THRESHOLDS, ConnectivityRegime, RegimeThresholds, classify_regime
from radio.topology import Tier
from server.context_server import ContextServer, Unreachable
from simkernel.clock import SimTime, as_seconds, seconds
from simkernel.engine import Component, Engine, Event
from .messaging import Messenger, Via, unframe
from .policies import (CONFIDENCE_GATE, Criticality, Decision, DecisionAction, DisseminationMode,
                       GateOutcome, MadeBy, autonomous_decision_gate, mode_for,
                       modulate_confidence, passes_gate, planning_horizon)
from .state import AgentState, PeerAvailability, PendingDecision, UnknownPeer

logger = logging.getLogger(__name__)

__all__ = ["AgentConfig", "CognitiveAgent", "DuplicateAlert", "UnknownPeer"]

REPORT_BYTES = 256
STATE_TAG_LIMIT = 16


class DuplicateAlert(ValueError):
    pass


@dataclass
class AgentConfig:
    """Cadences and thresholds of one agent; times in microseconds."""

    base: str
    earth: Optional[str] = None
    context_server: Optional[str] = None
    topics: List[str] = field(default_factory=list)
    base_confidence: float = 0.9
    gate: float = CONFIDENCE_GATE
    thresholds: RegimeThresholds = DEFAULT_THRESHOLDS
    step_period: SimTime = seconds(1)
    pull_staleness: SimTime = seconds(10)
    summary_period: SimTime = seconds(10)
    report_period: SimTime = seconds(60)
    sync_period: SimTime = seconds(60)
    prefetch_lookahead: SimTime = seconds(10)
    prefetch_staleness: SimTime = seconds(1)
    query_timeout: SimTime = seconds(30)
    rescue: bool = False
    position: Cell = (0, 0)
    map_topic: str = "quality_map"
    move_period: SimTime = seconds(30)
    replan_threshold: float = 1.0
    wireless_weight: float = 10.0
    reallocation_deadline_s: float = 1.0
    sampling_deadline_s: float = 600.0


@dataclass
class RescuePlan:
    goal: Cell
    path: List[Cell]
    index: int
    map_stamp: Optional[SimTime]
    incident: str

    @property
    def cell(self) -> Cell:
        return self.path[self.index]

    @property
    def remaining(self) -> List[Cell]:
        return self.path[self.index:]


class CognitiveAgent(Component):
    """Regime-driven agent hosted on one lunar node.

    Each step samples the best link, classifies the connectivity regime and
    acts in the dissemination mode it maps to. Alerts are handled by role:
    rovers rebroadcast, relay hubs offer capacity toward base, and the base
    decides locally before reporting to Earth.
    """

    def __init__(self, engine: Engine, radio: RadioModel, dtn: DtnNetwork,
                 messenger: Messenger, node: str, config: AgentConfig, horizon: SimTime,
                 servers: Optional[Dict[str, ContextServer]] = None,
                 local_server: Optional[ContextServer] = None, ric=None):
        super().__init__(node)
        self.engine = engine
        self.radio = radio
        self.dtn = dtn
        self.messenger = messenger
        self.node = node
        self.config = config
        self.horizon = horizon
        self.servers = servers or {}
        self.local_server = local_server
        self.ric = ric
        self.state = AgentState(role=radio.tier(node), base_confidence=config.base_confidence)
        self.peers = PeerAvailability(self._lunar_peers())
        self.serving: Optional[str] = None
        self.quality = 0.0
        self.bandwidth = 0
        self.rescue: Optional[RescuePlan] = None
        self._seq = 0
        self._seen_alerts: Set[Tuple[str, int]] = set()
        self._subscribed: Set[str] = set()
        self._pending_queries: Set[str] = set()
        self._last_summary: Optional[SimTime] = None
        self._last_report: Optional[SimTime] = None
        self._executed: List[str] = []
        self._earth_pending: List[Dict[str, Any]] = []
        self._incident: Optional[str] = None

    @property
    def role(self) -> Tier:
        return self.state.role

    def _lunar_peers(self) -> List[str]:
        return [p for p in self.radio.neighbors(self.node)
                if self.radio.tier(p) not in (Tier.EARTH, Tier.SUIT)]

    def _next_seq(self) -> int:
        self._seq += 1
        return self._seq

    @property
    def shared_server(self) -> Optional[ContextServer]:
        if self.config.context_server is None:
            return None
        return self.servers.get(self.config.context_server)

    def start(self) -> None:
        self.dtn.register_endpoint(self.node, self._on_bundle)
        self.engine.schedule(self.engine.now, self.component_id, "step")
        if self.role == Tier.BASE and self.config.earth is not None:
            first = self.engine.now + self.config.sync_period
            if first <= self.horizon:
                self.engine.schedule(first, self.component_id, "sync")

    # step

    def step(self, t: SimTime) -> None:
        prev_regime = self.state.regime
        prev_serving = self.serving
        best = self.radio.best_link(self.node, t)
        if best is None:
            self.serving, up, self.quality, self.bandwidth = None, False, 0.0, 0
        else:
            self.serving, link = best
            up = link.up
            self.quality = link.quality if up else 0.0
            self.bandwidth = self.radio.effective_bandwidth(self.node, self.serving, t)
        regime = classify_regime(self.quality, self.bandwidth, prev_regime, up,
                                 self.config.thresholds)
        mode = mode_for(regime)
        self.state.regime = regime
        self.state.mode = mode
        self.state.confidence = modulate_confidence(self.state.base_confidence, self.quality)
        self.state.horizon_s = self._horizon_s(t)
        self.engine.record("agent_state", self.node, agent=self.node, regime=regime.name,
                           mode=mode.value, confidence=self.state.confidence,
                           horizon_s=self.state.horizon_s, serving=self.serving)
        for peer in self._lunar_peers():
            self.peers.update(peer, self.radio.link_at(self.node, peer, t).up)

        if prev_serving is not None and self.serving != prev_serving:
            self.decide(Decision(DecisionAction.REQUEST_HANDOVER, Criticality.NON_CRITICAL,
                                 self.state.confidence,
                                 reason=f"{prev_serving}->{self.serving}"))
        if prev_regime is not None and regime != prev_regime:
            self.decide(Decision(DecisionAction.ADAPT_SAMPLING_RATE, Criticality.NON_CRITICAL,
                                 self.state.confidence,
                                 reason=f"{prev_regime.name}->{regime.name}"))

        if mode == DisseminationMode.PUSH_REALTIME:
            self._step_push(t)
        else:
            self._unsubscribe_all()
            if mode == DisseminationMode.PULL_CACHED:
                self._step_pull(t)
            else:
                self._step_autonomous(t)
        self._fetch_broker()
        if self.rescue is not None:
            self._maybe_replan()
        self._drain_deferred()

    def _horizon_s(self, t: SimTime) -> float:
        if self.node == self.config.base:
            return planning_horizon(0.0)
        path = self.radio.live_route(self.node, self.config.base, t)
        if path is not None:
            delay = sum(self.radio.plan.config(u, v).baseline.one_way_delay
                        for u, v in zip(path, path[1:]))
            return planning_horizon(as_seconds(delay))
        route = earliest_arrival(self.radio.plan, self.node, self.config.base, t, REPORT_BYTES,
                                 self.horizon)
        if route is None:
            return 0.0
        return planning_horizon(as_seconds(route.arrival - t))

    def _tier(self) -> CompressionTier:
        return select_tier(self.bandwidth, self.state.regime)

    def _step_push(self, t: SimTime) -> None:
        server = self.shared_server
        if server is not None and server.node != self.node:
            for topic in self.config.topics:
                if topic not in self._subscribed:
                    server.subscribe(self.node, topic)
                    self._subscribed.add(topic)
        if self.serving is not None:
            self._send(self.serving, self._state_update(CompressionTier.FULL),
                       CompressionTier.FULL)

    def _step_pull(self, t: SimTime) -> None:
        for topic in self.config.topics:
            staleness = self.state.staleness(topic, t)
            if staleness is None or staleness > self.config.pull_staleness:
                self._query(topic)
        if self._last_summary is None or t - self._last_summary >= self.config.summary_period:
            self._last_summary = t
            if self.serving is not None:
                self._send(self.serving, self._state_update(CompressionTier.SUMMARY),
                           CompressionTier.SUMMARY)
        if self._connectivity_fading(t):
            stale = [topic for topic in self.config.topics
                     if (self.state.staleness(topic, t) or 0) > self.config.prefetch_staleness]
            if stale:
                self.engine.record("prefetch", self.node, agent=self.node, topics=stale)
                for topic in stale:
                    self._query(topic)

    def _connectivity_fading(self, t: SimTime) -> bool:
        """Whether the serving link is predicted POOR one lookahead from now."""
        if self.serving is None:
            return False
        ahead = t + self.config.prefetch_lookahead
        estimate, _ = self.radio.predict_quality(self.node, self.serving, ahead, t)
        future = self.radio.plan.state_at(self.node, self.serving, ahead)
        regime = classify_regime(estimate if future.up else 0.0, future.bandwidth_bps,
                                 self.state.regime, future.up, self.config.thresholds)
        return regime == ConnectivityRegime.POOR

    def _step_autonomous(self, t: SimTime) -> None:
        if self._last_report is not None and t - self._last_report < self.config.report_period:
            return
        self._last_report = t
        dst = self.config.earth if self.node == self.config.base else self.config.base
        if dst is None:
            return
        report = SemanticMessage(
            kind=MessageKind.SITUATION_REPORT, sender=self.node, seq=self._next_seq(),
            confidence=self.state.confidence,
            body={"incident": self._incident, "decisions": self._executed[-16:],
                  "cache_staleness": self.state.cache_staleness(t)},
        )
        self._executed = []
        self._send(dst, report, self._tier())

    # messaging

    def _send(self, dst: str, msg: SemanticMessage, tier: CompressionTier):
        return self.messenger.send(self.node, dst, msg, tier, self.state.mode)

    def _state_update(self, tier: CompressionTier) -> SemanticMessage:
        values = self.engine.rng(self.node).random(64)
        position = list(self.rescue.cell if self.rescue is not None else self.config.position)
        tags = (self.role.value, self.state.mode.value)
        return SemanticMessage(
            kind=MessageKind.STATE_UPDATE, sender=self.node, seq=self._next_seq(),
            confidence=self.state.confidence, tier=tier,
            body={"position": position, "mode": self.state.mode.value,
                  "regime": self.state.regime.name},
            state=SemanticStateVector(tuple(values), tags[:STATE_TAG_LIMIT]),
        )

    def _query(self, topic: str) -> None:
        server = self.shared_server
        if server is None or topic in self._pending_queries:
            return
        spec = server.topic(topic)
        try:
            result = server.query(self.node, spec.capability, spec.arguments,
                                  timeout=self.config.query_timeout)
        except Unreachable as exc:
            self.engine.record("query_unreachable", self.node, agent=self.node, topic=topic,
                               reason=str(exc))
            return
        self._pending_queries.add(topic)
        self.engine.schedule(result.ready_at, self.component_id, "query_result",
                             {"topic": topic, "stamp": result.issued_at,
                              "_value": result.result})

    def _unsubscribe_all(self) -> None:
        server = self.shared_server
        for topic in sorted(self._subscribed):
            server.unsubscribe(self.node, topic)
        self._subscribed.clear()

    def _fetch_broker(self) -> None:
        server = self.shared_server
        if server is None or server.node == self.node:
            return
        if server.route_delay(self.node, server.node) is None:
            return
        for data in server.broker_fetch(self.node, self.node):
            self._receive_bytes(data, Via.BROKER, server.node)

    def _on_bundle(self, bundle: Bundle, t: SimTime) -> None:
        self._receive_bytes(bundle.payload, Via.DTN, bundle.src)

    def _receive_bytes(self, data: bytes, via: Via, src: str) -> None:
        try:
            msg = decode(data)
        except (MalformedPayload, UnknownKind) as exc:
            self.engine.record("a2a_rejected", self.node, agent=self.node, src=src,
                               reason=str(exc))
            return
        self.receive(msg, via, src)

    def receive(self, msg: SemanticMessage, via: Via, src: str) -> None:
        self.engine.record("a2a_delivered", self.node, agent=self.node, src=src,
                           msg_kind=msg.kind.value, sender=msg.sender, msg_seq=msg.seq,
                           tier=msg.tier.value, via=via.value)
        now = self.engine.now
        body = msg.body_dict()
        if msg.kind == MessageKind.ALERT:
            try:
                self.handle_alert(msg, via, src)
            except DuplicateAlert:
                self.engine.record("alert_duplicate", self.node, agent=self.node,
                                   sender=msg.sender, msg_seq=msg.seq, src=src)
        elif msg.kind == MessageKind.COORDINATION and body.get("action") == "context_update":
            self._on_context(body["target"], body["value"], body["stamp"])
        elif msg.kind == MessageKind.COORDINATION:
            self.engine.record("coordination_received", self.node, agent=self.node,
                               sender=msg.sender, action=body.get("action"),
                               subject=body.get("target"))
        elif msg.kind == MessageKind.POLICY_UPDATE:
            self._on_policy(body)
        elif msg.kind == MessageKind.RELAY_OFFER:
            self.engine.record("relay_offer_received", self.node, agent=self.node,
                               relay=body["relay"], capacity_bps=body["capacity_bps"])
        else:
            self.state.remember(f"{msg.kind.value.lower()}:{msg.sender}", body, now)

    def _on_context(self, topic: str, value: Dict[str, Any], stamp: SimTime) -> None:
        self._pending_queries.discard(topic)
        if self.state.remember(topic, value, stamp):
            self.engine.record("context_cached", self.node, agent=self.node, topic=topic,
                               stamp=stamp)
            if self.rescue is not None and topic == self.config.map_topic:
                self._maybe_replan()

    # decisions

    def decide(self, decision: Decision) -> bool:
        """Execute through the confidence gate, or park it in the defer queue."""
        confidence = self.state.confidence
        executed = passes_gate(decision, confidence, self.config.gate)
        if executed:
            self._executed.append(decision.action.value)
        else:
            self.state.defer_queue.append(PendingDecision(decision, self.engine.now))
            self.engine.record("decision_deferred", self.node, agent=self.node,
                               decision=decision.action.value, confidence=confidence)
        self._record_decision(decision, confidence, executed)
        return executed

    def _record_decision(self, decision: Decision, confidence: float, executed: bool) -> None:
        self.engine.record("decision", self.node, agent=self.node,
                           decision=decision.action.value,
                           criticality=decision.criticality.value, confidence=confidence,
                           mode=self.state.mode.value if self.state.mode else None,
                           made_by=decision.made_by.value, executed=executed,
                           reason=decision.reason)

    def _drain_deferred(self) -> None:
        if not self.state.defer_queue or self.state.confidence < self.config.gate:
            return
        pending, self.state.defer_queue = self.state.defer_queue, []
        for item in pending:
            self._executed.append(item.decision.action.value)
            self._record_decision(item.decision, self.state.confidence, True)

    # alerts

    def raise_alert(self, body: AlertBody) -> SemanticMessage:
        """Originate an alert from this node and broadcast it."""
        msg = SemanticMessage(kind=MessageKind.ALERT, sender=self.node, seq=self._next_seq(),
                              confidence=self.state.base_confidence, body=body)
        self._seen_alerts.add(msg.key)
        self._incident = f"{msg.sender}:{msg.seq}"
        self.state.remember("alert", body.to_dict(), self.engine.now)
        self.engine.record("alert_raised", self.node, agent=self.node, sender=msg.sender,
                           msg_seq=msg.seq, anomaly=body.anomaly_class.value,
                           assistance_level=body.assistance_level)
        self.decide(Decision(DecisionAction.SEND_ALERT, Criticality.CRITICAL,
                             self.state.confidence))
        logger.info(f"{self.node} raised {body.anomaly_class.value} alert")
        self._rebroadcast(msg, exclude=None)
        if self.config.rescue:
            self.start_rescue(body, self._incident)
        return msg

    def _rebroadcast(self, msg: SemanticMessage, exclude: Optional[str]) -> List[str]:
        peers = [p for p in self._lunar_peers() if p != exclude and p != msg.sender]
        return self.messenger.broadcast(self.node, peers, msg, self._tier(), self.state.mode)

    def handle_alert(self, msg: SemanticMessage, via: Via, src: str) -> None:
        if msg.key in self._seen_alerts:
            raise DuplicateAlert(f"{self.node} already handled alert {msg.key}")
        self._seen_alerts.add(msg.key)
        body: AlertBody = msg.body
        incident = f"{msg.sender}:{msg.seq}"
        self._incident = incident
        self.state.remember("alert", body.to_dict(), self.engine.now)
        self.engine.record("alert_received", self.node, agent=self.node, sender=msg.sender,
                           msg_seq=msg.seq, via=via.value, src=src, role=self.role.value)
        if self.role == Tier.ROVER:
            self._rebroadcast(msg, exclude=src)
            if self.config.rescue and self.rescue is None:
                self.start_rescue(body, incident)
        elif self.role == Tier.RELAY_HUB:
            self._relay_alert(msg, src, incident)
        elif self.role == Tier.BASE:
            self._base_alert(msg, incident)

    def _relay_alert(self, msg: SemanticMessage, src: str, incident: str) -> None:
        base = self.config.base
        if not self.radio.has_link(self.node, base):
            self._rebroadcast(msg, exclude=src)
            return
        quality = self._predicted_quality(base)
        capacity = int(quality * self.radio.effective_bandwidth(self.node, base, self.engine.now))
        self.decide(Decision(DecisionAction.RELAY_ACCEPT, Criticality.CRITICAL,
                             self.state.confidence, reason=incident))
        tier = self._tier()
        self._send(base, msg, tier)
        offer = SemanticMessage(kind=MessageKind.RELAY_OFFER, sender=self.node,
                                seq=self._next_seq(), confidence=self.state.confidence,
                                body={"relay": self.node, "capacity_bps": capacity,
                                      "for_alert": [msg.sender, msg.seq], "quality": quality})
        self._send(src, offer, tier)
        request = SemanticMessage(kind=MessageKind.COORDINATION, sender=self.node,
                                  seq=self._next_seq(), confidence=self.state.confidence,
                                  body={"action": "priority_request", "target": "EMERGENCY",
                                        "incident": incident})
        self._send(base, request, tier)

    def _predicted_quality(self, peer: str) -> float:
        """Quality toward peer ten seconds ahead, asked of the context server when reachable."""
        args = {"link": [self.node, peer], "horizon_s": 10.0}
        server = self.shared_server
        if server is not None and server.capabilities.has("signal_quality_estimation"):
            try:
                return server.query(self.node, "signal_quality_estimation", args,
                                    timeout=self.config.query_timeout).result["quality"]
            except Unreachable:
                pass
        now = self.engine.now
        return self.radio.predict_quality(self.node, peer, now + seconds(10), now)[0]

    def _base_alert(self, msg: SemanticMessage, incident: str) -> None:
        now = self.engine.now
        rtt_s = 0.0
        if self.config.earth is not None:
            rtt_s = 2 * as_seconds(self.radio.plan.config(self.node, self.config.earth)
                                   .baseline.one_way_delay)
        gate = autonomous_decision_gate(self.config.reallocation_deadline_s, rtt_s)
        reallocate = Decision(DecisionAction.REALLOCATE_BANDWIDTH, Criticality.CRITICAL,
                              self.state.confidence, reason=incident)
        if gate == GateOutcome.LOCAL:
            self.decide(reallocate)
            if self.ric is not None:
                self.ric.open_incident(incident, self.ric.lunar_links())
                self.ric.nearrt_reallocate(incident)
        else:
            self._earth_pending.append({"action": reallocate.action.value, "incident": incident})
        sampling = autonomous_decision_gate(self.config.sampling_deadline_s, rtt_s)
        if sampling == GateOutcome.LOCAL:
            self.decide(Decision(DecisionAction.ADAPT_SAMPLING_RATE, Criticality.NON_CRITICAL,
                                 self.state.confidence, reason=incident))
        else:
            self._earth_pending.append({"action": DecisionAction.ADAPT_SAMPLING_RATE.value,
                                        "incident": incident})
            self.engine.record("decision_pending_earth", self.node, agent=self.node,
                               decision=DecisionAction.ADAPT_SAMPLING_RATE.value,
                               incident=incident)
        if self.config.earth is not None:
            self._report_to_earth(incident, body_alert=msg.body_dict())
        logger.info(f"base {self.node} handled alert {incident} at t={now}")

    def _report_to_earth(self, incident: Optional[str],
                         body_alert: Optional[Dict[str, Any]] = None) -> None:
        decisions, self._earth_pending = self._earth_pending, []
        body: Dict[str, Any] = {"incident": incident, "decisions": decisions,
                                "telemetry": self.ric.latest_samples() if self.ric else {}}
        if body_alert is not None:
            body["alert"] = body_alert
        report = SemanticMessage(kind=MessageKind.SITUATION_REPORT, sender=self.node,
                                 seq=self._next_seq(), confidence=self.state.confidence,
                                 body=body)
        bundle = self.dtn.create_bundle(self.node, self.config.earth, report.traffic_class,
                                        encode(report))
        self.engine.record("situation_report", self.node, agent=self.node, bundle=bundle.id,
                           incident=incident, decisions=len(decisions))

    def _on_policy(self, body: Dict[str, Any]) -> None:
        if self.ric is None:
            return
        self.ric.apply_earth_policy(body)
        for item in body.get("decisions", []):
            self.decide(Decision(DecisionAction(item["action"]), Criticality.NON_CRITICAL,
                                 self.state.confidence, made_by=MadeBy.EARTH,
                                 reason=item.get("incident", "")))

    def _sync(self) -> None:
        now = self.engine.now
        self._report_to_earth(self._incident if self.ric and self.ric.policy.incidents else None)
        try:
            self.dtn.episodic_sync(self.node, self.config.earth, now)
        except LinkDown as exc:
            self.engine.record("episodic_sync_skipped", self.node, agent=self.node,
                               reason=str(exc))
        if now + self.config.sync_period <= self.horizon:
            self.engine.schedule(now + self.config.sync_period, self.component_id, "sync")

    # rescue

    def start_rescue(self, alert: AlertBody, incident: str) -> None:
        server = self.local_server
        if server is None or not server.capabilities.has("locomotion_planning"):
            return
        goal = server.capabilities.get("locomotion_planning").terrain.cell_of(alert.location)
        plan = self._plan(self.config.position, goal)
        if plan is None:
            return
        path, cost, stamp = plan
        self.rescue = RescuePlan(goal, path, 0, stamp, incident)
        self.engine.record("locomotion_planned", self.node, agent=self.node,
                           path=[list(c) for c in path], cost=cost, map_stamp=stamp)
        if len(path) == 1:
            self._arrive()
            return
        self.engine.schedule_in(self.config.move_period, self.component_id, "move")
        self._announce_eta()

    def _plan(self, start: Cell, goal: Cell) -> Optional[Tuple[List[Cell], float, Optional[SimTime]]]:
        entry = self.state.cache.get(self.config.map_topic)
        quality_map = entry.value["quality_map"] if entry is not None else []
        try:
            result = self.local_server.query(self.node, "locomotion_planning", {
                "start": list(start), "goal": list(goal),
                "wireless_weight": self.config.wireless_weight, "quality_map": quality_map,
            }).result
        except (NoPath, ValueError) as exc:
            self.engine.record("locomotion_failed", self.node, agent=self.node,
                               start=list(start), goal=list(goal), reason=str(exc))
            return None
        path = [tuple(c) for c in result["path"]]
        return path, result["cost"], entry.stamp if entry is not None else None

    def _maybe_replan(self) -> None:
        plan = self.rescue
        entry = self.state.cache.get(self.config.map_topic)
        if plan is None or entry is None:
            return
        if plan.map_stamp is not None and entry.stamp <= plan.map_stamp:
            return
        quality = entry.value["quality_map"]
        current_cost = path_cost(plan.remaining, np.asarray(quality, dtype=float),
                                 self.config.wireless_weight)
        fresh = self._plan(plan.cell, plan.goal)
        if fresh is None:
            return
        path, cost, stamp = fresh
        plan.map_stamp = stamp
        if current_cost <= cost + self.config.replan_threshold:
            return
        plan.path, plan.index = path, 0
        self.engine.record("locomotion_replanned", self.node, agent=self.node,
                           path=[list(c) for c in path], old_cost=current_cost, new_cost=cost,
                           map_stamp=stamp)
        self.decide(Decision(DecisionAction.REROUTE, Criticality.CRITICAL,
                             self.state.confidence, reason=plan.incident))
        self._announce_eta()

    def _announce_eta(self) -> None:
        plan = self.rescue
        eta_s = as_seconds((len(plan.remaining) - 1) * self.config.move_period)
        if eta_s > self.state.horizon_s:
            self.engine.record("eta_withheld", self.node, agent=self.node, eta_s=eta_s,
                               horizon_s=self.state.horizon_s)
            return
        energy = self.local_server.query(self.node, "energy_prediction",
                                         {"duration_s": eta_s, "driving_s": eta_s}).result
        msg = SemanticMessage(kind=MessageKind.COORDINATION, sender=self.node,
                              seq=self._next_seq(), confidence=self.state.confidence,
                              body={"action": "eta", "target": plan.incident, "eta_s": eta_s,
                                    "energy_j": energy["energy_j"], "goal": list(plan.goal)})
        self._send(self.config.base, msg, self._tier())

    def _move(self) -> None:
        plan = self.rescue
        if plan is None:
            return
        plan.index += 1
        self.engine.record("rover_moved", self.node, agent=self.node, cell=list(plan.cell))
        if plan.index == len(plan.path) - 1:
            self._arrive()
        else:
            self.engine.schedule_in(self.config.move_period, self.component_id, "move")

    def _arrive(self) -> None:
        plan = self.rescue
        self.engine.record("rescue_arrived", self.node, agent=self.node, cell=list(plan.cell),
                           incident=plan.incident)
        logger.info(f"{self.node} reached {plan.cell} for incident {plan.incident}")
        self.config.position = plan.cell
        self.rescue = None

    # events

    def handle(self, event: Event) -> None:
        if event.kind == "step":
            self.step(event.at)
            if event.at + self.config.step_period <= self.horizon:
                self.engine.schedule(event.at + self.config.step_period, self.component_id, "step")
        elif event.kind == "a2a_deliver":
            try:
                msg = unframe(event.payload["_frames"])
            except (ChecksumMismatch, IncompleteMessage, MalformedPayload, UnknownKind) as exc:
                self.engine.record("a2a_rejected", self.node, agent=self.node,
                                   src=event.payload["src"], reason=str(exc))
                return
            src = event.payload["src"]
            self.receive(msg, Via.DIRECT if msg.sender == src else Via.RELAY, src)
        elif event.kind == "mcp_push":
            self._on_context(event.payload["topic"], event.payload["_value"],
                             event.payload["stamp"])
        elif event.kind == "query_result":
            self._on_context(event.payload["topic"], event.payload["_value"],
                             event.payload["stamp"])
        elif event.kind == "move":
            self._move()
        elif event.kind == "sync":
            self._sync()
        else:
            raise ValueError(f"Agent cannot handle event kind '{event.kind}'")
