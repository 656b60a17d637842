# lunarnet/ric/twin.py
import logging
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional

from a2a.codec import MalformedPayload, UnknownKind, decode
from a2a.messages import CompressionTier, MessageKind, SemanticMessage
from agent.messaging import Messenger, unframe
from agent.policies import DisseminationMode
from dtn.bundle import Bundle
from dtn.network import DtnNetwork
from radio.model import RadioModel
from radio.topology import LinkKey, TrafficClass
from simkernel.clock import SimTime, as_seconds
from simkernel.engine import Component, Engine, Event
from .spectrum import check_shares, shares_to_dict
from .telemetry import TelemetrySample

logger = logging.getLogger(__name__)


@dataclass
class TwinState:
    """Earth's delayed copy of the lunar network."""

    topology: List[LinkKey]
    samples: Dict[str, TelemetrySample] = field(default_factory=dict)
    received_at: Dict[str, SimTime] = field(default_factory=dict)
    staleness: Dict[str, SimTime] = field(default_factory=dict)

    def refresh(self, now: SimTime) -> None:
        for node, sample in self.samples.items():
            self.staleness[node] = now - sample.t


class EarthTwin(Component):
    """Non-RT RIC on Earth: digital twin fed by episodic syncs, plus policy replies."""

    def __init__(self, engine: Engine, radio: RadioModel, dtn: DtnNetwork, messenger: Messenger,
                 node: str, base: str, shares: Mapping[TrafficClass, float]):
        super().__init__(node)
        self.engine = engine
        self.radio = radio
        self.dtn = dtn
        self.messenger = messenger
        self.node = node
        self.base = base
        self.shares = check_shares(shares)
        self.state = TwinState(topology=sorted(radio.plan.links))
        self._seq = 0

    def start(self) -> None:
        self.dtn.register_endpoint(self.node, self._on_bundle)

    def _on_bundle(self, bundle: Bundle, t: SimTime) -> None:
        try:
            msg = decode(bundle.payload)
        except (MalformedPayload, UnknownKind) as exc:
            self.engine.record("twin_rejected", self.node, bundle=bundle.id, reason=str(exc))
            return
        self.nonrt_sync(msg, t, bundle.id)

    def nonrt_sync(self, msg: SemanticMessage, t: SimTime,
                   bundle_id: Optional[int] = None) -> int:
        """Apply one delivered report to the twin; returns how many samples changed."""
        if msg.kind != MessageKind.SITUATION_REPORT:
            return 0
        body = msg.body_dict()
        updated = 0
        for node, raw in sorted((body.get("telemetry") or {}).items()):
            sample = TelemetrySample.from_dict(raw)
            current = self.state.samples.get(node)
            if current is not None and current.t >= sample.t:
                continue
            self.state.samples[node] = sample
            self.state.received_at[node] = t
            updated += 1
        self.state.refresh(t)
        self.engine.record("twin_synced", self.node, bundle=bundle_id, sender=msg.sender,
                           updated=updated,
                           staleness={n: as_seconds(s) for n, s in sorted(self.state.staleness.items())})
        decisions = body.get("decisions") or []
        if decisions:
            self._reply(body, decisions, bundle_id)
        return updated

    def _reply(self, report: Dict, decisions: List[Dict], bundle_id: Optional[int]) -> None:
        now = self.engine.now
        self._seq += 1
        policy = SemanticMessage(
            kind=MessageKind.POLICY_UPDATE, sender=self.node, seq=self._seq, confidence=1.0,
            body={"policy_id": f"{self.node}-{self._seq}", "shares": shares_to_dict(self.shares),
                  "issued_at": now, "incident": report.get("incident"),
                  "decisions": [dict(d, approved=True) for d in decisions]},
        )
        sent = self.messenger.send(self.node, self.base, policy, CompressionTier.FULL,
                                   DisseminationMode.PUSH_REALTIME)
        if sent.channel != "direct" or bundle_id is None:
            return
        uplink = self.dtn.hop_delays.get(bundle_id, [])
        if not uplink:
            return
        rtt = uplink[-1] + sent.delay
        self.engine.record("earth_round_trip", self.node, bundle=bundle_id, uplink=uplink[-1],
                           downlink=sent.delay, rtt=rtt, rtt_s=as_seconds(rtt))
        logger.info(f"Earth policy {policy.body['policy_id']} sent, propagation RTT "
                    f"{as_seconds(rtt):.3f} s")

    def handle(self, event: Event) -> None:
        if event.kind != "a2a_deliver":
            raise ValueError(f"Earth twin cannot handle event kind '{event.kind}'")
        self.nonrt_sync(unframe(event.payload["_frames"]), self.engine.now)
