# lunarnet/agent/messaging.py
import logging
from dataclasses import dataclass
from enum import Enum
from typing import List, Optional

from a2a.codec import decode, encode
from a2a.framing import frame_for_control_channel, reassemble
from a2a.messages import CompressionTier, SemanticMessage
from dtn.network import DtnNetwork
from radio.model import LinkDown, RadioModel
from radio.topology import Tier
from server.context_server import ContextServer
from simkernel.clock import SimTime
from simkernel.engine import Engine
from .policies import DisseminationMode

logger = logging.getLogger(__name__)


class Via(Enum):
    DIRECT = "DIRECT"
    RELAY = "RELAY"
    BROKER = "BROKER"
    DTN = "DTN"


@dataclass(frozen=True)
class SendResult:
    channel: str
    # one-way propagation delay of a direct send
    delay: Optional[SimTime] = None


def unframe(frames: List[bytes]) -> SemanticMessage:
    return decode(reassemble(frames))


class Messenger:
    """A2A transport with fallback: direct link, then shared broker, then DTN.

    Direct sends are single-hop over the RAN control channel, framed to the
    link MTU. In AUTONOMOUS_BULK only bundles are used.
    """

    def __init__(self, engine: Engine, radio: RadioModel, dtn: DtnNetwork,
                 broker: Optional[ContextServer] = None):
        self.engine = engine
        self.radio = radio
        self.dtn = dtn
        self.broker = broker
        self._msg_id = 0

    def send(self, src: str, dst: str, msg: SemanticMessage, tier: CompressionTier,
             mode: DisseminationMode) -> SendResult:
        data = encode(msg, tier)
        result = None
        if mode != DisseminationMode.AUTONOMOUS_BULK:
            delay = self._send_direct(src, dst, msg, data)
            if delay is not None:
                result = SendResult("direct", delay)
            elif self._send_broker(src, dst, msg, data):
                result = SendResult("broker")
        if result is None:
            self.dtn.create_bundle(src, dst, msg.traffic_class, data)
            result = SendResult("dtn")
        self.engine.record("a2a_sent", src, src=src, dst=dst, msg_kind=msg.kind.value,
                           sender=msg.sender, msg_seq=msg.seq, tier=tier.value, size=len(data),
                           channel=result.channel, mode=mode.value)
        return result

    def _send_direct(self, src: str, dst: str, msg: SemanticMessage,
                     data: bytes) -> Optional[SimTime]:
        now = self.engine.now
        if not self.radio.has_link(src, dst) or not self.radio.link_at(src, dst, now).up:
            return None
        self._msg_id += 1
        frames = frame_for_control_channel(data, self.radio.plan.config(src, dst).mtu,
                                           self._msg_id)
        try:
            slots = [self.radio.transmit(src, dst, len(frame), now, msg.traffic_class)
                     for frame in frames]
        except LinkDown:
            return None
        self.engine.schedule(slots[-1].arrival, dst, "a2a_deliver",
                             {"src": src, "frames": len(frames), "_frames": frames})
        return slots[-1].delay

    def _send_broker(self, src: str, dst: str, msg: SemanticMessage, data: bytes) -> bool:
        if self.broker is None or dst == self.broker.node:
            return False
        if self.radio.tier(dst) == Tier.EARTH:
            return False
        if self.broker.route_delay(src, self.broker.node) is None:
            return False
        return self.broker.broker_put(dst, data, msg.traffic_class)

    def broadcast(self, src: str, peers: List[str], msg: SemanticMessage,
                  tier: CompressionTier, mode: DisseminationMode) -> List[str]:
        """Send to every listed peer whose link is up now; returns who was reached."""
        now = self.engine.now
        reached = []
        for peer in peers:
            if self.radio.link_at(src, peer, now).up:
                self.send(src, peer, msg, tier, mode)
                reached.append(peer)
        return reached
