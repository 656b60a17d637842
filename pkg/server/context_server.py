# lunarnet/server/context_server.py
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Tuple

from a2a.codec import encode
from a2a.messages import MessageKind, SemanticMessage
from capabilities.capsets import CapabilitySet
from capabilities.locomotion import NoPath
from dtn.routing import earliest_arrival
from radio.model import RadioModel, UnknownLink
from radio.topology import TrafficClass
from simkernel.clock import SimTime, seconds
from simkernel.engine import Component, Engine, Event
from .broker import DEFAULT_CAPACITY, SemanticBroker, SlotOverflow
from .protocol import INVALID_PARAMS, CapabilityDispatcher, CapabilityRequest

logger = logging.getLogger(__name__)

QUERY_BYTES = 256


class UnknownCapability(KeyError):
    pass


class Unreachable(RuntimeError):
    pass


@dataclass(frozen=True)
class Topic:
    """A context stream: a capability call re-evaluated every ``period``."""

    name: str
    capability: str
    arguments: Dict[str, Any] = field(default_factory=dict)
    period: SimTime = seconds(10)


@dataclass
class Subscription:
    subscriber: str
    topic: str
    min_interval: SimTime = 0
    mode: str = "PUSH"
    last_push: Optional[SimTime] = None


@dataclass(frozen=True)
class QueryResult:
    result: Dict[str, Any]
    issued_at: SimTime
    latency: SimTime
    channel: str

    @property
    def ready_at(self) -> SimTime:
        return self.issued_at + self.latency


def context_update(server: str, seq: int, topic: str, value: Dict[str, Any],
                   stamp: SimTime) -> SemanticMessage:
    """Topic update wrapped as a message so it can wait in a broker slot."""
    return SemanticMessage(kind=MessageKind.COORDINATION, sender=server, seq=seq,
                           confidence=1.0, body={"action": "context_update", "target": topic,
                                                 "value": value, "stamp": stamp})


class ContextServer(Component):
    """Capability endpoint and semantic broker hosted on one node."""

    def __init__(self, engine: Engine, radio: RadioModel, node: str,
                 capabilities: CapabilitySet, topics: Iterable[Topic] = (),
                 broker_capacity: int = DEFAULT_CAPACITY, horizon: Optional[SimTime] = None):
        super().__init__(f"mcp:{node}")
        self.engine = engine
        self.radio = radio
        self.node = node
        self.capabilities = capabilities
        self.dispatcher = CapabilityDispatcher(capabilities)
        self.topics: Dict[str, Topic] = {}
        for topic in topics:
            if not capabilities.has(topic.capability):
                raise ValueError(f"Topic '{topic.name}' uses unknown capability "
                                 f"'{topic.capability}' on {node}")
            self.topics[topic.name] = topic
        self.subscriptions: Dict[Tuple[str, str], Subscription] = {}
        self.broker = SemanticBroker(broker_capacity)
        self.horizon = horizon
        self._memo: Dict[Tuple[bytes, SimTime], Dict[str, Any]] = {}
        self._seq = 0

    def start(self) -> None:
        for name in sorted(self.topics):
            self.engine.schedule(self.engine.now, self.component_id, "publish", {"topic": name})

    # capability calls

    def call(self, capability: str, arguments: Dict[str, Any]) -> Dict[str, Any]:
        """Evaluate now; results are memoized per (request, virtual time)."""
        if not self.capabilities.has(capability):
            raise UnknownCapability(f"{self.node} offers no capability '{capability}'")
        now = self.engine.now
        request = CapabilityRequest.call(capability, arguments)
        key = (request.encode(), now)
        if key in self._memo:
            return self._memo[key]
        response = self.dispatcher.process(request, now)
        if not response.ok:
            message = response.error["message"]
            if message.startswith("NoPath"):
                raise NoPath(message)
            if message.startswith("UnknownLink"):
                raise UnknownLink(message)
            if response.error["code"] == INVALID_PARAMS:
                raise ValueError(message)
            raise RuntimeError(message)
        self._memo = {k: v for k, v in self._memo.items() if k[1] == now}
        self._memo[key] = response.result
        return response.result

    def route_delay(self, a: str, b: str) -> Optional[SimTime]:
        """One-way propagation delay over the live route, or None."""
        path = self.radio.live_route(a, b, self.engine.now)
        if path is None:
            return None
        return sum(self.radio.plan.config(u, v).baseline.one_way_delay
                   for u, v in zip(path, path[1:]))

    def query(self, requester: str, capability: str, arguments: Dict[str, Any],
              timeout: Optional[SimTime] = None) -> QueryResult:
        now = self.engine.now
        if requester == self.node:
            latency, channel = 0, "local"
        else:
            delay = self.route_delay(requester, self.node)
            if delay is not None:
                latency, channel = 2 * delay, "live"
            else:
                horizon = self.horizon if self.horizon is not None else now + seconds(86400)
                route = earliest_arrival(self.radio.plan, requester, self.node, now,
                                         QUERY_BYTES, horizon)
                if route is None:
                    raise Unreachable(f"No route from {requester} to {self.node}")
                latency, channel = 2 * (route.arrival - now), "dtn"
            if timeout is not None and latency > timeout:
                raise Unreachable(f"{self.node} answers {requester} in {latency} us, "
                                  f"beyond timeout {timeout}")
        result = self.call(capability, arguments)
        self.engine.record("mcp_query", self.component_id, server=self.node, requester=requester,
                           capability=capability, channel=channel, latency=latency)
        return QueryResult(result, now, latency, channel)

    # subscriptions

    def topic(self, name: str) -> Topic:
        if name not in self.topics:
            raise KeyError(f"Unknown topic '{name}' on {self.node}")
        return self.topics[name]

    def subscribe(self, subscriber: str, topic: str, min_interval: SimTime = 0) -> Subscription:
        """Create or replace the (subscriber, topic) subscription."""
        self.topic(topic)
        sub = Subscription(subscriber, topic, min_interval)
        self.subscriptions[(subscriber, topic)] = sub
        self.engine.record("mcp_subscribed", self.component_id, server=self.node,
                           subscriber=subscriber, topic=topic)
        return sub

    def unsubscribe(self, subscriber: str, topic: str) -> None:
        self.subscriptions.pop((subscriber, topic), None)

    def publish(self, topic: str, update: Optional[Dict[str, Any]] = None) -> int:
        """Push the topic value to subscribers; returns how many were reached directly."""
        spec = self.topic(topic)
        now = self.engine.now
        value = update if update is not None else self.call(spec.capability, spec.arguments)
        notified = 0
        for key in sorted(k for k in self.subscriptions if k[1] == topic):
            sub = self.subscriptions[key]
            if sub.last_push is not None and now - sub.last_push < sub.min_interval:
                self.engine.record("mcp_push_suppressed", self.component_id, server=self.node,
                                   subscriber=sub.subscriber, topic=topic)
                continue
            sub.last_push = now
            delay = self.route_delay(self.node, sub.subscriber)
            if delay is None:
                self._seq += 1
                message = context_update(self.node, self._seq, topic, value, now)
                self.broker_put(sub.subscriber, encode(message), TrafficClass.OPERATIONAL)
                continue
            self.engine.schedule(now + delay, sub.subscriber, "mcp_push",
                                 {"server": self.node, "topic": topic, "stamp": now,
                                  "_value": value})
            self.engine.record("mcp_pushed", self.component_id, server=self.node,
                               subscriber=sub.subscriber, topic=topic, arrival=now + delay)
            notified += 1
        return notified

    # brokering

    def broker_put(self, recipient: str, data: bytes, traffic_class: TrafficClass) -> bool:
        now = self.engine.now
        try:
            dropped = self.broker.put(recipient, data, traffic_class, now)
        except SlotOverflow as exc:
            self.engine.record("broker_overflow", self.component_id, server=self.node,
                               recipient=recipient, error="SlotOverflow", rejected=True,
                               reason=str(exc))
            return False
        if dropped is not None:
            self.engine.record("broker_overflow", self.component_id, server=self.node,
                               recipient=recipient, error="SlotOverflow", rejected=False,
                               dropped_class=dropped.traffic_class.value,
                               dropped_put_at=dropped.put_at)
        self.engine.record("broker_put", self.component_id, server=self.node,
                           recipient=recipient, traffic_class=traffic_class.value,
                           size=len(data))
        return True

    def broker_fetch(self, recipient: str, requester: str) -> List[bytes]:
        entries = self.broker.fetch(recipient, requester)
        if entries:
            self.engine.record("broker_fetched", self.component_id, server=self.node,
                               recipient=recipient, count=len(entries))
        return [e.data for e in entries]

    def handle(self, event: Event) -> None:
        if event.kind != "publish":
            raise ValueError(f"Context server cannot handle event kind '{event.kind}'")
        topic = self.topic(event.payload["topic"])
        self.publish(topic.name)
        if self.horizon is None or event.at + topic.period <= self.horizon:
            self.engine.schedule(event.at + topic.period, self.component_id, "publish",
                                 {"topic": topic.name})


def describe_capabilities(capabilities: CapabilitySet) -> str:
    """Markdown reference of every capability schema."""
    lines: List[str] = []
    for name in capabilities.names():
        cap = capabilities.get(name)
        lines += [f"### `{name}`", "", cap.description, ""]
        for title, schema in (("Request", cap.request), ("Response", cap.response)):
            lines += [f"{title}:", "", "| field | type | required | meaning |",
                      "|---|---|---|---|", *schema.describe(), ""]
    return "\n".join(lines)

