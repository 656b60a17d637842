# lunarnet/dtn/network.py
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from radio.model import LinkDown, PayloadExceedsMtu, RadioModel
from radio.topology import Tier
from simkernel.clock import SimTime
from simkernel.engine import Component, Engine, Event
from .bundle import DEFAULT_TTLS, Bundle, Priority
from .routing import earliest_arrival
from .store import BundleStore, DuplicateBundle, Expired

logger = logging.getLogger(__name__)

DeliveryHandler = Callable[[Bundle, SimTime], None]


class UnknownBundle(KeyError):
    pass


@dataclass(frozen=True)
class Transmission:
    bundle_id: int
    src: str
    dst: str
    start: SimTime
    arrival: SimTime


class DtnNetwork(Component):
    """Store-carry-forward layer over the radio model.

    Routing is earliest-arrival over the contact plan; at each contact
    bundles leave in (priority, created_at, id) order until the first one
    whose serialization would outlast the contact.
    """

    def __init__(self, engine: Engine, radio: RadioModel, horizon: SimTime,
                 ttls: Optional[Dict[Priority, SimTime]] = None,
                 component_id: str = "dtn"):
        super().__init__(component_id)
        self.engine = engine
        self.radio = radio
        self.horizon = horizon
        self.ttls = dict(DEFAULT_TTLS)
        self.ttls.update(ttls or {})
        self.stores: Dict[str, BundleStore] = {n: BundleStore(n) for n in sorted(radio.nodes)}
        self.custodian: Dict[int, str] = {}
        self.delivered: Dict[int, SimTime] = {}
        self._endpoints: Dict[str, DeliveryHandler] = {}
        self._next_id = 1
        self._bundles: Dict[int, Bundle] = {}
        self.hop_delays: Dict[int, List[SimTime]] = {}

    def start(self) -> None:
        """Schedule a contact event at every time a link comes back up."""
        for a, b in sorted(self.radio.plan.links):
            for t in self.radio.plan.contact_starts(a, b):
                if self.engine.now <= t <= self.horizon:
                    self.engine.schedule(t, self.component_id, "contact_start", {"link": [a, b]})

    def register_endpoint(self, node: str, handler: DeliveryHandler) -> None:
        self._endpoints[node] = handler

    def bundle(self, bundle_id: int) -> Bundle:
        if bundle_id not in self._bundles:
            raise UnknownBundle(bundle_id)
        return self._bundles[bundle_id]

    # bundle lifecycle

    def create_bundle(self, src: str, dst: str, priority: Priority, payload: bytes,
                      custody: bool = True, ttl: Optional[SimTime] = None) -> Bundle:
        now = self.engine.now
        bundle = Bundle(id=self._next_id, src=src, dst=dst, priority=priority,
                        created_at=now, ttl=ttl or self.ttls[priority],
                        custody=custody, payload=payload)
        self._next_id += 1
        self._bundles[bundle.id] = bundle
        self.engine.record("bundle_created", self.component_id, bundle=bundle.id, src=src,
                           dst=dst, priority=priority.value, size=bundle.size_bytes,
                           custody=custody, expires_at=bundle.expires_at)
        if bundle.expires_at <= self.horizon:
            self.engine.schedule(bundle.expires_at, self.component_id, "bundle_expiry",
                                 {"bundle": bundle.id})
        if custody:
            self.custodian[bundle.id] = src
        self.enqueue(src, bundle)
        return bundle

    def enqueue(self, node: str, bundle: Bundle) -> None:
        self.stores[node].enqueue(bundle, self.engine.now)
        self._try_forward(node)

    def _try_forward(self, node: str) -> List[Transmission]:
        sent: List[Transmission] = []
        now = self.engine.now
        for peer in self.radio.neighbors(node):
            if self.radio.link_at(node, peer, now).up:
                sent.extend(self.on_contact(node, peer, now))
        return sent

    # forwarding

    def _eligible(self, u: str, v: str, bundle: Bundle, t: SimTime) -> bool:
        if bundle.is_expired(t):
            return False
        if bundle.priority == Priority.BULK and self.radio.tier(v) == Tier.EARTH:
            return False  # waits for episodic sync
        route = earliest_arrival(self.radio.plan, u, bundle.dst, t, bundle.size_bytes,
                                 self.horizon)
        if route is None or route.next_hop != v or route.depart > t:
            return False
        return route.arrival < bundle.expires_at

    def on_contact(self, a: str, b: str, t: SimTime) -> List[Transmission]:
        if not self.radio.link_at(a, b, t).up:
            return []
        contact_end = self.radio.plan.contact_end(a, b, t)
        candidates = []
        for u, v in ((a, b), (b, a)):
            for bundle in self.stores[u].queued():
                if self._eligible(u, v, bundle, t):
                    candidates.append((bundle.order_key, u, v, bundle))
        candidates.sort(key=lambda c: c[0])
        sent: List[Transmission] = []
        for _, u, v, bundle in candidates:
            try:
                slot = self.radio.estimate(u, v, bundle.size_bytes, t, bundle.priority)
            except PayloadExceedsMtu as exc:
                self.engine.record("bundle_oversize", self.component_id, bundle=bundle.id,
                                   reason=str(exc))
                continue
            if contact_end is not None and slot.tx_end > contact_end:
                break  # byte budget of this contact is spent
            sent.append(self._send(u, v, bundle, t))
        return sent

    def _send(self, u: str, v: str, bundle: Bundle, t: SimTime) -> Transmission:
        slot = self.radio.transmit(u, v, bundle.size_bytes, t, bundle.priority)
        self.hop_delays.setdefault(bundle.id, []).append(slot.delay)
        store = self.stores[u]
        if bundle.custody:
            store.in_flight.add(bundle.id)
        else:
            store.release(bundle.id)
        self.engine.schedule(slot.arrival, self.component_id, "bundle_arrival",
                             {"bundle": bundle.id, "src": u, "dst": v})
        self.engine.record("bundle_forwarded", self.component_id, bundle=bundle.id, src=u,
                           dst=v, priority=bundle.priority.value, start=slot.start,
                           arrival=slot.arrival, one_way_delay=slot.delay)
        return Transmission(bundle.id, u, v, slot.start, slot.arrival)

    def custody_transfer(self, bundle_id: int, from_node: str, to_node: str) -> None:
        """Hand custody over; the previous custodian drops its copy."""
        if bundle_id not in self.stores[from_node] or self.custodian.get(bundle_id) != from_node:
            raise UnknownBundle(f"{from_node} holds no custody of bundle {bundle_id}")
        if to_node != self._bundles[bundle_id].dst and bundle_id not in self.stores[to_node]:
            raise UnknownBundle(f"{to_node} has not stored bundle {bundle_id}")
        self.stores[from_node].release(bundle_id)
        self.custodian[bundle_id] = to_node
        self.engine.record("custody_transferred", self.component_id, bundle=bundle_id,
                           src=from_node, dst=to_node)

    def episodic_sync(self, node: str, earth: str, t: SimTime) -> int:
        """Flush BULK bundles bound for Earth, oldest first, within the contact budget."""
        if not self.radio.link_at(node, earth, t).up:
            raise LinkDown(f"Earth link {node}-{earth} is down at t={t}")
        contact_end = self.radio.plan.contact_end(node, earth, t)
        waiting = [b for b in self.stores[node].queued()
                   if b.priority == Priority.BULK and b.dst == earth and not b.is_expired(t)]
        flushed = 0
        for bundle in waiting:
            slot = self.radio.estimate(node, earth, bundle.size_bytes, t, bundle.priority)
            if contact_end is not None and slot.tx_end > contact_end:
                break
            self._send(node, earth, bundle, t)
            flushed += 1
        self.engine.record("episodic_sync", self.component_id, node=node, earth=earth,
                           flushed=flushed, retained=len(waiting) - flushed)
        return flushed

    # events

    def handle(self, event: Event) -> None:
        if event.kind == "contact_start":
            a, b = event.payload["link"]
            # a new contact can change the best route of anything held at either end
            self._try_forward(a)
            self._try_forward(b)
        elif event.kind == "bundle_arrival":
            self._on_arrival(event.payload["bundle"], event.payload["src"], event.payload["dst"])
        elif event.kind == "bundle_expiry":
            self._on_expiry(event.payload["bundle"])
        else:
            raise ValueError(f"DTN cannot handle event kind '{event.kind}'")

    def _on_arrival(self, bundle_id: int, src: str, dst: str) -> None:
        bundle = self._bundles[bundle_id]
        now = self.engine.now
        if bundle.is_expired(now) or bundle_id in self.delivered:
            return
        if self.radio.plan.is_halted(dst, now):
            # receiver is down: the custodian retries at its next contact
            self.stores[src].in_flight.discard(bundle_id)
            self.engine.record("bundle_lost", self.component_id, bundle=bundle_id, src=src, dst=dst)
            return
        if dst == bundle.dst:
            if bundle.custody:
                self.custody_transfer(bundle_id, src, dst)
                del self.custodian[bundle_id]
            self.delivered[bundle_id] = now
            self.engine.record("bundle_delivered", self.component_id, bundle=bundle_id,
                               src=bundle.src, dst=dst, priority=bundle.priority.value,
                               created_at=bundle.created_at, latency=now - bundle.created_at)
            handler = self._endpoints.get(dst)
            if handler is not None:
                handler(bundle, now)
            return
        try:
            self.stores[dst].enqueue(bundle, now)
        except DuplicateBundle:
            self.engine.record("bundle_duplicate", self.component_id, bundle=bundle_id, node=dst)
            if bundle.custody and bundle_id in self.stores[src]:
                self.stores[src].release(bundle_id)
            return
        except Expired:
            return
        if bundle.custody:
            self.custody_transfer(bundle_id, src, dst)
        self._try_forward(dst)

    def _on_expiry(self, bundle_id: int) -> None:
        if bundle_id in self.delivered:
            return
        holders = [n for n, store in self.stores.items() if bundle_id in store]
        for node in holders:
            self.stores[node].release(bundle_id)
        self.custodian.pop(bundle_id, None)
        bundle = self._bundles[bundle_id]
        self.engine.record("bundle_expired", self.component_id, bundle=bundle_id,
                           priority=bundle.priority.value, holders=holders)
