# lunarnet/dtn/store.py
from typing import Dict, List, Set

from simkernel.clock import SimTime
from .bundle import Bundle


class Expired(ValueError):
    pass


class DuplicateBundle(ValueError):
    """Second copy of a bundle id; the store is left unchanged."""


class BundleStore:
    """Bundles held at one node."""

    def __init__(self, node: str):
        self.node = node
        self.bundles: Dict[int, Bundle] = {}
        self.in_flight: Set[int] = set()
        self._seen: Set[int] = set()

    def enqueue(self, bundle: Bundle, now: SimTime) -> None:
        if bundle.is_expired(now):
            raise Expired(f"Bundle {bundle.id} expired at {bundle.expires_at}, now {now}")
        if bundle.id in self._seen:
            raise DuplicateBundle(f"Bundle {bundle.id} already seen at {self.node}")
        self._seen.add(bundle.id)
        self.bundles[bundle.id] = bundle

    def release(self, bundle_id: int) -> Bundle:
        self.in_flight.discard(bundle_id)
        return self.bundles.pop(bundle_id)

    def __contains__(self, bundle_id: int) -> bool:
        return bundle_id in self.bundles

    def __len__(self) -> int:
        return len(self.bundles)

    def queued(self) -> List[Bundle]:
        """Bundles awaiting forwarding, in dequeue order."""
        waiting = [b for i, b in self.bundles.items() if i not in self.in_flight]
        return sorted(waiting, key=lambda b: b.order_key)
