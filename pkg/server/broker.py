# lunarnet/server/broker.py
from collections import deque
from dataclasses import dataclass, field
from typing import Deque, Dict, List, Optional

from radio.topology import TrafficClass
from simkernel.clock import SimTime

DEFAULT_CAPACITY = 256


class SlotOverflow(RuntimeError):
    """A full slot rejected a message outright."""


class BrokerAccessDenied(PermissionError):
    pass


@dataclass(frozen=True)
class BrokerEntry:
    data: bytes
    traffic_class: TrafficClass
    put_at: SimTime


@dataclass
class BrokerSlot:
    recipient: str
    capacity: int = DEFAULT_CAPACITY
    messages: Deque[BrokerEntry] = field(default_factory=deque)

    def __post_init__(self):
        if self.capacity <= 0:
            raise ValueError(f"Slot capacity must be positive, got {self.capacity}")

    def put(self, entry: BrokerEntry) -> Optional[BrokerEntry]:
        """Append; when full, evict and return the oldest non-EMERGENCY entry.

        A full slot holding only EMERGENCY entries evicts its oldest one for
        another EMERGENCY message and refuses anything else.
        """
        dropped = None
        if len(self.messages) >= self.capacity:
            victim = next((e for e in self.messages
                           if e.traffic_class != TrafficClass.EMERGENCY), None)
            if victim is None:
                if entry.traffic_class != TrafficClass.EMERGENCY:
                    raise SlotOverflow(f"Slot of {self.recipient} is full of EMERGENCY messages")
                victim = self.messages[0]
            self.messages.remove(victim)
            dropped = victim
        self.messages.append(entry)
        return dropped

    def drain(self) -> List[BrokerEntry]:
        entries = list(self.messages)
        self.messages.clear()
        return entries


class SemanticBroker:
    """Per-recipient FIFO slots held by a shared context server."""

    def __init__(self, capacity: int = DEFAULT_CAPACITY):
        self.capacity = capacity
        self.slots: Dict[str, BrokerSlot] = {}

    def slot(self, recipient: str) -> BrokerSlot:
        if recipient not in self.slots:
            self.slots[recipient] = BrokerSlot(recipient, self.capacity)
        return self.slots[recipient]

    def put(self, recipient: str, data: bytes, traffic_class: TrafficClass,
            now: SimTime) -> Optional[BrokerEntry]:
        return self.slot(recipient).put(BrokerEntry(bytes(data), traffic_class, now))

    def fetch(self, recipient: str, requester: str) -> List[BrokerEntry]:
        if requester != recipient:
            raise BrokerAccessDenied(f"{requester} cannot drain the slot of {recipient}")
        if recipient not in self.slots:
            return []
        return self.slots[recipient].drain()

    def pending(self, recipient: str) -> int:
        slot = self.slots.get(recipient)
        return len(slot.messages) if slot else 0
