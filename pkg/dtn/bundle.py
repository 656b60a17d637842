# lunarnet/dtn/bundle.py
from dataclasses import dataclass
from typing import Dict

from radio.topology import TrafficClass
from simkernel.clock import SimTime, seconds

Priority = TrafficClass

BUNDLE_HEADER_BYTES = 32

DEFAULT_TTLS: Dict[Priority, SimTime] = {
    Priority.EMERGENCY: seconds(3600),
    Priority.OPERATIONAL: seconds(6 * 3600),
    Priority.BULK: seconds(24 * 3600),
}


@dataclass(frozen=True)
class Bundle:
    id: int
    src: str
    dst: str
    priority: Priority
    created_at: SimTime
    ttl: SimTime
    custody: bool
    payload: bytes

    def __post_init__(self):
        if not 0 <= self.id < 2**64:
            raise ValueError(f"Bundle id must be a 64-bit unsigned integer, got {self.id}")
        if self.ttl <= 0:
            raise ValueError(f"Bundle TTL must be positive, got {self.ttl}")

    @property
    def expires_at(self) -> SimTime:
        return self.created_at + self.ttl

    def is_expired(self, now: SimTime) -> bool:
        return now >= self.expires_at

    @property
    def size_bytes(self) -> int:
        return len(self.payload) + BUNDLE_HEADER_BYTES

    @property
    def order_key(self):
        """Dequeue order: priority class, then age, then id."""
        return (self.priority.rank, self.created_at, self.id)
