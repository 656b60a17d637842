# lunarnet/agent/state.py
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional

from radio.regime import ConnectivityRegime
from radio.topology import Tier
from simkernel.clock import SimTime, as_seconds
from .policies import EWMA_ALPHA, Decision, DisseminationMode, ewma_update


class UnknownPeer(KeyError):
    pass


@dataclass(frozen=True)
class CacheEntry:
    value: Any
    stamp: SimTime

    def staleness(self, now: SimTime) -> SimTime:
        return now - self.stamp


class PeerAvailability:
    """EWMA estimate of how often each peer is reachable."""

    def __init__(self, peers: Iterable[str], alpha: float = EWMA_ALPHA, initial: float = 0.5):
        if not 0.0 < alpha <= 1.0:
            raise ValueError(f"Smoothing factor must be in (0, 1], got {alpha}")
        self.alpha = alpha
        self.estimates: Dict[str, float] = {p: initial for p in peers}

    def update(self, peer: str, observed_up: bool) -> float:
        if peer not in self.estimates:
            raise UnknownPeer(peer)
        p = ewma_update(self.estimates[peer], observed_up, self.alpha)
        self.estimates[peer] = min(1.0, max(0.0, p))
        return self.estimates[peer]

    def __getitem__(self, peer: str) -> float:
        if peer not in self.estimates:
            raise UnknownPeer(peer)
        return self.estimates[peer]


@dataclass
class PendingDecision:
    decision: Decision
    deferred_at: SimTime


@dataclass
class AgentState:
    role: Tier
    base_confidence: float = 0.9
    regime: Optional[ConnectivityRegime] = None
    mode: Optional[DisseminationMode] = None
    horizon_s: float = 600.0
    confidence: float = 0.0
    cache: Dict[str, CacheEntry] = field(default_factory=dict)
    defer_queue: List[PendingDecision] = field(default_factory=list)

    def remember(self, topic: str, value: Any, stamp: SimTime) -> bool:
        """Cache a value unless a fresher one is already held."""
        current = self.cache.get(topic)
        if current is not None and current.stamp > stamp:
            return False
        self.cache[topic] = CacheEntry(value, stamp)
        return True

    def staleness(self, topic: str, now: SimTime) -> Optional[SimTime]:
        entry = self.cache.get(topic)
        return None if entry is None else entry.staleness(now)

    def cache_staleness(self, now: SimTime) -> Dict[str, float]:
        """Seconds since each cached entry was stamped."""
        return {topic: as_seconds(entry.staleness(now)) for topic, entry in sorted(self.cache.items())}
