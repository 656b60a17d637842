# lunarnet/radio/topology.py
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Tuple

from simkernel.clock import SimTime

DEFAULT_MTU = 65_536

LinkKey = Tuple[str, str]


class Tier(Enum):
    """Control tier a node sits in."""

    ROVER = "ROVER"
    RELAY_HUB = "RELAY_HUB"
    BASE = "BASE"
    EARTH = "EARTH"
    SUIT = "SUIT"  # sensor-only node, never a network peer


class TrafficClass(Enum):
    EMERGENCY = "EMERGENCY"
    OPERATIONAL = "OPERATIONAL"
    BULK = "BULK"

    @property
    def rank(self) -> int:
        """0 is served first."""
        return _CLASS_RANK[self]


_CLASS_RANK = {TrafficClass.EMERGENCY: 0, TrafficClass.OPERATIONAL: 1, TrafficClass.BULK: 2}


@dataclass(frozen=True)
class NodeId:
    name: str
    tier: Tier

    def __post_init__(self):
        if not self.name:
            raise ValueError("Node name must be non-empty")
        if isinstance(self.tier, str):
            object.__setattr__(self, "tier", Tier(self.tier))


def link_key(a: str, b: str) -> LinkKey:
    """Undirected link identity: endpoint names in sorted order."""
    if a == b:
        raise ValueError(f"Link endpoints must differ, got '{a}' twice")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class LinkState:
    up: bool
    bandwidth_bps: int
    one_way_delay: SimTime
    quality: float

    def __post_init__(self):
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"Link quality must be in [0, 1], got {self.quality}")
        if self.bandwidth_bps <= 0:
            raise ValueError(f"Link bandwidth must be positive, got {self.bandwidth_bps}")
        if self.one_way_delay < 0:
            raise ValueError(f"Link delay must be non-negative, got {self.one_way_delay}")


@dataclass(frozen=True)
class LinkConfig:
    """Baseline state of one link plus its transport limits.

    Links with an EARTH endpoint draw their one-way delay per transmission
    from [delay_min, baseline.one_way_delay].
    """

    a: str
    b: str
    baseline: LinkState
    mtu: int = DEFAULT_MTU
    delay_min: Optional[SimTime] = None

    def __post_init__(self):
        if self.mtu <= 0:
            raise ValueError(f"MTU must be positive, got {self.mtu}")
        if self.delay_min is not None and self.delay_min > self.baseline.one_way_delay:
            raise ValueError(
                f"delay_min {self.delay_min} exceeds one_way_delay {self.baseline.one_way_delay}"
            )

    @property
    def key(self) -> LinkKey:
        return link_key(self.a, self.b)

    @property
    def min_delay(self) -> SimTime:
        """Lower bound of the one-way delay of any transmission on this link."""
        return self.delay_min if self.delay_min is not None else self.baseline.one_way_delay
