# lunarnet/radio/contact_plan.py
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from simkernel.clock import SimTime
from .topology import LinkConfig, LinkKey, LinkState, link_key

Interval = Tuple[SimTime, SimTime]


@dataclass(frozen=True)
class OcclusionWindow:
    """Half-open [start, end) during which the link is down."""

    link: LinkKey
    start: SimTime
    end: SimTime

    def __post_init__(self):
        object.__setattr__(self, "link", link_key(*self.link))
        if self.start >= self.end:
            raise ValueError(f"Occlusion window on {self.link} must have start < end")

    def covers(self, t: SimTime) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class DegradationWindow:
    """Half-open [start, end) during which the link runs at reduced quality."""

    link: LinkKey
    start: SimTime
    end: SimTime
    quality: float
    bandwidth_bps: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(self, "link", link_key(*self.link))
        if self.start >= self.end:
            raise ValueError(f"Degradation window on {self.link} must have start < end")
        if not 0.0 <= self.quality <= 1.0:
            raise ValueError(f"Degraded quality must be in [0, 1], got {self.quality}")

    def covers(self, t: SimTime) -> bool:
        return self.start <= t < self.end


@dataclass(frozen=True)
class NodeHalt:
    """Scripted crash: every link touching the node is down in [start, end)."""

    node: str
    start: SimTime
    end: SimTime

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError(f"Halt of {self.node} must have start < end")

    def covers(self, t: SimTime) -> bool:
        return self.start <= t < self.end


def _check_sorted_disjoint(windows: Sequence, what: str) -> None:
    for prev, cur in zip(windows, windows[1:]):
        if cur.start < prev.end:
            raise ValueError(f"{what} windows overlap or are unsorted: {prev} / {cur}")


def _merge(intervals: Iterable[Interval]) -> List[Interval]:
    merged: List[Interval] = []
    for start, end in sorted(intervals):
        if merged and start <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], end))
        else:
            merged.append((start, end))
    return merged


@dataclass
class ContactPlan:
    """Baseline link states plus scripted occlusions, degradations and halts.

    Everything here is a pure function of (plan, t).
    """

    links: Dict[LinkKey, LinkConfig]
    windows: Dict[LinkKey, List[OcclusionWindow]] = field(default_factory=dict)
    degradations: Dict[LinkKey, List[DegradationWindow]] = field(default_factory=dict)
    halts: List[NodeHalt] = field(default_factory=list)

    def __post_init__(self):
        for key, windows in list(self.windows.items()):
            self._require_link(key)
            windows.sort(key=lambda w: w.start)
            _check_sorted_disjoint(windows, f"Occlusion {key}")
        for key, windows in list(self.degradations.items()):
            self._require_link(key)
            windows.sort(key=lambda w: w.start)
            _check_sorted_disjoint(windows, f"Degradation {key}")
        self.halts.sort(key=lambda h: (h.start, h.node))

    @classmethod
    def build(cls, links: Iterable[LinkConfig],
              occlusions: Iterable[OcclusionWindow] = (),
              degradations: Iterable[DegradationWindow] = (),
              halts: Iterable[NodeHalt] = ()) -> "ContactPlan":
        by_key = {cfg.key: cfg for cfg in links}
        windows: Dict[LinkKey, List[OcclusionWindow]] = {}
        for w in occlusions:
            windows.setdefault(w.link, []).append(w)
        degraded: Dict[LinkKey, List[DegradationWindow]] = {}
        for d in degradations:
            degraded.setdefault(d.link, []).append(d)
        return cls(links=by_key, windows=windows, degradations=degraded, halts=list(halts))

    @classmethod
    def from_contacts(cls, links: Iterable[LinkConfig],
                      contacts: Dict[LinkKey, Sequence[Interval]],
                      horizon: SimTime) -> "ContactPlan":
        """Plan from up-windows: every gap inside [0, horizon) becomes an occlusion.

        Links without an entry in ``contacts`` are never up.
        """
        links = list(links)
        occlusions: List[OcclusionWindow] = []
        for cfg in links:
            cursor = 0
            for start, end in _merge(contacts.get(cfg.key, ())):
                if start > cursor:
                    occlusions.append(OcclusionWindow(cfg.key, cursor, start))
                cursor = max(cursor, end)
            if cursor < horizon:
                occlusions.append(OcclusionWindow(cfg.key, cursor, horizon))
        return cls.build(links, occlusions)

    def _require_link(self, key: LinkKey) -> LinkConfig:
        if key not in self.links:
            raise KeyError(f"Unknown link: {key}")
        return self.links[key]

    def config(self, a: str, b: str) -> LinkConfig:
        return self._require_link(link_key(a, b))

    def is_halted(self, node: str, t: SimTime) -> bool:
        return any(h.node == node and h.covers(t) for h in self.halts)

    def state_at(self, a: str, b: str, t: SimTime) -> LinkState:
        key = link_key(a, b)
        cfg = self._require_link(key)
        state = cfg.baseline
        for d in self.degradations.get(key, ()):
            if d.covers(t):
                state = replace(state, quality=d.quality,
                                bandwidth_bps=d.bandwidth_bps or state.bandwidth_bps)
                break
        occluded = any(w.covers(t) for w in self.windows.get(key, ()))
        if occluded or self.is_halted(key[0], t) or self.is_halted(key[1], t):
            return replace(state, up=False, quality=0.0)
        return state

    def down_intervals(self, a: str, b: str) -> List[Interval]:
        key = link_key(a, b)
        self._require_link(key)
        spans = [(w.start, w.end) for w in self.windows.get(key, ())]
        spans += [(h.start, h.end) for h in self.halts if h.node in key]
        if not self.links[key].baseline.up:
            return [(0, 2**62)]
        return _merge(spans)

    def up_intervals(self, a: str, b: str, horizon: SimTime,
                     since: SimTime = 0) -> List[Interval]:
        """Half-open up intervals of the link clipped to [since, horizon)."""
        result: List[Interval] = []
        cursor = since
        for start, end in self.down_intervals(a, b):
            if end <= cursor:
                continue
            if start >= horizon:
                break
            if start > cursor:
                result.append((cursor, start))
            cursor = max(cursor, end)
        if cursor < horizon:
            result.append((cursor, horizon))
        return result

    def contact_end(self, a: str, b: str, t: SimTime) -> Optional[SimTime]:
        """When the contact open at t closes; None if it never closes."""
        for start, end in self.down_intervals(a, b):
            if end <= t:
                continue
            if start <= t:
                return t  # already down
            return start
        return None

    def contact_starts(self, a: str, b: str) -> List[SimTime]:
        """Times at which the link comes back up after a down span."""
        return [end for _, end in self.down_intervals(a, b)]

    def neighbors(self, node: str) -> List[str]:
        return sorted({b if a == node else a for a, b in self.links if node in (a, b)})
