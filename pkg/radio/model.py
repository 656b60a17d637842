# lunarnet/radio/model.py
import logging
import math
from dataclasses import dataclass, replace
from typing import Dict, Iterable, List, Optional, Tuple

import networkx as nx
import numpy as np

from simkernel.clock import MICROS_PER_SECOND, SimTime, seconds
from .contact_plan import ContactPlan
from .topology import LinkConfig, LinkKey, LinkState, NodeId, Tier, TrafficClass, link_key

logger = logging.getLogger(__name__)

EARTH_DELAY_RANGE = (seconds(0.75), seconds(1.0))
BEAM_BONUS = 1.2


class UnknownLink(KeyError):
    pass


class LinkDown(RuntimeError):
    pass


class PayloadExceedsMtu(ValueError):
    pass


@dataclass(frozen=True)
class TxSlot:
    """Outcome of one serialized transmission."""

    src: str
    dst: str
    size_bytes: int
    start: SimTime
    tx_end: SimTime
    arrival: SimTime
    delay: SimTime
    traffic_class: Optional[TrafficClass] = None


class RadioModel:
    """Time-varying lunar link model owned by one engine.

    Capacity on a link is serialized. Without a spectrum policy all traffic
    shares one FIFO; with one, each class runs its own queue at its share of
    the link rate and may borrow the shares of classes idle at send start.
    """

    def __init__(self, nodes: Iterable[NodeId], plan: ContactPlan,
                 rng: Optional[np.random.Generator] = None,
                 noise_amplitude: float = 0.0, ci_rate_per_s: float = 0.002):
        self.nodes: Dict[str, NodeId] = {n.name: n for n in nodes}
        if len(self.nodes) == 0:
            raise ValueError("Radio model needs at least one node")
        self.plan = plan
        self.rng = rng if rng is not None else np.random.default_rng(0)
        self.noise_amplitude = noise_amplitude
        self.ci_rate_per_s = ci_rate_per_s
        self.graph = nx.Graph()
        self.graph.add_nodes_from(sorted(self.nodes))
        for key, cfg in sorted(plan.links.items()):
            for end in key:
                if end not in self.nodes:
                    raise ValueError(f"Link {key} references unknown node '{end}'")
            if self.is_earth_link(key):
                self._check_earth_delay(cfg)
                if cfg.delay_min is None:
                    plan.links[key] = cfg = replace(cfg, delay_min=EARTH_DELAY_RANGE[0])
            elif cfg.delay_min is not None:
                raise ValueError(f"Link {key} has delay_min but no EARTH endpoint")
            self.graph.add_edge(*key, delay=cfg.baseline.one_way_delay)
        self._busy: Dict[LinkKey, Dict[Optional[TrafficClass], SimTime]] = {}
        self._shares: Dict[LinkKey, Dict[TrafficClass, float]] = {}
        self._steered: Dict[str, LinkKey] = {}

    def _check_earth_delay(self, cfg: LinkConfig) -> None:
        low = cfg.delay_min if cfg.delay_min is not None else EARTH_DELAY_RANGE[0]
        high = cfg.baseline.one_way_delay
        if low < EARTH_DELAY_RANGE[0] or high > EARTH_DELAY_RANGE[1] or high < low:
            raise ValueError(f"Earth link {cfg.key} delay must lie in [0.75 s, 1.0 s]")

    def tier(self, node: str) -> Tier:
        return self.nodes[node].tier

    def is_earth_link(self, key: LinkKey) -> bool:
        return any(self.nodes[end].tier == Tier.EARTH for end in key)

    def _key(self, a: str, b: str) -> LinkKey:
        try:
            key = link_key(a, b)
        except ValueError as exc:
            raise UnknownLink(f"{a}-{b}") from exc
        if key not in self.plan.links:
            raise UnknownLink(f"{a}-{b}")
        return key

    def has_link(self, a: str, b: str) -> bool:
        return a != b and link_key(a, b) in self.plan.links

    def neighbors(self, node: str) -> List[str]:
        return self.plan.neighbors(node)

    def link_at(self, a: str, b: str, t: SimTime) -> LinkState:
        self._key(a, b)
        return self.plan.state_at(a, b, t)

    def effective_bandwidth(self, a: str, b: str, t: SimTime) -> int:
        key = self._key(a, b)
        bw = self.plan.state_at(a, b, t).bandwidth_bps
        if key in self._steered.values():
            bw = int(bw * BEAM_BONUS)
        return bw

    # spectrum policy and beam hooks driven by the RIC

    def set_class_shares(self, a: str, b: str, shares: Dict[TrafficClass, float]) -> None:
        key = self._key(a, b)
        total = sum(shares.values())
        if any(v < 0 for v in shares.values()) or not math.isclose(total, 1.0, abs_tol=1e-9):
            raise ValueError(f"Class shares on {key} must be non-negative and sum to 1, got {shares}")
        self._shares[key] = {c: float(shares.get(c, 0.0)) for c in TrafficClass}

    def class_shares(self, a: str, b: str) -> Optional[Dict[TrafficClass, float]]:
        return self._shares.get(self._key(a, b))

    def steer(self, asset: str, a: str, b: str) -> None:
        self._steered[asset] = self._key(a, b)

    def steered_link(self, asset: str) -> Optional[LinkKey]:
        return self._steered.get(asset)

    # transmission

    def _max_delay(self, key: LinkKey) -> SimTime:
        return self.plan.links[key].baseline.one_way_delay

    def _draw_delay(self, key: LinkKey) -> SimTime:
        cfg = self.plan.links[key]
        if not self.is_earth_link(key):
            return cfg.baseline.one_way_delay
        return int(self.rng.integers(cfg.min_delay, cfg.baseline.one_way_delay, endpoint=True))

    def _schedule(self, key: LinkKey, size_bytes: int, t: SimTime,
                  traffic_class: Optional[TrafficClass], bandwidth: int
                  ) -> Tuple[SimTime, SimTime, Optional[TrafficClass], List[TrafficClass]]:
        busy = self._busy.setdefault(key, {})
        bits = size_bytes * 8 * MICROS_PER_SECOND
        shares = self._shares.get(key)
        if shares is None:
            start = max([t, *busy.values()])
            return start, start + -(-bits // bandwidth), None, []
        cls = traffic_class or TrafficClass.OPERATIONAL
        start = max(t, busy.get(cls, 0), busy.get(None, 0))
        while True:
            lenders = [k for k in TrafficClass if k != cls and busy.get(k, 0) <= start]
            share = shares[cls] + sum(shares[k] for k in lenders)
            if share > 0:
                break
            start = min(busy[k] for k in TrafficClass if busy.get(k, 0) > start)
        return start, start + math.ceil(bits / (bandwidth * share)), cls, lenders

    def estimate(self, src: str, dst: str, size_bytes: int, t: SimTime,
                 traffic_class: Optional[TrafficClass] = None) -> TxSlot:
        """Slot a transmission would get, using the worst-case delay; no state change."""
        key = self._check_send(src, dst, size_bytes, t)
        start, end, cls, _ = self._schedule(key, size_bytes, t, traffic_class,
                                            self.effective_bandwidth(src, dst, t))
        delay = self._max_delay(key)
        return TxSlot(src, dst, size_bytes, start, end, end + delay, delay, cls)

    def transmit(self, src: str, dst: str, size_bytes: int, t: SimTime,
                 traffic_class: Optional[TrafficClass] = None) -> TxSlot:
        """Commit a transmission; arrival = serialization end + one-way delay."""
        key = self._check_send(src, dst, size_bytes, t)
        start, end, cls, lenders = self._schedule(key, size_bytes, t, traffic_class,
                                                  self.effective_bandwidth(src, dst, t))
        busy = self._busy[key]
        busy[cls] = end
        for k in lenders:
            busy[k] = end
        delay = self._draw_delay(key)
        logger.debug(f"tx {src}->{dst} {size_bytes}B start={start} arrival={end + delay}")
        return TxSlot(src, dst, size_bytes, start, end, end + delay, delay, cls)

    def _check_send(self, src: str, dst: str, size_bytes: int, t: SimTime) -> LinkKey:
        key = self._key(src, dst)
        if size_bytes <= 0:
            raise ValueError(f"Payload size must be positive, got {size_bytes}")
        if size_bytes > self.plan.links[key].mtu:
            raise PayloadExceedsMtu(
                f"{size_bytes} bytes exceeds MTU {self.plan.links[key].mtu} on {key}"
            )
        if not self.plan.state_at(src, dst, t).up:
            raise LinkDown(f"Link {src}-{dst} is down at t={t}")
        return key

    def round_trip(self, a: str, b: str) -> SimTime:
        """Propagation round trip for a zero-length payload."""
        key = self._key(a, b)
        return self._draw_delay(key) + self._draw_delay(key)

    # prediction

    def predict_quality(self, a: str, b: str, t_future: SimTime,
                        now: SimTime) -> Tuple[float, float]:
        """Plan-derived quality estimate with noise; interval widens with horizon."""
        self._key(a, b)
        if t_future < now:
            raise ValueError(f"Prediction time {t_future} lies before now {now}")
        truth = self.plan.state_at(a, b, t_future).quality
        estimate = truth
        if self.noise_amplitude > 0:
            noise = float(self.rng.uniform(-self.noise_amplitude, self.noise_amplitude))
            estimate = min(1.0, max(0.0, truth + noise))
        width = self.ci_rate_per_s * (t_future - now) / MICROS_PER_SECOND
        return estimate, width

    # routing over live links

    def live_route(self, src: str, dst: str, t: SimTime) -> Optional[List[str]]:
        """Lowest-delay path over links up at t, or None."""
        if src == dst:
            return [src]

        def edge_up(u: str, v: str) -> bool:
            return self.plan.state_at(u, v, t).up

        view = nx.subgraph_view(self.graph, filter_edge=edge_up)
        try:
            return nx.shortest_path(view, src, dst, weight="delay")
        except (nx.NetworkXNoPath, nx.NodeNotFound):
            return None

    def best_link(self, node: str, t: SimTime,
                  exclude_tiers: Iterable[Tier] = (Tier.EARTH, Tier.SUIT)
                  ) -> Optional[Tuple[str, LinkState]]:
        """Neighbor with the best link at t: up first, then quality, bandwidth, name."""
        skip = set(exclude_tiers)
        best = None
        for peer in self.neighbors(node):
            if self.nodes[peer].tier in skip:
                continue
            state = self.plan.state_at(node, peer, t)
            rank = (state.up, state.quality, state.bandwidth_bps)
            if best is None or rank > best[0]:
                best = (rank, peer, state)
        if best is None:
            return None
        return best[1], best[2]
