# lunarnet/ric/controller.py
import logging
from typing import Any, Dict, Iterable, List, Optional, Set

from dtn.network import DtnNetwork
from radio.model import RadioModel
from radio.topology import LinkKey, Tier
from simkernel.clock import SimTime, seconds
from simkernel.engine import Component, Engine, Event
from .spectrum import SpectrumPolicy, shares_from_dict, shares_to_dict
from .telemetry import TelemetrySample

logger = logging.getLogger(__name__)

SAMPLE_PERIOD = seconds(1)
RELAY_LOOKAHEAD = seconds(10)
LOAD_CAPACITY = 64


class NoCandidates(LookupError):
    pass


def link_label(key: LinkKey) -> str:
    return f"{key[0]}|{key[1]}"


class RicController(Component):
    """sApp monitors plus the Near-RT control loop for the lunar surface.

    Every tick samples each asset and, when an asset's serving link is down,
    switches it to the relay predicted best ``lookahead`` ahead.
    """

    def __init__(self, engine: Engine, radio: RadioModel, dtn: DtnNetwork,
                 policy: SpectrumPolicy, assets: Iterable[str], base: str, horizon: SimTime,
                 period: SimTime = SAMPLE_PERIOD, lookahead: SimTime = RELAY_LOOKAHEAD):
        super().__init__("ric")
        self.engine = engine
        self.radio = radio
        self.dtn = dtn
        self.policy = policy
        self.assets = sorted(assets)
        self.base = base
        self.horizon = horizon
        self.period = period
        self.lookahead = lookahead
        self.agents: Dict[str, Any] = {}
        self.samples: Dict[str, TelemetrySample] = {}
        self.earth_policy_at: Optional[SimTime] = None
        self._stranded: Set[str] = set()

    def attach_agents(self, agents: Dict[str, Any]) -> None:
        self.agents = agents

    def start(self) -> None:
        for key, shares in self.policy.shares.items():
            self.radio.set_class_shares(*key, shares)
        self._record_policy("policy_initialized")
        self.engine.schedule(self.engine.now, self.component_id, "tick")

    def lunar_links(self) -> List[LinkKey]:
        skip = (Tier.EARTH, Tier.SUIT)
        return [key for key in self.policy.shares
                if not any(self.radio.tier(end) in skip for end in key)]

    # sApp

    def _serving_peer(self, node: str) -> Optional[str]:
        agent = self.agents.get(node)
        if agent is not None and agent.serving is not None:
            return agent.serving
        best = self.radio.best_link(node, self.engine.now)
        return best[0] if best is not None else None

    def sapp_monitor(self, node: str, t: SimTime) -> TelemetrySample:
        peer = self._serving_peer(node)
        quality = self.radio.link_at(node, peer, t).quality if peer is not None else 0.0
        agent = self.agents.get(node)
        mode = agent.state.mode.value if agent is not None and agent.state.mode else "UNKNOWN"
        return TelemetrySample(node=node, t=t, radio_quality=quality,
                               system_load=min(1.0, len(self.dtn.stores[node]) / LOAD_CAPACITY),
                               agent_mode=mode)

    def latest_samples(self) -> Dict[str, Dict[str, Any]]:
        return {node: s.to_dict() for node, s in sorted(self.samples.items())}

    # Near-RT control

    def _relay_target(self, asset: str) -> Optional[str]:
        steered = self.radio.steered_link(asset)
        if steered is not None:
            return steered[1] if steered[0] == asset else steered[0]
        return self.base if self.radio.has_link(asset, self.base) else None

    def _check_relay(self, asset: str) -> None:
        now = self.engine.now
        current = self._relay_target(asset)
        if current is None or self.radio.link_at(asset, current, now).up:
            self._stranded.discard(asset)
            return
        candidates = []
        for peer in self.radio.neighbors(asset):
            if peer == current or self.radio.tier(peer) in (Tier.EARTH, Tier.SUIT):
                continue
            if not self.radio.link_at(asset, peer, now).up:
                continue
            if peer == self.base or (self.radio.has_link(peer, self.base)
                                     and self.radio.link_at(peer, self.base, now).up):
                candidates.append(peer)
        try:
            self.nearrt_relay_switch(asset, candidates)
            self._stranded.discard(asset)
        except NoCandidates:
            if asset not in self._stranded:
                self._stranded.add(asset)
                self.engine.record("relay_unavailable", self.component_id, asset=asset,
                                   serving=current)

    def nearrt_relay_switch(self, asset: str, candidates: List[str]) -> str:
        """Steer the asset onto the candidate predicted best; ties go to the lowest name."""
        if not candidates:
            raise NoCandidates(f"No relay candidates for {asset}")
        now = self.engine.now
        estimates = {c: self.radio.predict_quality(asset, c, now + self.lookahead, now)[0]
                     for c in sorted(candidates)}
        chosen = min(estimates, key=lambda c: (-estimates[c], c))
        previous = self._relay_target(asset)
        self.radio.steer(asset, asset, chosen)
        self.engine.record("relay_switched", self.component_id, asset=asset, relay=chosen,
                           previous=previous, estimate=estimates[chosen])
        logger.info(f"Near-RT RIC switched {asset} from {previous} to relay {chosen}")
        return chosen

    def open_incident(self, incident_id: str, links: Iterable[LinkKey]) -> None:
        incident = self.policy.open_incident(incident_id, links, self.engine.now)
        self.engine.record("incident_opened", self.component_id, incident=incident_id,
                           links=[link_label(k) for k in incident.links])

    def nearrt_reallocate(self, incident_id: str) -> SpectrumPolicy:
        changed = self.policy.reallocate(incident_id)
        for key, shares in changed.items():
            self.radio.set_class_shares(*key, shares)
        self._record_policy("policy_reallocated", incident=incident_id)
        logger.info(f"Near-RT RIC reallocated {len(changed)} links for incident {incident_id}")
        return self.policy

    def close_incident(self, incident_id: Optional[str] = None) -> List[str]:
        closing = [incident_id] if incident_id is not None else sorted(self.policy.incidents)
        for name in closing:
            restored = self.policy.close_incident(name)
            for key, shares in restored.items():
                self.radio.set_class_shares(*key, shares)
            self._record_policy("policy_restored", incident=name)
        return closing

    def apply_earth_policy(self, body: Dict[str, Any]) -> bool:
        """Adopt Earth's long-term shares when they are newer than the last adopted."""
        issued_at = body["issued_at"]
        if self.earth_policy_at is not None and issued_at <= self.earth_policy_at:
            self.engine.record("earth_policy_ignored", self.component_id,
                               policy=body["policy_id"], issued_at=issued_at)
            return False
        self.earth_policy_at = issued_at
        shares = shares_from_dict(body["shares"])
        for key in self.policy.shares:
            self.radio.set_class_shares(*key, self.policy.set(key, shares))
        self._record_policy("policy_applied", policy=body["policy_id"])
        return True

    def _record_policy(self, kind: str, **fields: Any) -> None:
        self.engine.record(kind, self.component_id,
                           shares={link_label(k): shares_to_dict(v)
                                   for k, v in self.policy.shares.items()},
                           floored=[link_label(k) for k in self.policy.shares
                                    if self.policy.floor_applies(k)],
                           floor=self.policy.emergency_floor, **fields)

    def handle(self, event: Event) -> None:
        if event.kind == "tick":
            now = self.engine.now
            for asset in self.assets:
                sample = self.sapp_monitor(asset, now)
                self.samples[asset] = sample
                fields = sample.to_dict()
                del fields["t"]  # equals the record stamp
                self.engine.record("telemetry", self.component_id, **fields)
                self._check_relay(asset)
            if now + self.period <= self.horizon:
                self.engine.schedule(now + self.period, self.component_id, "tick")
        elif event.kind == "incident_close":
            self.close_incident()
        else:
            raise ValueError(f"RIC cannot handle event kind '{event.kind}'")
