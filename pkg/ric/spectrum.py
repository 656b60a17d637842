# lunarnet/ric/spectrum.py
import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Mapping, Optional

from radio.topology import LinkKey, TrafficClass
from simkernel.clock import SimTime

Shares = Dict[TrafficClass, float]

DEFAULT_EMERGENCY_FLOOR = 0.6


class UnknownIncident(KeyError):
    pass


def check_shares(shares: Mapping[TrafficClass, float]) -> Shares:
    """Complete a share map over every class and verify it sums to 1."""
    full = {c: float(shares.get(c, 0.0)) for c in TrafficClass}
    if any(v < 0 for v in full.values()):
        raise ValueError(f"Class shares must be non-negative, got {full}")
    if not math.isclose(math.fsum(full.values()), 1.0, abs_tol=1e-9):
        raise ValueError(f"Class shares must sum to 1, got {full}")
    return full


def reallocate(shares: Mapping[TrafficClass, float], floor: float) -> Shares:
    """Raise EMERGENCY to the floor; OPERATIONAL and BULK split the rest pro rata."""
    if not 0.0 <= floor <= 1.0:
        raise ValueError(f"Emergency floor must be in [0, 1], got {floor}")
    prior = check_shares(shares)
    if prior[TrafficClass.EMERGENCY] >= floor:
        return prior
    emergency = floor
    rest = 1.0 - emergency
    others = prior[TrafficClass.OPERATIONAL] + prior[TrafficClass.BULK]
    if others > 0:
        operational = rest * prior[TrafficClass.OPERATIONAL] / others
    else:
        operational = rest
    return {
        TrafficClass.EMERGENCY: emergency,
        TrafficClass.OPERATIONAL: operational,
        TrafficClass.BULK: rest - operational,
    }


def shares_to_dict(shares: Mapping[TrafficClass, float]) -> Dict[str, float]:
    return {c.value: shares[c] for c in TrafficClass}


def shares_from_dict(data: Mapping[str, float]) -> Shares:
    return check_shares({TrafficClass(k): float(v) for k, v in data.items()})


@dataclass
class Incident:
    incident_id: str
    links: List[LinkKey]
    opened_at: SimTime
    prior: Dict[LinkKey, Shares] = field(default_factory=dict)


class SpectrumPolicy:
    """Per-link class shares plus the incidents currently holding a floor."""

    def __init__(self, links: Iterable[LinkKey], initial: Mapping[TrafficClass, float],
                 emergency_floor: float = DEFAULT_EMERGENCY_FLOOR):
        if not 0.0 <= emergency_floor <= 1.0:
            raise ValueError(f"Emergency floor must be in [0, 1], got {emergency_floor}")
        base = check_shares(initial)
        self.shares: Dict[LinkKey, Shares] = {key: dict(base) for key in sorted(links)}
        self.emergency_floor = emergency_floor
        self.incidents: Dict[str, Incident] = {}

    def get(self, link: LinkKey) -> Shares:
        if link not in self.shares:
            raise KeyError(f"No spectrum policy for link {link}")
        return self.shares[link]

    def set(self, link: LinkKey, shares: Mapping[TrafficClass, float]) -> Shares:
        self.get(link)
        full = check_shares(shares)
        if self.floor_applies(link):
            # closing the incident falls back to the shares set meanwhile
            for incident in self.incidents.values():
                if link in incident.links:
                    incident.prior[link] = dict(full)
            full = reallocate(full, self.emergency_floor)
        self.shares[link] = full
        return full

    def floor_applies(self, link: LinkKey) -> bool:
        return any(link in incident.links for incident in self.incidents.values())

    def open_incident(self, incident_id: str, links: Iterable[LinkKey], t: SimTime) -> Incident:
        if incident_id in self.incidents:
            return self.incidents[incident_id]
        keys = sorted(set(links))
        for key in keys:
            self.get(key)
        incident = Incident(incident_id, keys, t)
        self.incidents[incident_id] = incident
        return incident

    def reallocate(self, incident_id: str) -> Dict[LinkKey, Shares]:
        """Apply the emergency floor on every link the incident covers."""
        incident = self.incidents.get(incident_id)
        if incident is None:
            raise UnknownIncident(incident_id)
        changed = {}
        for key in incident.links:
            if key not in incident.prior:
                # an overlapping incident already holds the unfloored shares
                inherited = next((other.prior[key] for other in self.incidents.values()
                                  if other is not incident and key in other.prior), None)
                incident.prior[key] = dict(inherited if inherited is not None
                                           else self.shares[key])
            self.shares[key] = reallocate(self.shares[key], self.emergency_floor)
            changed[key] = self.shares[key]
        return changed

    def close_incident(self, incident_id: str) -> Dict[LinkKey, Shares]:
        """Restore the shares each link held before the incident took it over."""
        incident = self.incidents.pop(incident_id, None)
        if incident is None:
            raise UnknownIncident(incident_id)
        restored = {}
        for key, prior in incident.prior.items():
            if not self.floor_applies(key):
                self.shares[key] = prior
                restored[key] = prior
        return restored

    def active_incident(self) -> Optional[str]:
        return min(self.incidents) if self.incidents else None
