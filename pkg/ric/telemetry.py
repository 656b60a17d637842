# lunarnet/ric/telemetry.py
from dataclasses import asdict, dataclass
from typing import Any, Dict

from simkernel.clock import SimTime


@dataclass(frozen=True)
class TelemetrySample:
    node: str
    t: SimTime
    radio_quality: float
    system_load: float
    agent_mode: str

    def __post_init__(self):
        if not 0.0 <= self.radio_quality <= 1.0:
            raise ValueError(f"Radio quality must be in [0, 1], got {self.radio_quality}")
        if not 0.0 <= self.system_load <= 1.0:
            raise ValueError(f"System load must be in [0, 1], got {self.system_load}")

    def to_dict(self) -> Dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "TelemetrySample":
        return cls(node=data["node"], t=int(data["t"]), radio_quality=float(data["radio_quality"]),
                   system_load=float(data["system_load"]), agent_mode=data["agent_mode"])
