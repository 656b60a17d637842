# lunarnet/capabilities/energy.py
from dataclasses import dataclass
from typing import Any, Dict

from simkernel.clock import SimTime
from .base import Capability, CapabilityConfig, World
from .parameters import ParameterSet, number_param
from .registry import register_capability


def predict_energy(duration_s: float, driving_s: float,
                   idle_w: float = 50.0, drive_w: float = 200.0) -> float:
    """Joules over ``duration_s``: idle draw throughout, drive draw while moving."""
    if duration_s < 0 or driving_s < 0:
        raise ValueError("Durations must be non-negative")
    if driving_s > duration_s:
        raise ValueError(f"Driving time {driving_s} s exceeds the window {duration_s} s")
    return idle_w * duration_s + (drive_w - idle_w) * driving_s


@dataclass
class EnergyPredictionConfig(CapabilityConfig):
    idle_w: float = 50.0
    drive_w: float = 200.0

    def create_capability(self, world: World) -> "EnergyPrediction":
        return EnergyPrediction(self.name, self.description, self.idle_w, self.drive_w)


class EnergyPrediction(Capability):
    def __init__(self, name: str, description: str, idle_w: float, drive_w: float):
        request = ParameterSet([
            number_param("duration_s", "prediction window in seconds", minimum=0),
            number_param("driving_s", "planned driving time inside the window",
                         required=False, default=0.0, minimum=0),
        ])
        response = ParameterSet([number_param("energy_j", "predicted energy in joules")])
        super().__init__(name, "energy_prediction", description, request, response)
        self.idle_w = idle_w
        self.drive_w = drive_w

    def evaluate(self, params: Dict[str, Any], now: SimTime) -> Dict[str, Any]:
        return {"energy_j": predict_energy(params["duration_s"], params["driving_s"],
                                           self.idle_w, self.drive_w)}


@register_capability("energy_prediction")
def create_energy_config(name: str, config_data: Dict) -> EnergyPredictionConfig:
    return EnergyPredictionConfig(
        name=name,
        kind="energy_prediction",
        description=config_data.get("description", "Linear idle/drive energy model"),
        idle_w=float(config_data.get("idle_w", 50.0)),
        drive_w=float(config_data.get("drive_w", 200.0)),
    )
