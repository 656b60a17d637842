# lunarnet/capabilities/signal_quality.py
from dataclasses import dataclass
from typing import Any, Dict, Optional

from radio.model import RadioModel
from simkernel.clock import SimTime, seconds
from .base import Capability, CapabilityConfig, World
from .parameters import ParameterSet, array_param, bool_param, number_param, string_param
from .registry import register_capability
from .terrain import TerrainGrid


@dataclass
class SignalQualityConfig(CapabilityConfig):
    def create_capability(self, world: World) -> "SignalQualityEstimation":
        return SignalQualityEstimation(self.name, self.description, world.radio, world.terrain)


class SignalQualityEstimation(Capability):
    """Link quality prediction, or the predicted quality map of the terrain."""

    def __init__(self, name: str, description: str, radio: RadioModel,
                 terrain: Optional[TerrainGrid] = None):
        request = ParameterSet([
            array_param("link", "link endpoints [a, b]", items=string_param("node", "node name"),
                        required=False, default=[], max_length=2),
            number_param("horizon_s", "seconds ahead of now", required=False, default=0.0,
                         minimum=0),
            bool_param("map", "return the terrain quality map instead", required=False,
                       default=False),
        ])
        response = ParameterSet([
            number_param("quality", "predicted link quality", required=False),
            number_param("ci_width", "confidence interval width", required=False),
            array_param("quality_map", "rows of predicted cell quality", required=False),
        ])
        super().__init__(name, "signal_quality_estimation", description, request, response)
        self.radio = radio
        self.terrain = terrain

    def evaluate(self, params: Dict[str, Any], now: SimTime) -> Dict[str, Any]:
        at = now + seconds(params["horizon_s"])
        if params["map"]:
            if self.terrain is None:
                raise ValueError("No terrain grid to map")
            return {"quality_map": self.terrain.quality_at(at).tolist()}
        if len(params["link"]) != 2:
            raise ValueError("Parameter 'link' must name two endpoints")
        a, b = params["link"]
        estimate, width = self.radio.predict_quality(a, b, at, now)
        return {"quality": estimate, "ci_width": width}


@register_capability("signal_quality_estimation")
def create_signal_quality_config(name: str, config_data: Dict) -> SignalQualityConfig:
    return SignalQualityConfig(
        name=name,
        kind="signal_quality_estimation",
        description=config_data.get("description", "Plan-derived link quality prediction"),
    )
