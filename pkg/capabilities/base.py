# lunarnet/capabilities/base.py
from abc import ABC, abstractmethod
from dataclasses import dataclass
from typing import Any, Dict, Optional

from radio.model import RadioModel
from simkernel.clock import SimTime
from .parameters import ParameterSet, ParameterValue
from .terrain import TerrainGrid


@dataclass
class World:
    """Simulation state a capability may read. Capabilities never write it."""

    radio: RadioModel
    terrain: Optional[TerrainGrid] = None


@dataclass(kw_only=True)
class CapabilityConfig(ABC):
    name: str
    kind: str
    description: str = ""

    @abstractmethod
    def create_capability(self, world: World) -> "Capability":
        """Create a capability instance bound to the world."""
        pass


class Capability(ABC):
    """Base class for all capabilities."""

    def __init__(self, name: str, kind: str, description: str,
                 request: ParameterSet, response: ParameterSet):
        self.name = name
        self.kind = kind
        self.description = description
        self.request = request
        self.response = response

    def invoke(self, params: Dict[str, Any], now: SimTime) -> Dict[str, ParameterValue]:
        """Validate the request, evaluate, validate the response."""
        values = self.request.validate_values(params)
        return self.response.validate_values(self.evaluate(values, now))

    @abstractmethod
    def evaluate(self, params: Dict[str, ParameterValue], now: SimTime) -> Dict[str, Any]:
        """Deterministic evaluation against world state at ``now``."""
        pass

    def manifest(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "kind": self.kind,
            "description": self.description,
            "requestSchema": self.request.to_schema(),
            "responseSchema": self.response.to_schema(),
        }
