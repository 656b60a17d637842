# lunarnet/capabilities/registry.py
from typing import Callable, Dict, List

from .base import CapabilityConfig


class CapabilityRegistry:
    """Registry for capability kinds."""

    def __init__(self):
        self._factories: Dict[str, Callable[[str, Dict], CapabilityConfig]] = {}

    def register(self, kind: str, factory: Callable[[str, Dict], CapabilityConfig]) -> bool:
        if kind in self._factories:
            return False
        self._factories[kind] = factory
        return True

    def kinds(self) -> List[str]:
        return sorted(self._factories)

    def create_config(self, kind: str, name: str, config_data: Dict) -> CapabilityConfig:
        if kind not in self._factories:
            raise ValueError(f"Unknown capability kind: {kind}")
        return self._factories[kind](name, config_data)


capability_registry = CapabilityRegistry()


def register_capability(kind: str):
    def decorator(factory_func):
        capability_registry.register(kind, factory_func)
        return factory_func
    return decorator
