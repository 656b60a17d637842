# lunarnet/capabilities/capsets.py
from typing import Any, Dict, List, Optional

from .base import Capability, World
from .registry import capability_registry


class CapabilitySet:
    """The capabilities one context server exposes; names are unique."""

    def __init__(self, name: str, capabilities: Dict[str, Capability],
                 description: Optional[str] = None):
        self.name = name
        self.capabilities = capabilities
        self.description = description

    def names(self) -> List[str]:
        return sorted(self.capabilities)

    def get(self, name: str) -> Optional[Capability]:
        return self.capabilities.get(name)

    def has(self, name: str) -> bool:
        return name in self.capabilities

    def manifests(self) -> List[Dict[str, Any]]:
        return [self.capabilities[n].manifest() for n in self.names()]


def create_capability_set(name: str, configs: List[Dict[str, Any]], world: World,
                          description: Optional[str] = None) -> CapabilitySet:
    """Instantiate capabilities from config entries of the form {name, kind, ...}."""
    capabilities: Dict[str, Capability] = {}
    for entry in configs:
        cap_name = entry.get("name", entry["kind"])
        if cap_name in capabilities:
            raise ValueError(f"Capability '{cap_name}' declared twice for '{name}'")
        config = capability_registry.create_config(entry["kind"], cap_name, entry)
        capabilities[cap_name] = config.create_capability(world)
    return CapabilitySet(name, capabilities, description)
