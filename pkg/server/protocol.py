# lunarnet/server/protocol.py
"""JSON-RPC 2.0 shaped envelope for in-simulation capability calls."""
import json
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Optional

from a2a.codec import canonical_bytes
from capabilities.capsets import CapabilitySet
from radio.model import UnknownLink
from simkernel.clock import SimTime

logger = logging.getLogger(__name__)

METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32603


@dataclass
class CapabilityRequest:
    method: str
    id: int = 0
    params: Dict[str, Any] = field(default_factory=dict)
    jsonrpc: str = "2.0"

    @classmethod
    def call(cls, capability: str, arguments: Dict[str, Any], request_id: int = 0
             ) -> "CapabilityRequest":
        return cls(method="capabilities/call", id=request_id,
                   params={"name": capability, "arguments": arguments})

    def encode(self) -> bytes:
        return canonical_bytes(self.__dict__)

    @classmethod
    def decode(cls, data: bytes) -> "CapabilityRequest":
        return cls(**json.loads(data.decode("utf-8")))


@dataclass
class CapabilityResponse:
    id: int
    result: Optional[Dict[str, Any]] = None
    error: Optional[Dict[str, Any]] = None
    jsonrpc: str = "2.0"

    def encode(self) -> bytes:
        body = {"jsonrpc": self.jsonrpc, "id": self.id}
        if self.error is not None:
            body["error"] = self.error
        else:
            body["result"] = self.result
        return canonical_bytes(body)

    @classmethod
    def decode(cls, data: bytes) -> "CapabilityResponse":
        return cls(**json.loads(data.decode("utf-8")))

    @property
    def ok(self) -> bool:
        return self.error is None


def _error(request_id: Any, code: int, message: str) -> CapabilityResponse:
    return CapabilityResponse(id=request_id, error={"code": code, "message": message})


class CapabilityDispatcher:
    """Routes envelopes to the capabilities of one server."""

    def __init__(self, capabilities: CapabilitySet):
        self.capabilities = capabilities

    def handle_request(self, data: bytes, now: SimTime) -> bytes:
        try:
            request = CapabilityRequest.decode(data)
        except (ValueError, TypeError) as exc:
            return _error(None, INTERNAL_ERROR, f"Unreadable request: {exc}").encode()
        return self.process(request, now).encode()

    def process(self, request: CapabilityRequest, now: SimTime) -> CapabilityResponse:
        if request.method == "capabilities/list":
            return CapabilityResponse(id=request.id,
                                      result={"capabilities": self.capabilities.manifests()})
        if request.method != "capabilities/call":
            return _error(request.id, METHOD_NOT_FOUND, f"Method not found: {request.method}")

        name = request.params.get("name")
        capability = self.capabilities.get(name)
        if capability is None:
            return _error(request.id, INVALID_PARAMS, f"Capability not found: {name}")
        try:
            result = capability.invoke(request.params.get("arguments", {}), now)
        except ValueError as exc:
            return _error(request.id, INVALID_PARAMS, str(exc))
        except UnknownLink as exc:
            return _error(request.id, INVALID_PARAMS, f"UnknownLink: {exc.args[0]}")
        except LookupError as exc:
            # planner NoPath surfaces here
            return _error(request.id, INTERNAL_ERROR, f"{type(exc).__name__}: {exc}")
        logger.debug(f"{name} -> {result}")
        return CapabilityResponse(id=request.id, result=result)
