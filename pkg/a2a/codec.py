# lunarnet/a2a/codec.py
"""Canonical structured-text encoding of semantic messages.

Key-sorted JSON without whitespace, UTF-8. The field layout of every tier
is documented in docs/wire.md.
"""
import json
from typing import Any, Dict, Optional

from .messages import (
    CRITICAL_FIELDS,
    AlertBody,
    CompressionTier,
    InvalidMessage,
    MessageKind,
    SemanticMessage,
    SemanticStateVector,
    VectorSummary,
)


class MalformedPayload(ValueError):
    pass


class UnknownKind(ValueError):
    pass


def canonical_bytes(obj: Any) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"),
                      allow_nan=False).encode("utf-8")


def _encode_vector(state: SemanticStateVector, tier: CompressionTier) -> Dict[str, Any]:
    vector: Dict[str, Any] = {"tags": list(state.tags)}
    if tier == CompressionTier.FULL:
        if state.values is None:
            raise InvalidMessage("FULL tier needs the complete state vector")
        vector["values"] = list(state.values)
    elif tier == CompressionTier.SUMMARY:
        if state.values is None and state.summary is None:
            raise InvalidMessage("SUMMARY tier needs the state vector or its summary")
        vector["summary"] = state.summarize().as_list()
    return vector


def _encode_body(msg: SemanticMessage, tier: CompressionTier) -> Dict[str, Any]:
    body = msg.body_dict()
    if tier == CompressionTier.CRITICAL:
        keep = CRITICAL_FIELDS[msg.kind]
        body = {k: v for k, v in body.items() if k in keep}
    return body


def encode(msg: SemanticMessage, tier: Optional[CompressionTier] = None) -> bytes:
    """Encode at ``tier`` (default: the tier the message already has)."""
    if not isinstance(msg, SemanticMessage):
        raise InvalidMessage(f"Expected a SemanticMessage, got {type(msg).__name__}")
    tier = tier or msg.tier
    try:
        doc: Dict[str, Any] = {
            "body": _encode_body(msg, tier),
            "confidence": msg.confidence,
            "kind": msg.kind.value,
            "sender": msg.sender,
            "seq": msg.seq,
            "tier": tier.value,
        }
        if msg.state is not None:
            doc["vector"] = _encode_vector(msg.state, tier)
        return canonical_bytes(doc)
    except InvalidMessage:
        raise
    except (ArithmeticError, TypeError, ValueError) as exc:
        raise InvalidMessage(f"Message {msg.key} is not encodable: {exc}") from exc


def _decode_vector(raw: Any, tier: CompressionTier) -> SemanticStateVector:
    if not isinstance(raw, dict) or not isinstance(raw.get("tags"), list):
        raise MalformedPayload("vector must be an object with a tag list")
    tags = tuple(raw["tags"])
    if tier == CompressionTier.FULL:
        return SemanticStateVector(values=tuple(raw["values"]), tags=tags)
    if tier == CompressionTier.SUMMARY:
        return SemanticStateVector(values=None, tags=tags,
                                   summary=VectorSummary.from_list(raw["summary"]))
    return SemanticStateVector(values=None, tags=tags)


def decode(data: bytes) -> SemanticMessage:
    """Inverse of encode; summarized or dropped vectors stay absent."""
    try:
        doc = json.loads(bytes(data).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedPayload(f"Not a canonical message: {exc}") from exc
    if not isinstance(doc, dict):
        raise MalformedPayload("Top-level value must be an object")
    try:
        kind = MessageKind(doc["kind"])
    except KeyError as exc:
        raise MalformedPayload("Missing field 'kind'") from exc
    except (TypeError, ValueError) as exc:
        raise UnknownKind(f"Unknown message kind: {doc['kind']!r}") from exc
    try:
        tier = CompressionTier(doc["tier"])
        body = doc["body"]
        if kind == MessageKind.ALERT:
            body = AlertBody.from_dict(body)
        state = _decode_vector(doc["vector"], tier) if "vector" in doc else None
        return SemanticMessage(kind=kind, sender=doc["sender"], seq=doc["seq"],
                               confidence=doc["confidence"], tier=tier, body=body,
                               state=state)
    except MalformedPayload:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedPayload(f"Invalid {kind.value} payload: {exc}") from exc
