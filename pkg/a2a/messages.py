# lunarnet/a2a/messages.py
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Optional, Tuple, Union

from radio.regime import ConnectivityRegime
from radio.topology import TrafficClass

VECTOR_LENGTH = 64
MAX_TAGS = 16
MAX_TAG_LENGTH = 16
SUMMARY_INDICES = (0, 16, 32, 48, 63)


class InvalidMessage(ValueError):
    """A message that cannot be built or encoded."""


class MessageKind(Enum):
    ALERT = "ALERT"
    STATE_UPDATE = "STATE_UPDATE"
    POLICY_UPDATE = "POLICY_UPDATE"
    COORDINATION = "COORDINATION"
    RELAY_OFFER = "RELAY_OFFER"
    SITUATION_REPORT = "SITUATION_REPORT"


class CompressionTier(Enum):
    """Payload granularity; the value is the one-letter wire code."""

    FULL = "F"
    SUMMARY = "S"
    CRITICAL = "C"

    @property
    def level(self) -> int:
        return _TIER_LEVEL[self]


_TIER_LEVEL = {CompressionTier.FULL: 2, CompressionTier.SUMMARY: 1, CompressionTier.CRITICAL: 0}


class AnomalyClass(Enum):
    BIOMETRIC_DEGRADED = "BIOMETRIC_DEGRADED"
    UNRESPONSIVE = "UNRESPONSIVE"
    EQUIPMENT_FAULT = "EQUIPMENT_FAULT"


# body fields that survive the CRITICAL tier, per kind
CRITICAL_FIELDS: Dict[MessageKind, Tuple[str, ...]] = {
    MessageKind.ALERT: ("anomaly_class", "location", "uncertainty_radius_m", "assistance_level"),
    MessageKind.STATE_UPDATE: ("position", "mode"),
    MessageKind.POLICY_UPDATE: ("policy_id", "shares", "issued_at"),
    MessageKind.COORDINATION: ("action", "target"),
    MessageKind.RELAY_OFFER: ("relay", "capacity_bps", "for_alert"),
    MessageKind.SITUATION_REPORT: ("incident", "decisions"),
}


@dataclass(frozen=True)
class AlertBody:
    anomaly_class: AnomalyClass
    location: Tuple[float, float]
    uncertainty_radius_m: float
    assistance_level: int

    def __post_init__(self):
        if isinstance(self.anomaly_class, str):
            object.__setattr__(self, "anomaly_class", AnomalyClass(self.anomaly_class))
        x, y = self.location
        object.__setattr__(self, "location", (float(x), float(y)))
        object.__setattr__(self, "uncertainty_radius_m", float(self.uncertainty_radius_m))
        if not (math.isfinite(self.location[0]) and math.isfinite(self.location[1])):
            raise ValueError(f"Alert location must be finite, got {self.location}")
        if not self.uncertainty_radius_m >= 0:
            raise ValueError(
                f"Uncertainty radius must be non-negative, got {self.uncertainty_radius_m}"
            )
        if isinstance(self.assistance_level, bool) or not 1 <= self.assistance_level <= 5:
            raise ValueError(f"Assistance level must be in [1, 5], got {self.assistance_level}")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "anomaly_class": self.anomaly_class.value,
            "location": list(self.location),
            "uncertainty_radius_m": self.uncertainty_radius_m,
            "assistance_level": self.assistance_level,
        }

    @classmethod
    def from_dict(cls, data: Dict[str, Any]) -> "AlertBody":
        return cls(
            anomaly_class=AnomalyClass(data["anomaly_class"]),
            location=tuple(data["location"]),
            uncertainty_radius_m=data["uncertainty_radius_m"],
            assistance_level=data["assistance_level"],
        )


@dataclass(frozen=True)
class VectorSummary:
    minimum: float
    maximum: float
    mean: float
    samples: Tuple[float, ...]

    def as_list(self) -> list:
        return [self.minimum, self.maximum, self.mean, *self.samples]

    @classmethod
    def from_list(cls, stats: list) -> "VectorSummary":
        if len(stats) != 3 + len(SUMMARY_INDICES):
            raise ValueError(f"Vector summary needs {3 + len(SUMMARY_INDICES)} values")
        return cls(float(stats[0]), float(stats[1]), float(stats[2]),
                   tuple(float(v) for v in stats[3:]))


def _mean(values: Tuple[float, ...]) -> float:
    try:
        mean = math.fsum(values) / len(values)
    except OverflowError:
        mean = math.fsum(v / len(values) for v in values)
    return min(max(mean, min(values)), max(values))


@dataclass(frozen=True)
class SemanticStateVector:
    """Opaque agent state. ``values`` is None once summarized or dropped."""

    values: Optional[Tuple[float, ...]]
    tags: Tuple[str, ...] = ()
    summary: Optional[VectorSummary] = None

    def __post_init__(self):
        if self.values is not None:
            values = tuple(float(v) for v in self.values)
            if len(values) != VECTOR_LENGTH:
                raise ValueError(f"State vector must hold {VECTOR_LENGTH} values, got {len(values)}")
            if not all(math.isfinite(v) for v in values):
                raise ValueError("State vector values must be finite")
            object.__setattr__(self, "values", values)
        tags = tuple(self.tags)
        if len(tags) > MAX_TAGS:
            raise ValueError(f"At most {MAX_TAGS} tags allowed, got {len(tags)}")
        for tag in tags:
            if not isinstance(tag, str) or not 0 < len(tag) <= MAX_TAG_LENGTH:
                raise ValueError(f"Tag must be a string of 1-{MAX_TAG_LENGTH} characters: {tag!r}")
        object.__setattr__(self, "tags", tags)

    def summarize(self) -> VectorSummary:
        if self.summary is not None and self.values is None:
            return self.summary
        if self.values is None:
            raise ValueError("Nothing to summarize: vector values are absent")
        return VectorSummary(
            minimum=min(self.values),
            maximum=max(self.values),
            mean=_mean(self.values),
            samples=tuple(self.values[i] for i in SUMMARY_INDICES),
        )


Body = Union[AlertBody, Dict[str, Any]]


def _normalize_body(body: Dict[str, Any]) -> Dict[str, Any]:
    # the decoded form of a body is its JSON image
    return json.loads(json.dumps(body, sort_keys=True, allow_nan=False))


@dataclass(frozen=True)
class SemanticMessage:
    kind: MessageKind
    sender: str
    seq: int
    confidence: float
    tier: CompressionTier = CompressionTier.FULL
    body: Body = field(default_factory=dict)
    state: Optional[SemanticStateVector] = None

    def __post_init__(self):
        if isinstance(self.kind, str):
            object.__setattr__(self, "kind", MessageKind(self.kind))
        if not self.sender:
            raise ValueError("Message sender must be non-empty")
        if isinstance(self.seq, bool) or self.seq < 0:
            raise ValueError(f"Message seq must be a non-negative integer, got {self.seq}")
        object.__setattr__(self, "confidence", float(self.confidence))
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"Confidence must be in [0, 1], got {self.confidence}")
        if self.kind == MessageKind.ALERT:
            if not isinstance(self.body, AlertBody):
                raise ValueError("ALERT messages carry an AlertBody")
        else:
            if isinstance(self.body, AlertBody):
                raise ValueError(f"{self.kind.value} messages cannot carry an AlertBody")
            if not isinstance(self.body, dict):
                raise InvalidMessage(
                    f"Message body must be a mapping, got {type(self.body).__name__}")
            try:
                body = _normalize_body(self.body)
            except (TypeError, ValueError) as exc:
                raise InvalidMessage(f"Message body is not JSON data: {exc}") from exc
            object.__setattr__(self, "body", body)

    @property
    def key(self) -> Tuple[str, int]:
        return (self.sender, self.seq)

    @property
    def traffic_class(self) -> TrafficClass:
        if self.kind in (MessageKind.ALERT, MessageKind.RELAY_OFFER):
            return TrafficClass.EMERGENCY
        if self.kind == MessageKind.POLICY_UPDATE and isinstance(self.body, dict) \
                and self.body.get("incident"):
            return TrafficClass.EMERGENCY
        if self.kind == MessageKind.SITUATION_REPORT:
            return TrafficClass.BULK
        return TrafficClass.OPERATIONAL

    def body_dict(self) -> Dict[str, Any]:
        if isinstance(self.body, AlertBody):
            return self.body.to_dict()
        return dict(self.body)


_REGIME_TIER = {
    ConnectivityRegime.HIGH: CompressionTier.FULL,
    ConnectivityRegime.MODERATE: CompressionTier.SUMMARY,
    ConnectivityRegime.POOR: CompressionTier.CRITICAL,
}


def select_tier(available_bandwidth_bps: int, regime: ConnectivityRegime) -> CompressionTier:
    """HIGH sends FULL, MODERATE SUMMARY, POOR CRITICAL."""
    if available_bandwidth_bps < 0:
        raise ValueError(f"Bandwidth must be non-negative, got {available_bandwidth_bps}")
    return _REGIME_TIER[ConnectivityRegime(regime)]
