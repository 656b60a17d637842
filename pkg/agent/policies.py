# lunarnet/agent/policies.py
"""Pure decision rules of the cognitive agent."""
from dataclasses import dataclass
from enum import Enum

from radio.regime import ConnectivityRegime

H_MAX_S = 600.0
D0_S = 2.0
CONFIDENCE_GATE = 0.5
EWMA_ALPHA = 0.2
PROCESSING_MARGIN_S = 0.5


class DisseminationMode(Enum):
    PUSH_REALTIME = "PUSH_REALTIME"
    PULL_CACHED = "PULL_CACHED"
    AUTONOMOUS_BULK = "AUTONOMOUS_BULK"


class DecisionAction(Enum):
    REALLOCATE_BANDWIDTH = "REALLOCATE_BANDWIDTH"
    REQUEST_HANDOVER = "REQUEST_HANDOVER"
    ADAPT_SAMPLING_RATE = "ADAPT_SAMPLING_RATE"
    REROUTE = "REROUTE"
    SEND_ALERT = "SEND_ALERT"
    RELAY_ACCEPT = "RELAY_ACCEPT"


class Criticality(Enum):
    CRITICAL = "CRITICAL"
    NON_CRITICAL = "NON_CRITICAL"


class MadeBy(Enum):
    LOCAL = "LOCAL"
    EARTH = "EARTH"


class GateOutcome(Enum):
    LOCAL = "LOCAL"
    DEFER_TO_EARTH = "DEFER_TO_EARTH"


@dataclass(frozen=True)
class Decision:
    action: DecisionAction
    criticality: Criticality
    confidence: float
    made_by: MadeBy = MadeBy.LOCAL
    reason: str = ""

    @property
    def critical(self) -> bool:
        return self.criticality == Criticality.CRITICAL


_MODE = {
    ConnectivityRegime.HIGH: DisseminationMode.PUSH_REALTIME,
    ConnectivityRegime.MODERATE: DisseminationMode.PULL_CACHED,
    ConnectivityRegime.POOR: DisseminationMode.AUTONOMOUS_BULK,
}


def mode_for(regime: ConnectivityRegime) -> DisseminationMode:
    return _MODE[ConnectivityRegime(regime)]


def planning_horizon(predicted_delay_s: float) -> float:
    """Seconds of look-ahead; hyperbolic in the predicted delay."""
    if predicted_delay_s < 0:
        raise ValueError(f"Predicted delay must be non-negative, got {predicted_delay_s}")
    return H_MAX_S / (1.0 + predicted_delay_s / D0_S)


def modulate_confidence(base: float, link_quality: float) -> float:
    if not 0.0 <= base <= 1.0 or not 0.0 <= link_quality <= 1.0:
        raise ValueError(f"Confidence inputs must be in [0, 1], got {base}, {link_quality}")
    return base * link_quality


def passes_gate(decision: Decision, confidence: float, gate: float = CONFIDENCE_GATE) -> bool:
    """CRITICAL always executes; NON_CRITICAL needs confidence at or above the gate."""
    return decision.critical or confidence >= gate


def ewma_update(p: float, observed_up: bool, alpha: float = EWMA_ALPHA) -> float:
    return (1.0 - alpha) * p + alpha * (1.0 if observed_up else 0.0)


def autonomous_decision_gate(deadline_s: float, earth_rtt_s: float,
                             margin_s: float = PROCESSING_MARGIN_S) -> GateOutcome:
    """LOCAL when Earth cannot answer before the deadline."""
    if deadline_s < 0 or earth_rtt_s < 0:
        raise ValueError(f"Deadline and RTT must be non-negative, got {deadline_s}, {earth_rtt_s}")
    if earth_rtt_s + margin_s > deadline_s:
        return GateOutcome.LOCAL
    return GateOutcome.DEFER_TO_EARTH
