# lunarnet/radio/regime.py
from dataclasses import dataclass
from enum import IntEnum
from typing import Optional


class ConnectivityRegime(IntEnum):
    """Ordered POOR < MODERATE < HIGH."""

    POOR = 0
    MODERATE = 1
    HIGH = 2


@dataclass(frozen=True)
class RegimeThresholds:
    high_quality: float = 0.70
    poor_quality: float = 0.30
    high_bandwidth_bps: int = 1_000_000
    poor_bandwidth_bps: int = 64_000
    hysteresis: float = 0.05


DEFAULT_THRESHOLDS = RegimeThresholds()


def _effective(threshold: float, prev: Optional[ConnectivityRegime],
               boundary: ConnectivityRegime, margin: float) -> float:
    # boundary is the lowest regime that lies above the threshold
    if prev is None:
        return threshold
    if prev >= boundary:
        return threshold - margin
    return threshold + margin


def classify_regime(quality: float, bandwidth_bps: int,
                    prev: Optional[ConnectivityRegime] = None,
                    up: bool = True,
                    thresholds: RegimeThresholds = DEFAULT_THRESHOLDS) -> ConnectivityRegime:
    """Classify a link environment, with hysteresis in quality around prev."""
    if not 0.0 <= quality <= 1.0:
        raise ValueError(f"Quality must be in [0, 1], got {quality}")
    m = thresholds.hysteresis
    if not up or bandwidth_bps < thresholds.poor_bandwidth_bps:
        return ConnectivityRegime.POOR
    if quality < _effective(thresholds.poor_quality, prev, ConnectivityRegime.MODERATE, m):
        return ConnectivityRegime.POOR
    if (bandwidth_bps >= thresholds.high_bandwidth_bps
            and quality >= _effective(thresholds.high_quality, prev, ConnectivityRegime.HIGH, m)):
        return ConnectivityRegime.HIGH
    return ConnectivityRegime.MODERATE
