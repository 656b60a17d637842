# lunarnet/simkernel/clock.py
"""Integer virtual time. One tick is one simulated microsecond."""

SimTime = int

MICROS_PER_SECOND = 1_000_000


def seconds(value: float) -> SimTime:
    """Convert seconds to SimTime, rounding to the nearest microsecond."""
    return int(round(value * MICROS_PER_SECOND))


def as_seconds(micros: SimTime) -> float:
    return micros / MICROS_PER_SECOND
