# lunarnet/agent/biometrics.py
import logging
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

from a2a.messages import AlertBody, AnomalyClass
from radio.model import RadioModel
from simkernel.clock import SimTime, seconds
from simkernel.engine import Component, Engine, Event

logger = logging.getLogger(__name__)

PING_PERIOD = seconds(5)
WATCH_MARGIN = seconds(0.5)
MISSED_PING_THRESHOLD = 3


@dataclass(frozen=True)
class PingWindow:
    """Scripted suit behavior over [start, end): 'outage' or 'degraded'."""

    status: str
    start: SimTime
    end: SimTime

    def __post_init__(self):
        if self.status not in ("outage", "degraded"):
            raise ValueError(f"Ping window status must be 'outage' or 'degraded', got {self.status}")
        if self.end <= self.start:
            raise ValueError(f"Ping window must end after it starts: [{self.start}, {self.end})")

    def covers(self, t: SimTime) -> bool:
        return self.start <= t < self.end


class BiometricSuit(Component):
    """Astronaut suit emitting a biometric ping to its watcher every period."""

    def __init__(self, engine: Engine, radio: RadioModel, node: str, watcher: str,
                 horizon: SimTime, windows: List[PingWindow] = (),
                 period: SimTime = PING_PERIOD):
        super().__init__(node)
        self.engine = engine
        self.radio = radio
        self.node = node
        self.watcher = watcher
        self.horizon = horizon
        self.windows = sorted(windows, key=lambda w: w.start)
        self.period = period

    def start(self) -> None:
        if self.period <= self.horizon:
            self.engine.schedule(self.period, self.component_id, "ping")

    def status_at(self, t: SimTime) -> str:
        # an outage overrides a degradation covering the same instant
        status = "nominal"
        for window in self.windows:
            if window.covers(t):
                if window.status == "outage":
                    return "outage"
                status = "degraded"
        return status

    def handle(self, event: Event) -> None:
        if event.kind != "ping":
            raise ValueError(f"Suit cannot handle event kind '{event.kind}'")
        now = self.engine.now
        status = self.status_at(now)
        link = self.radio.link_at(self.node, self.watcher, now)
        sent = status != "outage" and link.up
        self.engine.record("biometric_ping", self.node, suit=self.node, watcher=self.watcher,
                           status=status, sent=sent)
        if sent:
            self.engine.schedule(now + link.one_way_delay, f"watch:{self.watcher}",
                                 "ping_received", {"suit": self.node, "stamp": now,
                                                   "status": status})
        if now + self.period <= self.horizon:
            self.engine.schedule(now + self.period, self.component_id, "ping")


AlertCallback = Callable[[AlertBody], None]


class AnomalyWatcher(Component):
    """Missed-ping detector hosted on the watching rover.

    Checks ``margin`` after every expected ping; ``threshold`` consecutive
    misses raise one UNRESPONSIVE alert.
    """

    def __init__(self, engine: Engine, node: str, suit: str, horizon: SimTime,
                 on_alert: AlertCallback, location_m: Tuple[float, float],
                 uncertainty_radius_m: float = 5.0, period: SimTime = PING_PERIOD,
                 margin: SimTime = WATCH_MARGIN, threshold: int = MISSED_PING_THRESHOLD):
        super().__init__(f"watch:{node}")
        self.engine = engine
        self.node = node
        self.suit = suit
        self.horizon = horizon
        self.on_alert = on_alert
        self.location_m = location_m
        self.uncertainty_radius_m = uncertainty_radius_m
        self.period = period
        self.margin = margin
        self.threshold = threshold
        self.last_stamp: Optional[SimTime] = None
        self.misses = 0
        self.degraded_seen = False
        self.alerted = False

    def start(self) -> None:
        if self.period + self.margin <= self.horizon:
            self.engine.schedule(self.period + self.margin, self.component_id, "ping_watch")

    def handle(self, event: Event) -> None:
        if event.kind == "ping_received":
            self.last_stamp = event.payload["stamp"]
            self.misses = 0
            if event.payload["status"] == "degraded":
                self.degraded_seen = True
        elif event.kind == "ping_watch":
            self._check(event.at - self.margin)
            if event.at + self.period <= self.horizon:
                self.engine.schedule(event.at + self.period, self.component_id, "ping_watch")
        else:
            raise ValueError(f"Watcher cannot handle event kind '{event.kind}'")

    def _check(self, expected: SimTime) -> None:
        if self.last_stamp is not None and self.last_stamp >= expected:
            return
        self.misses += 1
        self.engine.record("ping_missed", self.node, watcher=self.node, suit=self.suit,
                           expected=expected, consecutive=self.misses)
        if self.misses >= self.threshold and not self.alerted:
            self.alerted = True
            body = AlertBody(
                anomaly_class=AnomalyClass.UNRESPONSIVE,
                location=self.location_m,
                uncertainty_radius_m=self.uncertainty_radius_m,
                assistance_level=5 if self.degraded_seen else 3,
            )
            logger.info(f"{self.node}: {self.suit} missed {self.misses} pings, raising alert")
            self.on_alert(body)
