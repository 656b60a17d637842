# lunarnet/simkernel/engine.py
import heapq
import logging
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, IO, List, Optional, Tuple

import numpy as np

from .clock import SimTime
from .rng import RngStreams
from .trace import Trace

logger = logging.getLogger(__name__)

RESERVED_TRACE_KEYS = frozenset({"t", "seq"})


class SchedulingInPast(ValueError):
    """An event was scheduled before the current virtual time."""


class UnknownComponent(KeyError):
    """An event targets a component id nobody registered."""


@dataclass(frozen=True)
class Event:
    at: SimTime
    seq: int
    target: str
    kind: str
    payload: Dict[str, Any] = field(default_factory=dict)

    @property
    def key(self) -> Tuple[SimTime, int]:
        return (self.at, self.seq)


@dataclass(frozen=True)
class RunReport:
    dispatched: int
    final_time: SimTime


class Component(ABC):
    """Anything the engine can dispatch events to."""

    def __init__(self, component_id: str):
        self.component_id = component_id

    @abstractmethod
    def handle(self, event: Event) -> None:
        """React to one dispatched event."""
        pass


class Engine:
    """Single-threaded discrete-event engine.

    Events dispatch in (at, seq) order where seq is a global insertion
    counter. An engine owns all of its state, so separate engines can run on
    separate threads.
    """

    def __init__(self, seed: int = 0, trace_sink: Optional[IO[str]] = None):
        self.seed = seed
        self.now: SimTime = 0
        self.trace = Trace(trace_sink)
        self._queue: List[Tuple[SimTime, int, Event]] = []
        self._seq = 0
        self._current: Optional[Event] = None
        self._components: Dict[str, Component] = {}
        self._rng = RngStreams(seed)

    def register(self, component: Component) -> Component:
        if component.component_id in self._components:
            raise ValueError(f"Component '{component.component_id}' already registered")
        self._components[component.component_id] = component
        return component

    def component(self, component_id: str) -> Component:
        if component_id not in self._components:
            raise UnknownComponent(component_id)
        return self._components[component_id]

    def rng(self, component_id: str) -> np.random.Generator:
        return self._rng.get(component_id)

    def schedule(self, at: SimTime, target: str, kind: str,
                 payload: Optional[Dict[str, Any]] = None) -> Event:
        """Enqueue an event; ties at equal time dispatch in insertion order."""
        if at < self.now:
            raise SchedulingInPast(f"Cannot schedule '{kind}' at {at}, now is {self.now}")
        event = Event(at=int(at), seq=self._seq, target=target, kind=kind,
                      payload=payload or {})
        self._seq += 1
        heapq.heappush(self._queue, (event.at, event.seq, event))
        return event

    def schedule_in(self, delay: SimTime, target: str, kind: str,
                    payload: Optional[Dict[str, Any]] = None) -> Event:
        return self.schedule(self.now + delay, target, kind, payload)

    @property
    def pending(self) -> int:
        return len(self._queue)

    def peek_time(self) -> Optional[SimTime]:
        return self._queue[0][0] if self._queue else None

    def record(self, kind: str, target: str, **fields: Any) -> None:
        """Append a domain trace line stamped with the current dispatch."""
        clash = RESERVED_TRACE_KEYS & fields.keys()
        if clash:
            raise ValueError(f"Trace fields {sorted(clash)} are reserved for the dispatch stamp")
        seq = self._current.seq if self._current is not None else -1
        self.trace.append({"t": self.now, "seq": seq, "target": target,
                           "kind": kind, **fields})

    def run_until(self, t_end: SimTime) -> RunReport:
        dispatched = 0
        while self._queue and self._queue[0][0] <= t_end:
            _, _, event = heapq.heappop(self._queue)
            self.now = event.at
            self._current = event
            self.trace.append(self._dispatch_record(event))
            handler = self._components.get(event.target)
            if handler is None:
                raise UnknownComponent(event.target)
            handler.handle(event)
            dispatched += 1
        self._current = None
        self.now = max(self.now, t_end)
        logger.debug(f"run_until({t_end}) dispatched {dispatched} events")
        return RunReport(dispatched=dispatched, final_time=self.now)

    @staticmethod
    def _dispatch_record(event: Event) -> Dict[str, Any]:
        record = {k: v for k, v in event.payload.items() if not k.startswith("_")}
        record.update(t=event.at, seq=event.seq, target=event.target, kind=event.kind)
        return record
