"""Deterministic discrete-event engine: clock, event queue, seeded streams, links."""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass
from enum import Enum
from typing import Any, Callable


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled before the current clock."""


class EventKind(str, Enum):
    PACKET_ARRIVAL = "packet-arrival"
    SERVICE_COMPLETION = "service-completion"
    PROBE_TIMER = "probe-timer"
    SOURCE_TIMER = "source-timer"
    STATS_SAMPLE = "stats-sample"


@dataclass(frozen=True, order=True)
class Event:
    fire_at: float
    seq: int
    kind: EventKind
    payload: Any = None


@dataclass(frozen=True)
class Link:
    src: str
    dst: str
    capacity_bps: float
    prop_delay_s: float = 0.0

    def __post_init__(self):
        if not self.capacity_bps > 0:
            raise ValueError(f"link {self.src}->{self.dst}: capacity must be > 0")
        if self.prop_delay_s < 0:
            raise ValueError(f"link {self.src}->{self.dst}: negative propagation delay")

    def reversed(self) -> "Link":
        return Link(self.dst, self.src, self.capacity_bps, self.prop_delay_s)


def transmit(link: Link, packet_bits: int, depart: float) -> float:
    """Arrival time at the far end of `link` for a packet leaving at `depart`."""
    if packet_bits <= 0:
        raise ValueError("packet size must be positive")
    return depart + packet_bits / link.capacity_bps + link.prop_delay_s


def rng_stream(seed: int, stream_id: str) -> random.Random:
    # str seeds are hashed with sha512 by CPython, so this is platform independent
    return random.Random(f"{int(seed)}/{stream_id}")


@dataclass
class PacketCounts:
    generated: int = 0
    delivered: int = 0
    dropped: int = 0


@dataclass(frozen=True)
class RunSummary:
    clock: float
    events: int
    generated: int
    delivered: int
    dropped: int


class Engine:
    """Single-threaded event loop.

    Events are ordered by ``(fire_at, seq)``; ``seq`` is the insertion
    counter, so simultaneous events dispatch in the order they were scheduled.
    Handlers are called as ``handler(payload)``.
    """

    def __init__(self):
        self.now = 0.0
        self.counts = PacketCounts()
        self.dispatched = 0
        self._heap: list = []
        self._seq = 0

    def schedule(self, fire_at: float, kind: EventKind, handler: Callable[[Any], None],
                 payload: Any = None) -> int:
        if fire_at < self.now:
            raise SchedulingError(
                f"{kind.value} scheduled at {fire_at!r} before clock {self.now!r}")
        seq = self._seq
        self._seq += 1
        heapq.heappush(self._heap, (fire_at, seq, kind, handler, payload))
        return seq

    def schedule_event(self, event: Event, handler: Callable[[Any], None]) -> int:
        """Schedule a pre-built Event; its seq must not collide with engine-issued ones."""
        if event.fire_at < self.now:
            raise SchedulingError(f"event at {event.fire_at!r} before clock {self.now!r}")
        self._seq = max(self._seq, event.seq + 1)
        heapq.heappush(self._heap, (event.fire_at, event.seq, event.kind, handler, event.payload))
        return event.seq

    def pending(self) -> int:
        return len(self._heap)

    def step(self) -> Event | None:
        if not self._heap:
            return None
        fire_at, seq, kind, handler, payload = heapq.heappop(self._heap)
        self.now = fire_at
        self.dispatched += 1
        handler(payload)
        return Event(fire_at, seq, kind, payload)

    def run_until(self, end: float) -> RunSummary:
        if end < self.now:
            raise SchedulingError(f"cannot run backwards to {end!r} from {self.now!r}")
        heap = self._heap
        pop = heapq.heappop
        n = 0
        while heap and heap[0][0] <= end:
            fire_at, _, _, handler, payload = pop(heap)
            self.now = fire_at
            handler(payload)
            n += 1
        self.dispatched += n
        self.now = end
        c = self.counts
        return RunSummary(end, self.dispatched, c.generated, c.delivered, c.dropped)
