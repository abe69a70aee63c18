"""DiffServ router with per-class buffers, WFQ output ports and EMA estimators."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from enum import Enum, IntEnum

TAU_FLOOR = 1e-9
DEFAULT_K = 0.01


class ServiceClass(IntEnum):
    """Service classes in downgrade order (lower value = higher priority)."""

    EF = 0
    AF = 1
    BE = 2

    @property
    def code(self) -> "ClassCode":
        return ClassCode(int(self))


class ClassCode(IntEnum):
    """Two-bit class field carried in probes. NONE means nothing is available."""

    EF = 0b00
    AF = 0b01
    BE = 0b10
    NONE = 0b11

    @property
    def bits(self) -> str:
        return format(int(self), "02b")

    def service_class(self) -> ServiceClass | None:
        return None if self is ClassCode.NONE else ServiceClass(int(self))


CLASSES = (ServiceClass.EF, ServiceClass.AF, ServiceClass.BE)


@dataclass(frozen=True)
class ClassConfig:
    wfq_weight: float
    max_buffer_pkts: int

    def __post_init__(self):
        if not self.wfq_weight > 0:
            raise ValueError("wfq_weight must be > 0")
        if self.max_buffer_pkts <= 0:
            raise ValueError("max_buffer_pkts must be > 0")


def default_class_configs() -> tuple[ClassConfig, ClassConfig, ClassConfig]:
    return (ClassConfig(0.22, 24), ClassConfig(0.33, 53), ClassConfig(0.44, 374))


@dataclass
class EmaState:
    avg_rate_bps: float = 0.0
    avg_buffer_pkts: float = 0.0
    last_rate_update: float = 0.0
    last_buffer_update: float = 0.0
    k: float = DEFAULT_K

    def rate_at(self, now: float) -> float:
        """Average rate as seen at `now` with no arrival since the last update."""
        tau = now - self.last_rate_update
        if tau <= 0:
            return self.avg_rate_bps
        return math.exp(-tau / self.k) * self.avg_rate_bps

    def buffer_at(self, now: float, inst_buffer_pkts: float) -> float:
        """Average buffer length projected to `now` without committing it."""
        tau = now - self.last_buffer_update
        if tau <= 0:
            return self.avg_buffer_pkts
        w = math.exp(-tau / self.k)
        return (1.0 - w) * inst_buffer_pkts + w * self.avg_buffer_pkts


def ema_rate_update(state: EmaState, pkt_bits: float, now: float) -> EmaState:
    tau = now - state.last_rate_update
    if tau < 0:
        raise ValueError(f"rate update at {now} precedes last update {state.last_rate_update}")
    if tau < TAU_FLOOR:
        tau = TAU_FLOOR
    w = math.exp(-tau / state.k)
    state.avg_rate_bps = (1.0 - w) * (pkt_bits / tau) + w * state.avg_rate_bps
    state.last_rate_update = now
    return state


def ema_buffer_update(state: EmaState, inst_buffer_pkts: float, now: float) -> EmaState:
    tau = now - state.last_buffer_update
    if tau < 0:
        raise ValueError(f"buffer update at {now} precedes last update {state.last_buffer_update}")
    if tau < TAU_FLOOR:
        tau = TAU_FLOOR
    w = math.exp(-tau / state.k)
    state.avg_buffer_pkts = (1.0 - w) * inst_buffer_pkts + w * state.avg_buffer_pkts
    state.last_buffer_update = now
    return state


class Verdict(Enum):
    ACCEPTED = "accepted"
    DROPPED = "dropped"


class WfqPort:
    """One output port scheduled by weighted fair queuing.

    Virtual time follows the GPS reference system: it advances at
    ``rate / sum(weights of GPS-backlogged classes)`` and each packet gets
    the finish tag ``max(F_prev, V(arrival)) + bits / weight``. The head
    packet with the smallest tag is served next (ties go to the higher class).
    """

    def __init__(self, next_hop: str, service_rate_bps: float, weights,
                 link_capacity_bps: float | None = None, prop_delay_s: float = 0.0):
        if not service_rate_bps > 0:
            raise ValueError("service rate must be > 0")
        self.next_hop = next_hop
        self.service_rate_bps = float(service_rate_bps)
        self.link_capacity_bps = float(link_capacity_bps or service_rate_bps)
        self.prop_delay_s = prop_delay_s
        self.weights = [float(w) for w in weights]
        self.queues = [deque(), deque(), deque()]
        self.in_service = None
        self.served_bits = [0, 0, 0]
        self.served_pkts = [0, 0, 0]
        self._last_finish = [0.0, 0.0, 0.0]
        self._vtime = 0.0
        self._vtime_at = 0.0

    def __len__(self):
        return len(self.queues[0]) + len(self.queues[1]) + len(self.queues[2])

    @property
    def busy(self) -> bool:
        return self.in_service is not None

    def _advance(self, now: float) -> None:
        lf = self._last_finish
        w = self.weights
        rate = self.service_rate_bps
        while True:
            v = self._vtime
            active = [i for i in (0, 1, 2) if lf[i] > v]
            if not active:
                self._vtime_at = now
                return
            wsum = sum(w[i] for i in active)
            fmin = min(lf[i] for i in active)
            reach = self._vtime_at + (fmin - v) * wsum / rate
            if reach <= now:
                self._vtime = fmin
                self._vtime_at = reach
            else:
                self._vtime = v + (now - self._vtime_at) * rate / wsum
                self._vtime_at = now
                return

    def push(self, cls: int, pkt, size_bits: float, now: float) -> None:
        self._advance(now)
        start = max(self._last_finish[cls], self._vtime)
        finish = start + size_bits / self.weights[cls]
        self._last_finish[cls] = finish
        self.queues[cls].append((finish, pkt))

    def pop(self):
        """Remove and return ``(cls, pkt)`` with the smallest finish tag, or None."""
        best = -1
        best_tag = math.inf
        for i in (0, 1, 2):
            q = self.queues[i]
            if q and q[0][0] < best_tag:
                best, best_tag = i, q[0][0]
        if best < 0:
            return None
        return best, self.queues[best].popleft()[1]


class Router:
    """A DiffServ router.

    Each class has one buffer of ``max_buffer_pkts`` shared by all output
    ports; EMA state is kept per class for the whole router.
    """

    def __init__(self, node_id: str, class_configs=None, k: float = DEFAULT_K,
                 hard_cap: bool = True):
        self.node_id = node_id
        self.class_configs = tuple(class_configs or default_class_configs())
        if len(self.class_configs) != 3:
            raise ValueError("need exactly three class configs (EF, AF, BE)")
        self.k = k
        self.hard_cap = hard_cap
        self.ema = [EmaState(k=k) for _ in CLASSES]
        self.qlen = [0, 0, 0]
        self.drops = [0, 0, 0]
        self.ports: dict[str, WfqPort] = {}

    def add_port(self, next_hop: str, link_capacity_bps: float,
                 service_rate_bps: float | None = None, prop_delay_s: float = 0.0) -> WfqPort:
        port = WfqPort(next_hop, service_rate_bps or link_capacity_bps,
                       [c.wfq_weight for c in self.class_configs],
                       link_capacity_bps=link_capacity_bps, prop_delay_s=prop_delay_s)
        self.ports[next_hop] = port
        return port

    def _port(self, next_hop):
        if next_hop is None:
            if len(self.ports) != 1:
                raise ValueError(f"{self.node_id}: next hop required with {len(self.ports)} ports")
            return next(iter(self.ports.values()))
        return self.ports[next_hop]

    def max_buffer(self, cls) -> int:
        return self.class_configs[cls].max_buffer_pkts

    def average_buffer(self, cls, now: float) -> float:
        return self.ema[cls].buffer_at(now, self.qlen[cls])

    def enqueue_data(self, pkt, now: float, next_hop: str | None = None) -> Verdict:
        """Admit `pkt` into its class buffer or destroy it.

        The packet is dropped (and the average left untouched) when the
        average buffer length already exceeds the class depth, or when the
        physical buffer is full.
        """
        cls = pkt.cls
        limit = self.class_configs[cls].max_buffer_pkts
        ema = self.ema[cls]
        if ema.buffer_at(now, self.qlen[cls]) > limit or (
                self.hard_cap and self.qlen[cls] >= limit):
            self.drops[cls] += 1
            return Verdict.DROPPED
        self._port(next_hop).push(cls, pkt, pkt.size_bits, now)
        self.qlen[cls] += 1
        ema_buffer_update(ema, self.qlen[cls], now)
        ema_rate_update(ema, pkt.size_bits, now)
        return Verdict.ACCEPTED

    def wfq_dequeue(self, now: float, next_hop: str | None = None):
        """Start serving the next packet on a port.

        Returns ``(pkt, finish_time)`` or None when the port has nothing queued.
        The port is marked busy until :meth:`complete` is called.
        """
        port = self._port(next_hop)
        if port.in_service is not None:
            raise RuntimeError(f"{self.node_id}->{port.next_hop} is already transmitting")
        item = port.pop()
        if item is None:
            return None
        cls, pkt = item
        self.qlen[cls] -= 1
        port.in_service = pkt
        port.served_bits[cls] += pkt.size_bits
        port.served_pkts[cls] += 1
        return pkt, now + pkt.size_bits / port.service_rate_bps

    def complete(self, next_hop: str | None = None):
        port = self._port(next_hop)
        pkt, port.in_service = port.in_service, None
        return pkt

    def in_service_count(self) -> int:
        return sum(1 for p in self.ports.values() if p.in_service is not None)

    def class_available(self, cls, link_capacity_bps: float, now: float | None = None) -> bool:
        """Arrival-rate test: strictly below the class's WFQ share of the link."""
        ema = self.ema[cls]
        rate = ema.avg_rate_bps if now is None else ema.rate_at(now)
        return rate < self.class_configs[cls].wfq_weight * link_capacity_bps

    def grant_class(self, requested, link_capacity_bps: float,
                    now: float | None = None) -> ClassCode:
        for cls in range(int(requested), 3):
            if self.class_available(cls, link_capacity_bps, now):
                return ClassCode(cls)
        return ClassCode.NONE
