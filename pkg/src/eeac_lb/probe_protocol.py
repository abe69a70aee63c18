"""Probing phase: per-path probes, bottleneck folding, scoring and path selection.

Nominal probe/ack byte layout (documentation only, nothing is serialized)::

    probe: | class 2b | pad 6b | seq 32b | B_EF 16b | B_AF 16b | B_BE 16b | ...
    ack:   | class 2b | pad 6b | seq 32b | Sum 16b | ...

Remaining-buffer fields are in packets; 50-byte probes leave room for
addressing and the path label.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from .qos_router import CLASSES, ClassCode, Router, ServiceClass

PROBE_BITS = 400


@dataclass(frozen=True)
class ProbePacket:
    path_id: str
    seq: int
    requested: ServiceClass = ServiceClass.EF
    granted: ClassCode = ClassCode.EF
    bottleneck_B: tuple | None = None
    bottleneck_router: str | None = None
    sent_at: float = 0.0
    size_bits: int = PROBE_BITS


@dataclass(frozen=True)
class AckPacket:
    path_id: str
    probe_seq: int
    sum: float
    granted: ClassCode
    round_paths: tuple = ()
    size_bits: int = PROBE_BITS


@dataclass
class PathInfo:
    path_id: str
    hops: tuple
    last_sum: float | None = None
    selected: bool = False
    split_rate: float = 0.0

    @property
    def routers(self) -> tuple:
        return self.hops[1:-1]


def remaining_buffer(router: Router, cls, now: float) -> float:
    return max(0.0, router.max_buffer(cls) - router.average_buffer(cls, now))


def router_remaining(router: Router, now: float) -> tuple:
    return tuple(remaining_buffer(router, c, now) for c in CLASSES)


def fold_bottleneck(probe: ProbePacket, router: Router, now: float,
                    link_capacity_bps: float | None = None,
                    per_class: bool = False) -> ProbePacket:
    """Update a probe as it crosses `router`.

    By default the carried vector is replaced whenever this router's total
    remaining buffer is strictly smaller, so it always describes a single
    most-crowded router. With ``per_class`` each class keeps its own minimum.
    The granted class is re-checked here when a link capacity is given.
    """
    here = router_remaining(router, now)
    carried = probe.bottleneck_B
    changes = {}
    if carried is None:
        changes["bottleneck_B"] = here
        changes["bottleneck_router"] = router.node_id
    elif per_class:
        folded = tuple(min(a, b) for a, b in zip(carried, here))
        if folded != carried:
            changes["bottleneck_B"] = folded
            changes["bottleneck_router"] = router.node_id
    elif sum(here) < sum(carried):
        changes["bottleneck_B"] = here
        changes["bottleneck_router"] = router.node_id
    if link_capacity_bps is not None and probe.granted is not ClassCode.NONE:
        granted = router.grant_class(probe.granted, link_capacity_bps, now)
        if granted != probe.granted:
            changes["granted"] = granted
    return replace(probe, **changes) if changes else probe


def score_path(probe: ProbePacket) -> float:
    if probe.bottleneck_B is None:
        return 0.0
    b_ef, b_af, b_be = probe.bottleneck_B
    return b_ef + b_af + b_be


def select_paths(scores: dict, n_select: int = 2) -> list:
    """Highest-scoring paths first; equal scores go to the smaller path id."""
    if not scores:
        raise ValueError("no scored paths this round")
    ranked = sorted(scores, key=lambda p: (-scores[p], p))
    return ranked[:n_select]


@dataclass
class _Round:
    seq: int
    started: float
    expected: tuple
    arrived: dict = field(default_factory=dict)
    closed: bool = False


class ProbingAgent:
    """Destination-side state machine for one source/destination pair.

    ``start_round`` hands out one probe per candidate path. Each arriving
    probe is scored; when the round's probes are all in (or the straggler
    timeout fires) the best paths are selected and one ack per selected
    path is returned.
    """

    def __init__(self, path_ids, n_select: int = 2, period_s: float = 0.5,
                 requested: ServiceClass = ServiceClass.EF):
        self.path_ids = tuple(path_ids)
        self.n_select = n_select
        self.period_s = period_s
        self.requested = requested
        self.rounds: dict[int, _Round] = {}
        self.next_seq = 0
        self.selection: list = []
        self.last_scores: dict = {}
        self.granted: dict = {}

    @property
    def timeout_s(self) -> float:
        return self.period_s / 2

    def start_round(self, now: float) -> list:
        seq = self.next_seq
        self.next_seq += 1
        self.rounds[seq] = _Round(seq, now, self.path_ids)
        return [ProbePacket(p, seq, self.requested, self.requested.code, sent_at=now)
                for p in self.path_ids]

    def on_probe(self, probe: ProbePacket, now: float) -> list:
        rnd = self.rounds.get(probe.seq)
        if rnd is None or rnd.closed:
            return []
        rnd.arrived[probe.path_id] = probe
        if len(rnd.arrived) == len(rnd.expected):
            return self._close(rnd)
        return []

    def on_timeout(self, seq: int, now: float) -> list:
        rnd = self.rounds.get(seq)
        if rnd is None or rnd.closed:
            return []
        return self._close(rnd)

    def _close(self, rnd: _Round) -> list:
        rnd.closed = True
        del self.rounds[rnd.seq]
        if not rnd.arrived:
            return []
        scores = {p: (score_path(rnd.arrived[p]) if p in rnd.arrived else 0.0)
                  for p in rnd.expected}
        self.last_scores = scores
        chosen = select_paths(scores, self.n_select)
        self.selection = chosen
        acks = []
        for p in chosen:
            probe = rnd.arrived.get(p)
            granted = probe.granted if probe is not None else ClassCode.NONE
            self.granted[p] = granted
            acks.append(AckPacket(p, rnd.seq, scores[p], granted, tuple(chosen)))
        return acks
