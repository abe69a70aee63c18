"""Proportional traffic splitting across the selected paths."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass
class SplitState:
    rates: dict = field(default_factory=dict)
    last_update: float = 0.0

    def rate(self, path_id: str) -> float:
        return self.rates.get(path_id, 0.0)


def compute_rates(sums: dict, now: float = 0.0) -> SplitState:
    """Each path's share is its score over the total; all-zero scores split evenly."""
    if not sums:
        raise ValueError("no path scores to split over")
    ids = sorted(sums)
    total = sum(sums[p] for p in ids)
    if total > 0:
        rates = {p: sums[p] / total for p in ids}
    else:
        rates = {p: 1.0 / len(ids) for p in ids}
    return SplitState(rates, now)


def pick_path(state: SplitState, u: float) -> str:
    if not state.rates:
        raise ValueError("empty split state")
    acc = 0.0
    last = None
    for pid in sorted(state.rates):
        r = state.rates[pid]
        if r <= 0:
            continue
        acc += r
        last = pid
        if u < acc:
            return pid
    # u falls in the rounding gap just below 1
    return last


class Splitter:
    """Ingress-side splitter: holds the split state and applies ack rounds."""

    def __init__(self, path_ids, rng, now: float = 0.0):
        path_ids = list(path_ids)
        self.state = SplitState({p: 1.0 / len(path_ids) for p in sorted(path_ids)}, now)
        self.rng = rng
        self._pending: dict = {}
        self.rounds_applied = 0

    def pick(self) -> str:
        rates = self.state.rates
        if len(rates) == 1:
            return next(iter(rates))
        return pick_path(self.state, self.rng.random())

    def receive_ack(self, ack, now: float) -> bool:
        """Collect an ack; once the round's set is complete, refresh the rates."""
        got = self._pending.setdefault(ack.probe_seq, {})
        got[ack.path_id] = ack.sum
        if set(got) != set(ack.round_paths):
            return False
        del self._pending[ack.probe_seq]
        for seq in [s for s in self._pending if s < ack.probe_seq]:
            del self._pending[seq]
        self.state = compute_rates(got, now)
        self.rounds_applied += 1
        return True
