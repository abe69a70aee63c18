"""Throughput and end-to-end delay measurement with windowed sampling."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

CSV_HEADER = ("t", "window_s", "throughput_pps", "mean_delay_s", "p95_delay_s",
              "drops_ef", "drops_af", "drops_be", "rate_path1", "rate_path2",
              "generated", "delivered", "in_flight")


@dataclass(frozen=True)
class StatsSample:
    t: float
    window_s: float
    throughput_pps: float
    mean_delay_s: float | None
    p95_delay_s: float | None
    drops: tuple
    split_rates: tuple
    generated: int
    delivered: int
    in_flight: int
    window_delivered: int = 0

    @property
    def dropped(self) -> int:
        return sum(self.drops)

    def conserved(self) -> bool:
        return self.generated == self.delivered + self.dropped + self.in_flight

    def row(self) -> list:
        def opt(x, fmt):
            return "" if x is None else format(x, fmt)
        r1, r2 = (tuple(self.split_rates) + (0.0, 0.0))[:2]
        return [format(self.t, ".6f"), format(self.window_s, ".6f"),
                format(self.throughput_pps, ".6f"), opt(self.mean_delay_s, ".9f"),
                opt(self.p95_delay_s, ".9f"), *map(str, self.drops),
                format(r1, ".6f"), format(r2, ".6f"),
                str(self.generated), str(self.delivered), str(self.in_flight)]


class MetricsCollector:
    def __init__(self, start: float = 0.0):
        self.window_start = start
        self.generated = 0
        self.delivered = 0
        self.drops = [0, 0, 0]
        self._win_count = 0
        self._win_delay_sum = 0.0
        self._delays: list = []
        self.samples: list = []

    def record_generated(self, n: int = 1) -> None:
        self.generated += n

    def record_drop(self, cls) -> None:
        self.drops[cls] += 1

    def record_delivery(self, pkt, now: float) -> float:
        delay = now - pkt.created_at
        if delay < 0:
            raise RuntimeError(f"packet {pkt.id} delivered before it was created")
        self.delivered += 1
        self._win_count += 1
        self._win_delay_sum += delay
        self._delays.append(delay)
        return delay

    def sample_window(self, now: float, in_flight: int = 0, split_rates=()) -> StatsSample:
        window = now - self.window_start
        n = self._win_count
        sample = StatsSample(
            t=now,
            window_s=window,
            throughput_pps=n / window if window > 0 else 0.0,
            mean_delay_s=self._win_delay_sum / n if n else None,
            p95_delay_s=float(np.percentile(self._delays, 95)) if self._delays else None,
            drops=tuple(self.drops),
            split_rates=tuple(split_rates),
            generated=self.generated,
            delivered=self.delivered,
            in_flight=in_flight,
            window_delivered=n,
        )
        self.samples.append(sample)
        self.window_start = now
        self._win_count = 0
        self._win_delay_sum = 0.0
        return sample

    def delay_percentiles(self, qs=(50, 95, 99)) -> dict:
        if not self._delays:
            return {q: None for q in qs}
        vals = np.percentile(self._delays, qs)
        return {q: float(v) for q, v in zip(qs, vals)}

    @property
    def mean_delay_s(self) -> float | None:
        return float(np.mean(self._delays)) if self._delays else None


def write_csv(samples, fh) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for s in samples:
        w.writerow(s.row())
