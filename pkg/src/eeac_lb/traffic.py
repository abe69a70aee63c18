"""Packet sources: constant bit rate and Pareto ON/OFF (self-similar)."""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator

from .qos_router import ServiceClass


class SourceModel(str, Enum):
    CBR = "CBR"
    PARETO_ONOFF = "PARETO_ONOFF"


@dataclass(slots=True)
class DataPacket:
    id: int
    cls: ServiceClass
    created_at: float
    size_bits: int = 4000
    src: str = "source"
    dst: str = "destination"
    requested: ServiceClass = ServiceClass.EF
    path_id: str | None = None
    route: tuple = ()
    hop: int = 0


@dataclass
class SourceSpec:
    """Traffic source parameters.

    Pareto parameters use the (scale, shape) convention: ``scale`` is the
    minimum value and ``shape`` the tail index, so pareto(40, 1.4) has mean
    40 * 1.4 / 0.4 = 140 s.
    """

    model: SourceModel = SourceModel.CBR
    rate_bps: float = 4.0e6
    start_time: float = 5.0
    on_scale: float = 40.0
    on_shape: float = 1.4
    off_scale: float = 1.0
    off_shape: float = 1.4
    interarrival_mean: float = 0.001
    packet_bytes: int = 500
    class_mix: dict = field(default_factory=lambda: {ServiceClass.EF: 1.0})

    @property
    def packet_bits(self) -> int:
        return int(self.packet_bytes) * 8

    def validate(self) -> list[str]:
        """Field-level problems, empty when the spec is usable."""
        errs = []
        if self.start_time < 0:
            errs.append("start_time: must be >= 0")
        if self.packet_bytes <= 0:
            errs.append("packet_bytes: must be > 0")
        if self.model is SourceModel.CBR:
            if not self.rate_bps > 0:
                errs.append("rate_bps: must be > 0 for CBR")
        else:
            for name in ("on_scale", "off_scale", "interarrival_mean"):
                if not getattr(self, name) > 0:
                    errs.append(f"{name}: must be > 0")
            for name in ("on_shape", "off_shape"):
                if not getattr(self, name) > 1:
                    errs.append(f"{name}: must be > 1 (finite mean)")
        if not self.class_mix:
            errs.append("class_mix: must not be empty")
        else:
            for cls, frac in self.class_mix.items():
                if not 0.0 <= frac <= 1.0:
                    errs.append(f"class_mix.{ServiceClass(cls).name}: fraction outside [0, 1]")
            if abs(sum(self.class_mix.values()) - 1.0) > 1e-9:
                errs.append("class_mix: fractions must sum to 1")
        return errs


def cbr_next_departure(spec: SourceSpec, prev: float) -> float:
    if spec.model is not SourceModel.CBR:
        raise ValueError("cbr_next_departure needs a CBR source")
    return prev + spec.packet_bits / spec.rate_bps


def pareto_sample(scale: float, shape: float, u: float) -> float:
    """Inverse-CDF Pareto draw; u must lie strictly inside (0, 1)."""
    if not 0.0 < u < 1.0:
        raise ValueError("u must be in the open interval (0, 1)")
    return scale * u ** (-1.0 / shape)


def _open_uniform(rng: random.Random) -> float:
    u = rng.random()
    while u == 0.0:
        u = rng.random()
    return u


def cbr_departures(spec: SourceSpec, horizon: float) -> Iterator[float]:
    t = spec.start_time
    while t < horizon:
        yield t
        t = cbr_next_departure(spec, t)


def onoff_departures(spec: SourceSpec, rng: random.Random, horizon: float) -> Iterator[float]:
    """Departure times of a Pareto ON/OFF source with Poisson emission while ON.

    A gap that would cross the end of an ON period is discarded.
    """
    lam = 1.0 / spec.interarrival_mean
    on_start = spec.start_time
    while on_start < horizon:
        on_end = on_start + pareto_sample(spec.on_scale, spec.on_shape, _open_uniform(rng))
        t = on_start
        while True:
            t += rng.expovariate(lam)
            if t >= on_end or t >= horizon:
                break
            yield t
        if spec.off_scale > 0:
            on_start = on_end + pareto_sample(spec.off_scale, spec.off_shape, _open_uniform(rng))
        else:
            on_start = on_end


def departures(spec: SourceSpec, rng: random.Random, horizon: float) -> Iterator[float]:
    if spec.model is SourceModel.CBR:
        return cbr_departures(spec, horizon)
    return onoff_departures(spec, rng, horizon)


class ClassPicker:
    """Draws a requested class from a class mix; no draw for single-class mixes."""

    def __init__(self, class_mix: dict, rng: random.Random | None):
        items = sorted((ServiceClass(c), f) for c, f in class_mix.items() if f > 0)
        self.classes = [c for c, _ in items]
        self.cum = []
        acc = 0.0
        for _, f in items:
            acc += f
            self.cum.append(acc)
        self.rng = rng

    def __call__(self) -> ServiceClass:
        if len(self.classes) == 1:
            return self.classes[0]
        u = self.rng.random() * self.cum[-1]
        for cls, edge in zip(self.classes, self.cum):
            if u < edge:
                return cls
        return self.classes[-1]


def onoff_emit_schedule(spec: SourceSpec, rng: random.Random, horizon: float,
                        class_rng: random.Random | None = None, src: str = "source",
                        dst: str = "destination", first_id: int = 0) -> Iterator[DataPacket]:
    if spec.model is not SourceModel.PARETO_ONOFF:
        raise ValueError("onoff_emit_schedule needs a PARETO_ONOFF source")
    yield from emit_packets(spec, onoff_departures(spec, rng, horizon), class_rng,
                            src, dst, first_id)


def emit_packets(spec: SourceSpec, times, class_rng=None, src="source", dst="destination",
                 first_id: int = 0) -> Iterator[DataPacket]:
    pick = ClassPicker(spec.class_mix, class_rng)
    bits = spec.packet_bits
    pid = first_id
    for t in times:
        cls = pick()
        yield DataPacket(pid, cls, t, bits, src, dst, cls)
        pid += 1
