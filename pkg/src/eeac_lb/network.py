"""Wires routers, sources, probing and splitting into one simulated network."""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .config import ScenarioConfig
from .load_balancer import Splitter
from .metrics import MetricsCollector
from .probe_protocol import PathInfo, ProbingAgent, fold_bottleneck
from .qos_router import ClassCode, ClassConfig, Router, Verdict, ema_buffer_update, ema_rate_update
from .sim_core import Engine, EventKind, rng_stream, transmit
from .topology import default_topology, discover_paths, path_ids
from .traffic import ClassPicker, DataPacket, departures

log = logging.getLogger(__name__)

ARRIVAL = EventKind.PACKET_ARRIVAL
DONE = EventKind.SERVICE_COMPLETION


class _Source:
    __slots__ = ("index", "times", "pick", "bits", "next_id", "src", "dst")

    def __init__(self, index, times, pick, bits, src, dst):
        self.index = index
        self.times = times
        self.pick = pick
        self.bits = bits
        self.next_id = 0
        self.src = src
        self.dst = dst


@dataclass(frozen=True)
class RunResult:
    samples: list
    generated: int
    delivered: int
    dropped: int
    drops_by_class: tuple
    mean_throughput_pps: float
    mean_delay_s: float | None
    delay_percentiles: dict
    path_counts: dict
    events: int


class Network:
    """One simulation run of a scenario; construct a fresh instance per run."""

    def __init__(self, config: ScenarioConfig, seed: int | None = None):
        config.validate()
        self.config = config
        self.seed = config.seed if seed is None else seed
        self.engine = Engine()
        self.topology = topo = config.topology or default_topology()

        paths = discover_paths(topo, config.max_paths)
        if config.n_select == 1:
            paths = paths[:1]
        self.paths = {pid: PathInfo(pid, hops) for pid, hops in zip(path_ids(paths), paths)}
        self.path_order = list(self.paths)

        classes = [ClassConfig(w, b) for w, b in zip(config.wfq_weights, config.buffer_pkts)]
        self.routers = {r: Router(r, classes, k=config.k_s) for r in topo.routers}
        for info in self.paths.values():
            for a, b in zip(info.hops[1:-1], info.hops[2:]):
                router = self.routers[a]
                if b not in router.ports:
                    ln = topo.link(a, b)
                    router.add_port(b, ln.capacity_bps,
                                    config.router_overrides.get(a, ln.capacity_bps),
                                    ln.prop_delay_s)

        self.metrics = MetricsCollector()
        self.splitter = Splitter(self.path_order[:config.n_select],
                                 rng_stream(self.seed, "splitter"))
        self.agent = ProbingAgent(self.path_order, config.n_select, config.probing_period_s,
                                  config.probe_class)
        self.granted = {}
        self.path_counts = {pid: 0 for pid in self.path_order}
        self.probe_bits = config.probe_bytes * 8
        self.on_wire = 0

        self._host_link = topo.link(topo.source, topo.ingress)
        self._host_free = 0.0
        self._dest = topo.destination

        self.sources = []
        for i, spec in enumerate(config.sources):
            times = departures(spec, rng_stream(self.seed, f"source{i}"), config.duration_s)
            pick = ClassPicker(spec.class_mix, rng_stream(self.seed, f"source{i}/class"))
            self.sources.append(_Source(i, times, pick, spec.packet_bits, topo.source,
                                        topo.destination))
        self._started = False

    # -- setup ---------------------------------------------------------------

    def _bootstrap(self) -> None:
        eng = self.engine
        cfg = self.config
        end = cfg.duration_s
        w = cfg.stats_window_s
        n = 1
        while n * w < end - 1e-12:
            eng.schedule(n * w, EventKind.STATS_SAMPLE, self._on_stats)
            n += 1
        eng.schedule(end, EventKind.STATS_SAMPLE, self._on_stats)
        n = 0
        while n * cfg.probing_period_s < end:
            eng.schedule(n * cfg.probing_period_s, EventKind.PROBE_TIMER, self._on_probe_round)
            n += 1
        for src in self.sources:
            self._schedule_next(src)

    def _schedule_next(self, src: _Source) -> None:
        t = next(src.times, None)
        if t is not None:
            self.engine.schedule(t, EventKind.SOURCE_TIMER, self._on_source, src)

    # -- data path -------------------------------------------------------------

    def _on_source(self, src: _Source) -> None:
        now = self.engine.now
        cls = src.pick()
        pkt = DataPacket(src.next_id, cls, now, src.bits, src.src, src.dst, cls)
        src.next_id += 1
        self.metrics.generated += 1
        self.engine.counts.generated += 1
        depart = now if now > self._host_free else self._host_free
        arrive = transmit(self._host_link, pkt.size_bits, depart)
        self._host_free = arrive - self._host_link.prop_delay_s
        self.on_wire += 1
        self.engine.schedule(arrive, ARRIVAL, self._on_ingress, pkt)
        self._schedule_next(src)

    def _on_ingress(self, pkt: DataPacket) -> None:
        self.on_wire -= 1
        pid = self.splitter.pick()
        pkt.path_id = pid
        pkt.route = self.paths[pid].hops
        pkt.hop = 1
        self.path_counts[pid] += 1
        if self.config.enforce_admission:
            granted = self.granted.get(pid, ClassCode(pkt.requested))
            if granted is ClassCode.NONE:
                self._drop(pkt)
                return
            pkt.cls = max(pkt.requested, granted.service_class())
        self._at_router(pkt)

    def _drop(self, pkt: DataPacket) -> None:
        self.metrics.drops[pkt.cls] += 1
        self.engine.counts.dropped += 1

    def _at_router(self, pkt: DataPacket) -> None:
        router = self.routers[pkt.route[pkt.hop]]
        nxt = pkt.route[pkt.hop + 1]
        now = self.engine.now
        if router.enqueue_data(pkt, now, nxt) is Verdict.DROPPED:
            self._drop(pkt)
            return
        port = router.ports[nxt]
        if port.in_service is None:
            self._start(router, port, now)

    def _start(self, router: Router, port, now: float) -> None:
        pkt, finish = router.wfq_dequeue(now, port.next_hop)
        self.engine.schedule(finish, DONE, self._on_done, (router, port))

    def _on_done(self, item) -> None:
        router, port = item
        pkt = port.in_service
        port.in_service = None
        now = self.engine.now
        if len(port):
            self._start(router, port, now)
        pkt.hop += 1
        if port.prop_delay_s > 0:
            self.on_wire += 1
            self.engine.schedule(now + port.prop_delay_s, ARRIVAL, self._on_wire_arrival, pkt)
        else:
            self._arrive(pkt)

    def _on_wire_arrival(self, pkt: DataPacket) -> None:
        self.on_wire -= 1
        self._arrive(pkt)

    def _arrive(self, pkt: DataPacket) -> None:
        if pkt.route[pkt.hop] == self._dest:
            self.metrics.record_delivery(pkt, self.engine.now)
            self.engine.counts.delivered += 1
        else:
            self._at_router(pkt)

    # -- probing -------------------------------------------------------------

    def _on_probe_round(self, _=None) -> None:
        now = self.engine.now
        for probe in self.agent.start_round(now):
            hops = self.paths[probe.path_id].hops
            ln = self.topology.link(hops[0], hops[1])
            self.engine.schedule(transmit(ln, self.probe_bits, now), ARRIVAL,
                                 self._on_probe_hop, (probe, hops, 1))
        seq = self.agent.next_seq - 1
        self.engine.schedule(now + self.agent.timeout_s, EventKind.PROBE_TIMER,
                             self._on_probe_timeout, seq)

    def _on_probe_hop(self, item) -> None:
        probe, hops, idx = item
        now = self.engine.now
        node = hops[idx]
        if node == self._dest:
            self._send_acks(self.agent.on_probe(probe, now))
            return
        router = self.routers[node]
        ln = self.topology.link(node, hops[idx + 1])
        if self.config.probes_update_ema:
            cls = int(probe.requested)
            ema_buffer_update(router.ema[cls], router.qlen[cls], now)
            ema_rate_update(router.ema[cls], self.probe_bits, now)
        probe = fold_bottleneck(probe, router, now, ln.capacity_bps,
                                per_class=self.config.per_class_bottleneck)
        self.engine.schedule(transmit(ln, self.probe_bits, now), ARRIVAL,
                             self._on_probe_hop, (probe, hops, idx + 1))

    def _on_probe_timeout(self, seq: int) -> None:
        self._send_acks(self.agent.on_timeout(seq, self.engine.now))

    def _send_acks(self, acks) -> None:
        now = self.engine.now
        for ack in acks:
            info = self.paths[ack.path_id]
            info.last_sum = ack.sum
            back = info.hops[::-1]
            t = now
            for a, b in zip(back, back[1:]):
                t = transmit(self.topology.link(a, b), ack.size_bits, t)
                if b == self.topology.ingress:
                    break
            self.engine.schedule(t, ARRIVAL, self._on_ack, ack)

    def _on_ack(self, ack) -> None:
        self.granted[ack.path_id] = ack.granted
        if self.splitter.receive_ack(ack, self.engine.now):
            rates = self.splitter.state.rates
            for pid, info in self.paths.items():
                info.selected = pid in rates
                info.split_rate = rates.get(pid, 0.0)

    # -- stats ---------------------------------------------------------------

    def in_flight(self) -> int:
        n = self.on_wire
        for r in self.routers.values():
            n += r.qlen[0] + r.qlen[1] + r.qlen[2]
            for port in r.ports.values():
                if port.in_service is not None:
                    n += 1
        return n

    def split_rates(self) -> tuple:
        rates = self.splitter.state.rates
        return tuple(rates.get(pid, 0.0) for pid in self.path_order)

    def _on_stats(self, _=None) -> None:
        s = self.metrics.sample_window(self.engine.now, self.in_flight(), self.split_rates())
        if not s.conserved():
            raise RuntimeError(f"packet conservation violated at t={s.t}")

    # -- driver --------------------------------------------------------------

    def run(self) -> RunResult:
        if self._started:
            raise RuntimeError("a Network instance runs once; build a new one")
        self._started = True
        self._bootstrap()
        self.engine.run_until(self.config.duration_s)
        m = self.metrics
        start = min(s.start_time for s in self.config.sources)
        active = [s for s in m.samples if s.t - s.window_s >= start - 1e-9 and s.window_s > 0]
        thr = (sum(s.window_delivered for s in active) / sum(s.window_s for s in active)
               if active else 0.0)
        c = self.engine.counts
        log.debug("run done: %d events, %d generated", self.engine.dispatched, c.generated)
        return RunResult(
            samples=m.samples,
            generated=c.generated,
            delivered=c.delivered,
            dropped=c.dropped,
            drops_by_class=tuple(m.drops),
            mean_throughput_pps=thr,
            mean_delay_s=m.mean_delay_s,
            delay_percentiles=m.delay_percentiles(),
            path_counts=dict(self.path_counts),
            events=self.engine.dispatched,
        )


def simulate(config: ScenarioConfig, seed: int | None = None) -> RunResult:
    return Network(config, seed).run()
