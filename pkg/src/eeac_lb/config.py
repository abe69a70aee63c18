"""Scenario configuration: dataclass, validation and YAML (de)serialization.

Every field has a default, so a scenario file only lists what differs from
the reference experiment. Schema (all keys optional)::

    name: str
    balancing: SINGLE_PATH | TWO_PATH
    duration_s: float            seed: int            stats_window_s: float
    probing_period_s: float      probe_bytes: int     data_bytes: int
    wfq_weights: [EF, AF, BE]    buffer_pkts: [EF, AF, BE]    k_s: float
    router_overrides: {router_id: service_rate_bps}
    max_paths: int               probe_class: EF | AF | BE
    probes_update_ema: bool      per_class_bottleneck: bool
    enforce_admission: bool
    sources:
      - model: CBR | PARETO_ONOFF
        rate_bps, start_time, on_scale, on_shape, off_scale, off_shape,
        interarrival_mean, packet_bytes, class_mix: {EF: 1.0}
    topology:
      source: str   destination: str   routers: [str]   ingress: str
      links: [{from: str, to: str, capacity_bps: float, prop_delay_s: float}]
      paths: [[node, ...]]       # optional, overrides path discovery
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import yaml

from .qos_router import ServiceClass
from .sim_core import Link
from .topology import Topology
from .traffic import SourceModel, SourceSpec


class ConfigError(ValueError):
    def __init__(self, errors):
        if isinstance(errors, str):
            errors = [errors]
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


class Balancing(str, Enum):
    SINGLE_PATH = "SINGLE_PATH"
    TWO_PATH = "TWO_PATH"


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    topology: Topology | None = None
    sources: list = field(default_factory=lambda: [SourceSpec()])
    probing_period_s: float = 0.5
    probe_bytes: int = 50
    data_bytes: int = 500
    wfq_weights: tuple = (0.22, 0.33, 0.44)
    buffer_pkts: tuple = (24, 53, 374)
    k_s: float = 0.01
    balancing: Balancing = Balancing.TWO_PATH
    router_overrides: dict = field(default_factory=dict)
    duration_s: float = 60.0
    seed: int = 0
    stats_window_s: float = 1.0
    max_paths: int = 3
    probe_class: ServiceClass = ServiceClass.EF
    probes_update_ema: bool = False
    per_class_bottleneck: bool = False
    enforce_admission: bool = False

    @property
    def n_select(self) -> int:
        return 1 if self.balancing is Balancing.SINGLE_PATH else 2

    def with_(self, **changes) -> "ScenarioConfig":
        return dataclasses.replace(self, **changes)

    def validate(self) -> None:
        errs = []
        for name in ("probing_period_s", "duration_s", "stats_window_s", "k_s"):
            if not getattr(self, name) > 0:
                errs.append(f"{name}: must be > 0")
        for name in ("probe_bytes", "data_bytes", "max_paths"):
            if getattr(self, name) <= 0:
                errs.append(f"{name}: must be > 0")
        if len(self.wfq_weights) != 3 or any(not w > 0 for w in self.wfq_weights):
            errs.append("wfq_weights: need three positive weights")
        elif sum(self.wfq_weights) > 1 + 1e-9:
            errs.append("wfq_weights: must sum to <= 1")
        if len(self.buffer_pkts) != 3 or any(b <= 0 for b in self.buffer_pkts):
            errs.append("buffer_pkts: need three positive depths")
        if self.seed < 0:
            errs.append("seed: must be >= 0")
        if not self.sources:
            errs.append("sources: at least one source required")
        for i, s in enumerate(self.sources):
            errs.extend(f"sources[{i}].{e}" for e in s.validate())
        topo = self.topology
        if topo is not None:
            errs.extend(topo.validate())
        routers = topo.routers if topo is not None else tuple(f"router{i}" for i in range(7))
        for rid, rate in self.router_overrides.items():
            if rid not in routers:
                errs.append(f"router_overrides.{rid}: unknown router")
            elif not rate > 0:
                errs.append(f"router_overrides.{rid}: service rate must be > 0")
        if errs:
            raise ConfigError(errs)


def _enum(cls, value, where):
    if isinstance(value, cls):
        return value
    try:
        return cls[str(value)]
    except KeyError:
        choices = ", ".join(m.name for m in cls)
        raise ConfigError(f"{where}: {value!r} is not one of {choices}") from None


def _check_keys(data: dict, allowed, where: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{where}: expected a mapping")
    extra = sorted(set(data) - set(allowed))
    if extra:
        raise ConfigError([f"{where}.{k}: unknown field" for k in extra])


_SOURCE_FIELDS = [f.name for f in dataclasses.fields(SourceSpec)]
_CONFIG_FIELDS = [f.name for f in dataclasses.fields(ScenarioConfig)]


def source_from_dict(d: dict, where: str, data_bytes: int = 500) -> SourceSpec:
    _check_keys(d, _SOURCE_FIELDS, where)
    kw = dict(d)
    kw["model"] = _enum(SourceModel, kw.get("model", "CBR"), f"{where}.model")
    kw.setdefault("packet_bytes", data_bytes)
    if "class_mix" in kw:
        mix = kw["class_mix"]
        _check_keys(mix, [c.name for c in ServiceClass], f"{where}.class_mix")
        kw["class_mix"] = {_enum(ServiceClass, c, f"{where}.class_mix"): float(f)
                           for c, f in mix.items()}
    for k in ("rate_bps", "start_time", "on_scale", "on_shape", "off_scale", "off_shape",
              "interarrival_mean"):
        if k in kw:
            kw[k] = float(kw[k])
    return SourceSpec(**kw)


def source_to_dict(s: SourceSpec) -> dict:
    d = dataclasses.asdict(s)
    d["model"] = s.model.name
    d["class_mix"] = {ServiceClass(c).name: f for c, f in s.class_mix.items()}
    return d


def topology_from_dict(d: dict) -> Topology:
    _check_keys(d, ["source", "destination", "routers", "ingress", "links", "paths"], "topology")
    for k in ("source", "destination", "routers", "ingress", "links"):
        if k not in d:
            raise ConfigError(f"topology.{k}: required")
    links = []
    for i, ln in enumerate(d["links"]):
        _check_keys(ln, ["from", "to", "capacity_bps", "prop_delay_s"], f"topology.links[{i}]")
        try:
            links.append(Link(str(ln["from"]), str(ln["to"]), float(ln["capacity_bps"]),
                              float(ln.get("prop_delay_s", 0.0))))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"topology.links[{i}]: {exc}") from None
    paths = d.get("paths")
    return Topology(str(d["source"]), str(d["destination"]),
                    tuple(str(r) for r in d["routers"]), tuple(links), str(d["ingress"]),
                    tuple(tuple(str(n) for n in p) for p in paths) if paths else None)


def topology_to_dict(t: Topology) -> dict:
    d = {"source": t.source, "destination": t.destination, "routers": list(t.routers),
         "ingress": t.ingress,
         "links": [{"from": ln.src, "to": ln.dst, "capacity_bps": ln.capacity_bps,
                    "prop_delay_s": ln.prop_delay_s} for ln in t.links]}
    if t.candidate_paths:
        d["paths"] = [list(p) for p in t.candidate_paths]
    return d


def config_from_dict(data: dict | None) -> ScenarioConfig:
    data = data or {}
    _check_keys(data, _CONFIG_FIELDS, "config")
    kw = dict(data)
    data_bytes = int(kw.get("data_bytes", 500))
    if "sources" in kw:
        if not isinstance(kw["sources"], list):
            raise ConfigError("sources: expected a list")
        kw["sources"] = [source_from_dict(s, f"sources[{i}]", data_bytes)
                         for i, s in enumerate(kw["sources"])]
    elif "data_bytes" in kw:
        kw["sources"] = [SourceSpec(packet_bytes=data_bytes)]
    if kw.get("topology") is not None:
        kw["topology"] = topology_from_dict(kw["topology"])
    if "balancing" in kw:
        kw["balancing"] = _enum(Balancing, kw["balancing"], "balancing")
    if "probe_class" in kw:
        kw["probe_class"] = _enum(ServiceClass, kw["probe_class"], "probe_class")
    for k in ("wfq_weights", "buffer_pkts"):
        if k in kw:
            kw[k] = tuple(kw[k])
    if "router_overrides" in kw:
        kw["router_overrides"] = {str(r): float(v)
                                  for r, v in (kw["router_overrides"] or {}).items()}
    for k in ("probing_period_s", "k_s", "duration_s", "stats_window_s"):
        if k in kw:
            kw[k] = float(kw[k])
    cfg = ScenarioConfig(**kw)
    cfg.validate()
    return cfg


def config_to_dict(cfg: ScenarioConfig) -> dict:
    d = {}
    for f in dataclasses.fields(cfg):
        v = getattr(cfg, f.name)
        if f.name == "topology":
            if v is not None:
                d["topology"] = topology_to_dict(v)
        elif f.name == "sources":
            d["sources"] = [source_to_dict(s) for s in v]
        elif isinstance(v, Enum):
            d[f.name] = v.name
        elif isinstance(v, tuple):
            d[f.name] = list(v)
        elif isinstance(v, dict):
            d[f.name] = dict(v)
        else:
            d[f.name] = v
    return d


def loads(text: str) -> ScenarioConfig:
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from None
    return config_from_dict(data)


def dumps(cfg: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def load(path) -> ScenarioConfig:
    return loads(Path(path).read_text())
