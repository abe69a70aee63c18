"""Network graph, candidate path discovery and the default scenario topology."""

from __future__ import annotations

from dataclasses import dataclass

import networkx as nx

from .sim_core import Link

LINK_BPS = 4.5e6


class NoPathError(ValueError):
    pass


@dataclass(frozen=True)
class Topology:
    """Source, destination and routers joined by full-duplex links.

    Each listed link carries traffic in both directions with the same
    capacity and delay; acks use the reverse direction.
    """

    source: str
    destination: str
    routers: tuple
    links: tuple
    ingress: str
    candidate_paths: tuple | None = None

    @property
    def nodes(self) -> tuple:
        return (self.source, *self.routers, self.destination)

    def graph(self) -> nx.Graph:
        g = nx.Graph()
        g.add_nodes_from(self.nodes)
        for ln in self.links:
            g.add_edge(ln.src, ln.dst, link=ln)
        return g

    def link(self, a: str, b: str) -> Link:
        for ln in self.links:
            if (ln.src, ln.dst) == (a, b):
                return ln
            if (ln.src, ln.dst) == (b, a):
                return ln.reversed()
        raise KeyError(f"no link {a}-{b}")

    def validate(self) -> list[str]:
        errs = []
        names = self.nodes
        if len(set(names)) != len(names):
            errs.append("topology.nodes: duplicate node id")
        known = set(names)
        for ln in self.links:
            for end in (ln.src, ln.dst):
                if end not in known:
                    errs.append(f"topology.links: unknown node {end!r}")
        if self.ingress not in self.routers:
            errs.append(f"topology.ingress: {self.ingress!r} is not a router")
        if not errs:
            g = self.graph()
            if not nx.has_path(g, self.source, self.destination):
                errs.append("topology: destination unreachable from source")
            if not g.has_edge(self.source, self.ingress) or g.degree(self.source) != 1:
                errs.append("topology.ingress: source must attach only to the ingress router")
            for path in self.candidate_paths or ():
                if len(set(path)) != len(path):
                    errs.append(f"topology.paths: {list(path)} is not simple")
                elif path[0] != self.source or path[-1] != self.destination:
                    errs.append(f"topology.paths: {list(path)} must run source to destination")
                elif not all(g.has_edge(a, b) for a, b in zip(path, path[1:])):
                    errs.append(f"topology.paths: {list(path)} uses a missing link")
        return errs


def _edges(path) -> set:
    return {frozenset(e) for e in zip(path, path[1:])}


def discover_paths(topo: Topology, k: int = 2) -> list:
    """Up to `k` simple source-to-destination paths.

    Stand-in for a full multipath routing algorithm: take the shortest path
    (hop count, then node sequence), then repeatedly the path sharing the
    fewest links with those already chosen, shortest first.
    """
    if topo.candidate_paths:
        return [tuple(p) for p in topo.candidate_paths][:k]
    g = topo.graph()
    if not nx.has_path(g, topo.source, topo.destination):
        raise NoPathError(f"no path from {topo.source} to {topo.destination}")
    pool = [tuple(p) for p in nx.all_simple_paths(g, topo.source, topo.destination)]
    chosen: list = []
    used: set = set()
    while pool and len(chosen) < k:
        best = min(pool, key=lambda p: (len(_edges(p) & used), len(p), p))
        chosen.append(best)
        used |= _edges(best)
        pool.remove(best)
    return chosen


def path_ids(paths) -> list:
    return [f"p{i + 1}" for i in range(len(paths))]


def default_topology(link_bps: float = LINK_BPS, prop_delay_s: float = 0.0) -> Topology:
    """Seven routers: router2 splits onto an upper chain through router1 and a lower chain.

    source - router2 - router0 - router1 - router5 - destination
                     \\ router3 - router4 - router6 /
    """
    chain = [("source", "router2"),
             ("router2", "router0"), ("router0", "router1"), ("router1", "router5"),
             ("router5", "destination"),
             ("router2", "router3"), ("router3", "router4"), ("router4", "router6"),
             ("router6", "destination")]
    links = tuple(Link(a, b, link_bps, prop_delay_s) for a, b in chain)
    routers = tuple(f"router{i}" for i in range(7))
    return Topology("source", "destination", routers, links, "router2")
