
import networkx as nx
import pytest

from eeac_lb.sim_core import Link
from eeac_lb.topology import NoPathError, Topology, default_topology, discover_paths


def topo(edges, routers, ingress, paths=None):
    return Topology("s", "d", tuple(routers),
                    tuple(Link(a, b, 1e6) for a, b in edges), ingress, paths)


def test_two_parallel_paths():
    t = topo([("s", "a"), ("a", "b1"), ("b1", "c1"), ("c1", "d"), ("a", "b2"), ("b2", "c2"),
              ("c2", "d")], ["a", "b1", "b2", "c1", "c2"], "a")
    assert discover_paths(t) == [("s", "a", "b1", "c1", "d"), ("s", "a", "b2", "c2", "d")]


def test_single_path_graph():
    t = topo([("s", "a"), ("a", "b"), ("b", "d")], ["a", "b"], "a")
    assert discover_paths(t, 2) == [("s", "a", "b", "d")]


def test_unreachable_destination():
    t = topo([("s", "a")], ["a"], "a")
    with pytest.raises(NoPathError):
        discover_paths(t)


def test_prefers_disjoint_over_shorter_overlap():
    # two short paths share a-b; the longer path avoids it
    edges = [("s", "a"), ("a", "b"), ("b", "d"), ("a", "x"), ("x", "b"),
             ("a", "y"), ("y", "z"), ("z", "d")]
    t = topo(edges, ["a", "b", "x", "y", "z"], "a")
    paths = discover_paths(t, 2)
    assert paths[0] == ("s", "a", "b", "d")
    assert paths[1] == ("s", "a", "y", "z", "d")


def test_explicit_paths_override_discovery():
    t = topo([("s", "a"), ("a", "d")], ["a"], "a", paths=(("s", "a", "d"),))
    assert discover_paths(t) == [("s", "a", "d")]


def brute_force_branches(t):
    g = t.graph()
    return sorted(tuple(p) for p in nx.all_simple_paths(g, t.source, t.destination))


def test_default_topology_paths():
    t = default_topology()
    found = discover_paths(t, 3)
    assert found == brute_force_branches(t)
    assert found[0] == ("source", "router2", "router0", "router1", "router5", "destination")
    assert found[1] == ("source", "router2", "router3", "router4", "router6", "destination")
    assert all(len(p) - 2 == 4 for p in found)


def test_default_topology_shape():
    t = default_topology()
    assert len(t.routers) == 7 and len(t.nodes) == 9
    assert {ln.capacity_bps for ln in t.links} == {4.5e6}
    assert t.ingress == "router2"
    assert t.validate() == []


def test_default_paths_are_simple_and_deterministic():
    t = default_topology()
    a, b = discover_paths(t), discover_paths(t)
    assert a == b
    for p in a:
        assert len(set(p)) == len(p) and p[0] == "source" and p[-1] == "destination"


def test_removing_router1_leaves_a_path():
    g = default_topology().graph()
    g.remove_node("router1")
    assert nx.has_path(g, "source", "destination")


def test_validation_messages():
    t = topo([("s", "a"), ("a", "q")], ["a"], "zz")
    errs = t.validate()
    assert any("unknown node 'q'" in e for e in errs)
    assert any("ingress" in e for e in errs)
