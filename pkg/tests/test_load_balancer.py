import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

from eeac_lb.load_balancer import SplitState, Splitter, compute_rates, pick_path
from eeac_lb.probe_protocol import AckPacket
from eeac_lb.qos_router import ClassCode
from eeac_lb.sim_core import rng_stream


def test_rates_proportional():
    assert compute_rates({"p1": 125, "p2": 375}).rates == {"p1": 0.25, "p2": 0.75}


def test_rates_symmetric():
    assert compute_rates({"p1": 200, "p2": 200}).rates == {"p1": 0.5, "p2": 0.5}


def test_rates_all_zero_fall_back_to_uniform():
    assert compute_rates({"p1": 0, "p2": 0}).rates == {"p1": 0.5, "p2": 0.5}


def test_rates_empty_is_error():
    with pytest.raises(ValueError):
        compute_rates({})


def test_pick_interval_membership():
    s = SplitState({"p1": 0.25, "p2": 0.75})
    assert pick_path(s, 0.3) == "p2"
    assert pick_path(s, 0.2499) == "p1"


def test_pick_degenerate_rates():
    s = SplitState({"p1": 1.0, "p2": 0.0})
    assert {pick_path(s, u / 100) for u in range(100)} == {"p1"}
    assert pick_path(s, 0.9999999999999999) == "p1"


def test_zero_rate_path_never_picked():
    s = SplitState({"p1": 0.0, "p2": 1.0})
    assert {pick_path(s, u / 1000) for u in range(1000)} == {"p2"}


def test_splitter_empirical_fraction():
    s = SplitState({"p1": 0.25, "p2": 0.75})
    rng = rng_stream(0, "splitter")
    n = 10**6
    hits = sum(pick_path(s, rng.random()) == "p1" for _ in range(n))
    sigma = math.sqrt(0.25 * 0.75 / n)
    assert abs(hits / n - 0.25) <= 3 * sigma


sums = st.dictionaries(st.sampled_from(["p1", "p2", "p3"]),
                       st.floats(0, 1000, allow_nan=False), min_size=1, max_size=2)


@given(sums)
def test_rates_sum_to_one(s):
    rates = compute_rates(s).rates
    assert abs(sum(rates.values()) - 1.0) <= 2 * math.ulp(1.0)
    assert all(0.0 <= r <= 1.0 for r in rates.values())


@given(sums, st.floats(1e-3, 1e3))
def test_rates_scale_invariant(s, c):
    a = compute_rates(s).rates
    b = compute_rates({k: v * c for k, v in s.items()}).rates
    for k in a:
        assert a[k] == pytest.approx(b[k], rel=1e-12, abs=1e-12)


@given(sums, st.floats(0, 1, exclude_max=True))
def test_pick_is_pure(s, u):
    state = compute_rates(s)
    assert pick_path(state, u) == pick_path(state, u)


def test_splitter_applies_complete_rounds_only():
    sp = Splitter(["p1", "p2"], rng_stream(0, "splitter"))
    assert sp.state.rates == {"p1": 0.5, "p2": 0.5}
    a1 = AckPacket("p1", 0, 125, ClassCode.EF, ("p1", "p2"))
    a2 = AckPacket("p2", 0, 375, ClassCode.EF, ("p1", "p2"))
    assert not sp.receive_ack(a1, 0.1)
    assert sp.state.rates == {"p1": 0.5, "p2": 0.5}
    assert sp.receive_ack(a2, 0.1)
    assert sp.state.rates == {"p1": 0.25, "p2": 0.75}


def test_single_path_splitter_consumes_no_draws():
    sp = Splitter(["p1"], rng_stream(0, "splitter"))
    before = sp.rng.getstate()
    assert {sp.pick() for _ in range(10)} == {"p1"}
    assert sp.rng.getstate() == before
