import random

import mpmath
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from eeac_lb.qos_router import (ClassCode, ClassConfig, EmaState, Router, ServiceClass, Verdict,
                                WfqPort, ema_buffer_update, ema_rate_update)
from eeac_lb.traffic import DataPacket

EF, AF, BE = ServiceClass.EF, ServiceClass.AF, ServiceClass.BE
CAP = 4.5e6


def eq1_oracle(r_old, bits, tau, k=0.01):
    mpmath.mp.dps = 50
    w = mpmath.exp(-mpmath.mpf(tau) / mpmath.mpf(k))
    return (1 - w) * mpmath.mpf(bits) / mpmath.mpf(tau) + w * mpmath.mpf(r_old)


def pkt(cls=EF, i=0, t=0.0, bits=4000):
    return DataPacket(i, cls, t, bits)


def one_port_router(rate=CAP, **kw):
    r = Router("r", **kw)
    r.add_port("next", rate)
    return r


# -- codes ---------------------------------------------------------------

def test_wire_codes():
    assert [c.code.bits for c in (EF, AF, BE)] == ["00", "01", "10"]
    assert ClassCode.NONE.bits == "11"


# -- EMA -----------------------------------------------------------------

def test_rate_update_worked_example():
    s = ema_rate_update(EmaState(), 4000, 0.001)
    assert s.avg_rate_bps == pytest.approx(float(eq1_oracle(0, 4000, 0.001)), rel=1e-12)
    assert s.avg_rate_bps == pytest.approx(380650.0, abs=5)
    assert s.last_rate_update == 0.001


def test_rate_fixed_point():
    s = EmaState(avg_rate_bps=2e6, last_rate_update=1.0)
    ema_rate_update(s, 1000, 1.0005)
    assert s.avg_rate_bps == pytest.approx(2e6, rel=1e-12)


def test_rate_long_gap_forgets_history():
    s = EmaState(avg_rate_bps=9e9)
    ema_rate_update(s, 4000, 100.0)
    assert s.avg_rate_bps == pytest.approx(40.0)


def test_simultaneous_update_uses_tau_floor():
    s = EmaState(last_rate_update=1.0)
    ema_rate_update(s, 4000, 1.0)
    assert s.avg_rate_bps == pytest.approx(float(eq1_oracle(0, 4000, 1e-9)), rel=1e-9)


def test_rate_update_matches_high_precision_on_random_triples():
    rng = random.Random(2024)
    for _ in range(100):
        bits = rng.choice([400, 4000, rng.randrange(1, 12000)])
        tau = 10 ** rng.uniform(-6, 0)
        r_old = rng.uniform(0, 1e7)
        s = EmaState(avg_rate_bps=r_old, last_rate_update=3.0)
        ema_rate_update(s, bits, 3.0 + tau)
        # tau is recovered from a float subtraction; feed the oracle the same tau
        exact = eq1_oracle(r_old, bits, (3.0 + tau) - 3.0)
        assert mpmath.almosteq(s.avg_rate_bps, exact, rel_eps=mpmath.mpf("1e-10"))


def test_buffer_update_worked_example():
    s = ema_buffer_update(EmaState(), 10, 0.01)
    assert s.avg_buffer_pkts == pytest.approx(6.3212, abs=1e-4)
    assert s.avg_buffer_pkts == pytest.approx(10 * (1 - mpmath.exp(-1)), rel=1e-12)


def test_buffer_fixed_point():
    s = EmaState(avg_buffer_pkts=7.0)
    ema_buffer_update(s, 7, 0.3)
    assert s.avg_buffer_pkts == 7.0


def test_buffer_converges_geometrically():
    s = EmaState()
    w = mpmath.exp(-0.2)
    prev = 0.0
    for n in range(1, 60):
        ema_buffer_update(s, 12, n * 0.002)
        assert s.avg_buffer_pkts >= prev
        prev = s.avg_buffer_pkts
        assert s.avg_buffer_pkts == pytest.approx(float(12 * (1 - w ** n)), rel=1e-9)


@given(old=st.floats(0, 1e7), cur=st.floats(0, 1e7), tau=st.floats(1e-9, 10.0))
def test_buffer_update_is_convex_combination(old, cur, tau):
    s = EmaState(avg_buffer_pkts=old)
    ema_buffer_update(s, cur, tau)
    lo, hi = min(old, cur), max(old, cur)
    assert lo - 1e-9 * hi <= s.avg_buffer_pkts <= hi + 1e-9 * hi


@given(old=st.floats(0, 1e8), bits=st.integers(1, 12000), tau=st.floats(1e-7, 10.0))
def test_rate_update_is_convex_combination(old, bits, tau):
    s = EmaState(avg_rate_bps=old)
    ema_rate_update(s, bits, tau)
    cur = bits / tau
    lo, hi = min(old, cur), max(old, cur)
    assert lo * (1 - 1e-9) <= s.avg_rate_bps <= hi * (1 + 1e-9)


def test_rate_estimate_tracks_cbr_within_one_second():
    r = one_port_router()
    t = 0.0
    for i in range(1000):
        t = (i + 1) * 0.001
        assert r.enqueue_data(pkt(EF, i, t), t) is Verdict.ACCEPTED
        r.wfq_dequeue(t)
        r.complete()
    assert r.ema[EF].avg_rate_bps == pytest.approx(4e6, rel=0.01)


# -- enqueue / drops ------------------------------------------------------

def test_first_packet_accepted():
    r = one_port_router()
    assert r.enqueue_data(pkt(), 0.0) is Verdict.ACCEPTED
    assert r.qlen[EF] == 1 and len(r.ports["next"]) == 1


def test_average_above_depth_drops_and_freezes_average():
    r = one_port_router()
    r.ema[EF].avg_buffer_pkts = 25.0
    assert r.enqueue_data(pkt(), 0.0) is Verdict.DROPPED
    assert r.ema[EF].avg_buffer_pkts == 25.0
    assert r.drops[EF] == 1 and r.qlen[EF] == 0


def test_hard_cap_bounds_instantaneous_queue():
    r = one_port_router()
    verdicts = [r.enqueue_data(pkt(EF, i), 0.0) for i in range(30)]
    assert verdicts.count(Verdict.ACCEPTED) <= 24
    assert r.qlen[EF] <= 24 and r.drops[EF] >= 6


# -- WFQ -----------------------------------------------------------------

def test_single_class_is_served_at_full_rate():
    r = one_port_router(rate=4.5e6)
    for i in range(5):
        r.enqueue_data(pkt(BE, i), 0.0)
    t = 0.0
    for _ in range(5):
        p, t = r.wfq_dequeue(t)
        r.complete()
    assert t == pytest.approx(5 * 4000 / 4.5e6)
    assert r.wfq_dequeue(t) is None


def test_wfq_hand_simulated_order_weights_1_to_2():
    port = WfqPort("n", 1e6, [1.0, 2.0, 1.0])
    for i in range(5):
        port.push(0, ("A", i), 1000, 0.0)
    for i in range(5):
        port.push(1, ("B", i), 1000, 0.0)
    order = []
    while (item := port.pop()) is not None:
        order.append(item[1][0])
    # tags: A = 1,2,3,4,5 ; B = .5,1,1.5,2,2.5 (x1000), ties to the higher class
    assert "".join(order) == "BABBABBAAA"


def _saturate(weights, n_served, classes=(0, 1, 2)):
    port = WfqPort("n", 1e6, weights)
    t = 0.0
    for c in classes:
        for _ in range(3):
            port.push(c, c, 4000, t)
    bits = [0, 0, 0]
    for _ in range(n_served):
        c, _p = port.pop()
        bits[c] += 4000
        t += 4000 / 1e6
        port.push(c, c, 4000, t)
    return bits


def test_wfq_two_class_counts_1_to_2():
    bits = _saturate([1.0, 2.0, 1.0], 10**4, classes=(0, 1))
    assert bits[1] / bits[0] == pytest.approx(2.0, rel=0.01)


def test_wfq_shares_match_weights():
    bits = _saturate([0.22, 0.33, 0.44], 10**4)
    total = sum(bits)
    for b, w in zip(bits, (0.22, 0.33, 0.44)):
        assert b / total == pytest.approx(w / 0.99, rel=0.03)


def test_wfq_late_arrival_does_not_get_credit_for_idle_time():
    port = WfqPort("n", 1e6, [0.5, 0.5, 0.5])
    t = 0.0
    for _ in range(200):
        port.push(1, "AF", 1000, t)
        port.pop()
        t += 0.001
    # EF shows up after AF has been served alone; it should alternate, not monopolize
    for _ in range(10):
        port.push(0, "EF", 1000, t)
        port.push(1, "AF", 1000, t)
    served = [port.pop()[1] for _ in range(6)]
    assert served.count("EF") == 3


# -- admission test -------------------------------------------------------

def test_ef_available_below_allocation():
    r = one_port_router()
    r.ema[EF].avg_rate_bps = 5e5
    assert r.class_available(EF, CAP)


def test_availability_is_strict():
    r = one_port_router()
    r.ema[EF].avg_rate_bps = 0.22 * CAP
    assert r.ema[EF].avg_rate_bps == 990000.0
    assert not r.class_available(EF, CAP)


def test_cold_start_every_class_available():
    r = one_port_router()
    assert all(r.class_available(c, CAP) for c in (EF, AF, BE))
    assert r.grant_class(EF, CAP) is ClassCode.EF


def test_grant_downgrades_to_af():
    r = one_port_router()
    r.ema[EF].avg_rate_bps = 990000.0
    r.ema[AF].avg_rate_bps = 1e5
    assert r.grant_class(EF, CAP) is ClassCode.AF


def test_grant_none_when_all_saturated():
    r = one_port_router()
    for c, w in zip((EF, AF, BE), (0.22, 0.33, 0.44)):
        r.ema[c].avg_rate_bps = w * CAP
    assert r.grant_class(EF, CAP) is ClassCode.NONE


def test_rate_seen_at_later_time_decays():
    r = one_port_router()
    r.ema[EF].avg_rate_bps = 4e6
    r.ema[EF].last_rate_update = 1.0
    assert not r.class_available(EF, CAP, now=1.0)
    assert r.class_available(EF, CAP, now=1.5)


rates = st.floats(0, 5e6)


@settings(max_examples=200)
@given(r0=rates, r1=rates, r2=rates, which=st.integers(0, 2), bump=st.floats(0, 5e6),
       req=st.sampled_from([EF, AF, BE]))
def test_grant_is_monotone_in_rates(r0, r1, r2, which, bump, req):
    r = one_port_router()
    for c, v in zip((EF, AF, BE), (r0, r1, r2)):
        r.ema[c].avg_rate_bps = v
    before = r.grant_class(req, CAP)
    r.ema[which].avg_rate_bps += bump
    after = r.grant_class(req, CAP)
    assert int(after) >= int(before)


def test_class_config_validation():
    with pytest.raises(ValueError):
        ClassConfig(0.0, 10)
    with pytest.raises(ValueError):
        ClassConfig(0.2, 0)
