import math

import numpy as np
import pytest

from parksense.config import ArrivalProfile, ExperimentConfig, arrival_rate
from parksense.engine import run_day, sample_dwell, sample_next_arrival

SMALL = {"aisles": 2, "spaces_per_aisle_side": 3}


def row_lot(n):
    aisle, ent, ex = n + 1, n + 2, n + 3
    return {
        "nodes": [{"id": s, "kind": "space"} for s in range(1, n + 1)]
        + [{"id": aisle, "kind": "aisle"}, {"id": ent, "kind": "entrance"},
           {"id": ex, "kind": "exit"}],
        "edges": [{"u": s, "v": aisle} for s in range(1, n + 1)]
        + [{"u": ent, "v": aisle}, {"u": aisle, "v": ex}],
        "scan_adjacency": {str(aisle): list(range(1, n + 1))},
        "entrance": ent, "exit": ex,
    }


@pytest.mark.parametrize("t,rate", [(0.5, 288), (5.0, 144), (3.5, 120), (8.5, 288),
                                    (1.0, 72), (7.99, 72), (6.0, 120)])
def test_arrival_rate_examples(t, rate):
    assert arrival_rate(t) == rate


def test_arrival_rate_negative_time_raises():
    with pytest.raises(ValueError):
        arrival_rate(-0.1)


def test_minute_breakpoints():
    prof = ArrivalProfile(breakpoint_unit=1 / 60)
    assert prof(0.5 / 60) == 288
    assert prof(5 / 60) == 144
    assert prof(0.5) == 120


def test_gamma_one_gives_only_probes():
    rng = np.random.default_rng(0)
    prof = ArrivalProfile()
    t = 0.0
    for _ in range(500):
        t, probe = sample_next_arrival(t, prof, rng, 1.0)
        assert probe
    t = 0.0
    for _ in range(500):
        t, probe = sample_next_arrival(t, prof, rng, 0.0)
        assert not probe


def test_constant_rate_interarrival_mean():
    prof = ArrivalProfile(segments=(), base_rate=120.0)
    rng = np.random.default_rng(1)
    n = 20_000
    t, gaps = 0.0, []
    for _ in range(n):
        nxt, _ = sample_next_arrival(t, prof, rng, 0.5)
        gaps.append(nxt - t)
        t = nxt
    gaps = np.array(gaps)
    se = gaps.std(ddof=1) / math.sqrt(n)
    assert abs(gaps.mean() - 1 / 120) <= 3 * se


def test_nonhomogeneous_hourly_counts():
    prof = ArrivalProfile()
    rng = np.random.default_rng(2)
    reps = 200
    counts = np.zeros(9)
    for _ in range(reps):
        t = 0.0
        while True:
            t, _ = sample_next_arrival(t, prof, rng, 0.5, horizon=9.0)
            if t >= 9.0:
                break
            counts[int(t)] += 1
    expected = np.array([288, 72, 72, 120, 144, 144, 120, 72, 288], float)
    se = np.sqrt(expected / reps)
    assert np.all(np.abs(counts / reps - expected) <= 3.5 * se)


def test_zero_rate_never_arrives():
    prof = ArrivalProfile(segments=(), base_rate=0.0)
    assert sample_next_arrival(0.0, prof, np.random.default_rng(0), 0.5)[0] == math.inf


def test_dwell_distribution():
    rng = np.random.default_rng(3)
    d = np.array([sample_dwell(rng, 1.0) for _ in range(50_000)])
    assert np.all(d > 0)
    assert abs(d.mean() - 1.0) <= 3 * d.std(ddof=1) / math.sqrt(d.size)
    # memoryless: residual beyond 0.5 h has the same mean
    tail = d[d > 0.5] - 0.5
    assert abs(tail.mean() - 1.0) <= 3 * tail.std(ddof=1) / math.sqrt(tail.size)


def test_empty_rate_day_only_has_end_event():
    cfg = ExperimentConfig(lot=SMALL, rate_segments=(), base_rate=0.0, horizon=2.0)
    day = run_day(cfg, seed=0, trace=True)
    assert [ev.kind for ev in day.events] == ["end"]
    assert day.counters.arrivals == 0


def test_zero_queue_capacity_balks_when_full():
    cfg = ExperimentConfig(lot={"document": row_lot(2)}, queue_capacity=0, horizon=1.0,
                           rate_segments=(), base_rate=200.0, policy="nearest")
    day = run_day(cfg, seed=1, trace=True, check_invariants=True)
    assert day.counters.balked > 0
    assert "queue_promote" not in {ev.kind for ev in day.events}


@pytest.mark.parametrize("policy", ["random", "nearest", "max-satisfaction", "near-optimal"])
@pytest.mark.parametrize("mode", ["two-way", "one-way"])
def test_invariants_hold_every_step(policy, mode):
    cfg = ExperimentConfig(lot=SMALL, policy=policy, route_mode=mode, horizon=3.0)
    day = run_day(cfg, seed=4, check_invariants=True)
    c = day.counters
    assert c.arrivals == c.departures + c.balked + day.state.n
    assert np.all((day.errors >= 0) & (day.errors <= 1))


def test_no_probes_means_total_error():
    cfg = ExperimentConfig(lot=SMALL, gamma=0.0, horizon=2.0)
    day = run_day(cfg, seed=5, trace=True)
    assert "scan" not in {ev.kind for ev in day.events}
    assert np.all(day.errors == 1.0)


def test_determinism():
    cfg = ExperimentConfig(lot=SMALL, policy="near-optimal", horizon=2.0)
    a = run_day(cfg, seed=7)
    b = run_day(cfg, seed=7)
    assert np.array_equal(a.times, b.times) and np.array_equal(a.errors, b.errors)
    c = run_day(cfg, seed=8)
    assert not np.array_equal(a.errors, c.errors)


def test_trace_ordering():
    cfg = ExperimentConfig(lot=SMALL, horizon=2.0, queue_capacity=3)
    day = run_day(cfg, seed=9, trace=True)
    times = [ev.time for ev in day.events]
    assert times == sorted(times)
    started = set()
    for ev in day.events:
        if ev.kind in ("arrival", "balk"):
            started.add(ev.car)
        if ev.kind == "departure":
            assert ev.car in started
    assert day.events[-1].kind == "end" and day.events[-1].time == 2.0
    doc = day.events[0].to_json()
    assert "schema" in doc and "time" in doc


def test_initial_error_is_one():
    day = run_day(ExperimentConfig(lot=SMALL, horizon=1.0), seed=0)
    assert day.times[0] == 0.0 and day.errors[0] == 1.0


def test_small_queue_matches_birth_death_occupancy():
    # M/M/2/3 with lambda=2, mu=1: time-average count in system against the exact chain
    lam, servers, cap = 2.0, 2, 3
    cfg = ExperimentConfig(lot={"document": row_lot(servers)}, rate_segments=(), base_rate=lam,
                           queue_capacity=cap - servers, horizon=400.0, gamma=0.0,
                           policy="nearest", track_error=False)
    probs = [1.0]
    for k in range(1, cap + 1):
        probs.append(probs[-1] * lam / min(k, servers))
    probs = np.array(probs) / sum(probs)
    block = []
    for rep in range(30):
        day = run_day(cfg, seed=rep, snapshot_times=(20.0,))
        s, e = day.snapshots[20.0], day.counters
        block.append((e.balked - s.balked) / (e.arrivals - s.arrivals))
    block = np.array(block)
    se = block.std(ddof=1) / math.sqrt(block.size)
    assert abs(block.mean() - probs[-1]) <= 3 * se
