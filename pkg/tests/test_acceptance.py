"""Acceptance gate: one PASS/FAIL line per criterion.

Lines are printed as each test runs and repeated in the terminal summary.
The policy-ordering sweep is shared by criteria 5 and 6 and takes a few
minutes on one core.
"""
import json
import math
import time

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from parksense import checks
from parksense.belief import decay
from parksense.cli import main
from parksense.config import ExperimentConfig, PolicyId
from parksense.harness import replicate, run_replication, summarize

GAMMAS = (0.1, 0.5, 0.9)
MODES = ("two-way", "one-way")
REPS = 100


def report(number, passed, text):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {number}: {text}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def timed(fn, *args, **kwargs):
    t0 = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - t0


def test_criterion_1_bayes_oracle():
    res, secs = timed(checks.check_bayes_grid, points=1001, tol=1e-12)
    ok = res.passed and secs < 1.0
    assert report(1, ok, f"max |posterior - odds oracle| = {res.measured:.3g} (tol 1e-12), "
                         f"{secs:.2f} s (limit 1 s)")


def test_criterion_2_queue_blocking():
    res, secs = timed(checks.check_queue, rate=30.0, servers=3, queue=2, hours=200.0,
                      replications=200)
    d = res.detail
    ok = res.passed and secs < 30.0
    assert report(2, ok, f"blocking {d['simulated']:.5f} vs M/M/3/5 {d['analytic']:.5f}, "
                         f"|diff| {res.measured:.2g} <= 3 SE {res.tolerance:.2g}, "
                         f"{secs:.1f} s (limit 30 s)")


def test_criterion_3_submodularity():
    res, secs = timed(checks.check_submodularity, trials=1000, slack=1e-12)
    ok = res.passed and res.detail["violations"] == 0 and secs < 5.0
    assert report(3, ok, f"{res.detail['violations']} violations in 1000 triples, "
                         f"{secs:.2f} s (limit 5 s)")


def test_criterion_4_decay():
    beta = 0.9
    ps = np.linspace(0.0, 1.0, 1001)
    dts = np.linspace(0.0, 20.0, 201)
    P, D = np.meshgrid(ps, dts)
    exact = float(np.max(np.abs(np.abs(decay(P, D, beta) - 0.5) - beta ** D * np.abs(P - 0.5))))
    x = ps.copy()
    for _ in range(100):
        x = decay(x, 1.0, beta)
    worst = float(np.max(np.abs(x - 0.5)))
    ok = exact <= 1e-15 and worst <= 1e-6
    # the second clause cannot hold: 0.9**100 * 0.5 = 1.33e-5 at p in {0, 1}
    assert report(4, ok, f"contraction identity max dev {exact:.2g} (tol 1e-15); "
                         f"after 100 steps max |p - 0.5| = {worst:.3g} (tol 1e-6)")


@pytest.fixture(scope="module")
def ordering_sweep():
    base = ExperimentConfig(seed=0)
    policies = (PolicyId.NEAR_OPTIMAL, PolicyId.MAX_SATISFACTION, PolicyId.RANDOM)
    points = [(p, m, g) for p in policies for m in MODES for g in GAMMAS]
    cfgs = [base.replace(policy=p, route_mode=m, gamma=g) for p, m, g in points]
    t0 = time.perf_counter()
    values = replicate(cfgs, REPS, workers=base.workers)
    secs = time.perf_counter() - t0
    table = {(p.value, m, g): np.array(v) for (p, m, g), v in zip(points, values)}
    return table, secs


def test_criterion_5_policy_ordering(ordering_sweep):
    table, secs = ordering_sweep
    bad = []
    parts = []
    for m in MODES:
        for g in GAMMAS:
            no, ms = table["near-optimal", m, g], table["max-satisfaction", m, g]
            diff = ms.mean() - no.mean()
            se = math.hypot(summarize(no)[1], summarize(ms)[1])
            margin = 2 * se if g <= 0.5 else 0.0
            if not diff >= margin:
                bad.append((m, g))
            parts.append(f"{m} g={g}: {no.mean():.3f} vs {ms.mean():.3f}")
    ok = not bad and secs < 600
    assert report(5, ok, f"near-optimal <= max-satisfaction at {6 - len(bad)}/6 points; "
                         + "; ".join(parts) + f"; sweep {secs:.0f} s (limit 600 s)")


def test_criterion_6_low_penetration(ordering_sweep):
    table, _ = ordering_sweep
    parts, ok = [], True
    for m in MODES:
        drops = {}
        ses = {}
        for policy in ("near-optimal", "random"):
            lo, hi = table[policy, m, 0.1], table[policy, m, 0.9]
            drops[policy] = lo.mean() - hi.mean()
            ses[policy] = math.hypot(summarize(lo)[1], summarize(hi)[1])
        margin = 2 * math.hypot(ses["near-optimal"], ses["random"])
        ok &= drops["near-optimal"] + margin <= drops["random"]
        parts.append(f"{m}: drop near-optimal {drops['near-optimal']:.3f} "
                     f"vs random {drops['random']:.3f} (2 SE {margin:.3f})")
    assert report(6, ok, "; ".join(parts))


def test_criterion_7_error_dynamics():
    parts, ok = [], True
    for policy in PolicyId:
        cfg = ExperimentConfig(policy=policy, gamma=0.5)
        starts, finals = [], []
        for k in range(20):
            r = run_replication(cfg, k)
            starts.append(r.errors[0])
            t = np.concatenate((r.times, [cfg.horizon]))
            lo, hi = cfg.horizon - 1.0, cfg.horizon
            w = np.clip(t[1:], lo, hi) - np.clip(t[:-1], lo, hi)
            finals.append(float(np.dot(w, r.errors)))
        final = float(np.mean(finals))
        ok &= all(s == 1.0 for s in starts) and final < 0.8
        parts.append(f"{policy.value} e(0)={max(starts):.1f} last-hour {final:.3f}")
    assert report(7, ok, "; ".join(parts) + " (limit 0.8)")


def test_criterion_8_determinism(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"lot": {"aisles": 2, "spaces_per_aisle_side": 5},
                               "horizon": 2.0, "replications": 3, "seed": 5}))
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert main(["sweep", "--config", str(cfg), "--out", str(first)]) == 0
    manifest = tmp_path / "a.csv.manifest.json"
    assert main(["sweep", "--config", str(manifest), "--out", str(second)]) == 0
    capsys.readouterr()
    a, b = first.read_bytes(), second.read_bytes()
    ok = a == b and a.count(b"\n") == 73
    assert report(8, ok, f"manifest replay CSV identical: {a == b} ({len(a)} bytes, 72 rows)")


def test_criterion_9_oscillation_report():
    res = checks.oscillation_report(replications=REPS, gamma=0.5)
    d = res.detail
    spreads = "; ".join(f"{p.value} one-way {d[p.value + ':one-way']:.4f} "
                        f"two-way {d[p.value + ':two-way']:.4f}" for p in PolicyId)
    # informational: recorded, never failed
    assert report(9, res.informational and res.passed,
                  f"(informational) one-way spread smaller for "
                  f"{d['policies_with_smaller_one_way_spread']} policies; {spreads}")
