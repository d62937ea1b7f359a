"""Oracle checks behind ``parksense validate``.

Each check returns a :class:`CheckResult` with the measured deviation and the
tolerance it was held to. The oracles are written independently of the code
paths they exercise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .belief import EMPTY, OCCUPIED, BeliefState, SensorModel, decay, posterior_update
from .config import ExperimentConfig, PolicyId
from .engine import run_day
from .harness import replication_seed, run_replication
from .lot import RouteMode, build_grid_lot
from .policies import coverage_info_gain

# field-test likelihoods: P(reading | truth)
REFERENCE_LIKELIHOOD = {
    (OCCUPIED, True): 0.907,
    (EMPTY, True): 0.093,
    (OCCUPIED, False): 0.059,
    (EMPTY, False): 0.941,
}


@dataclass
class CheckResult:
    name: str
    passed: bool
    measured: float
    tolerance: float
    detail: dict = field(default_factory=dict)
    informational: bool = False

    def line(self) -> str:
        status = "INFO" if self.informational else ("PASS" if self.passed else "FAIL")
        extra = " ".join(f"{k}={_fmt(v)}" for k, v in self.detail.items())
        return f"[{status}] {self.name}: deviation={_fmt(self.measured)} tol={_fmt(self.tolerance)} {extra}".rstrip()


def _fmt(v):
    return f"{v:.6g}" if isinstance(v, float) else str(v)


def odds_ratio_posterior(p: float, obs: int, likelihood=REFERENCE_LIKELIHOOD) -> float:
    """Bayes rule in odds form: posterior odds = prior odds x likelihood ratio."""
    l_occ, l_free = likelihood[(obs, True)], likelihood[(obs, False)]
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    odds = p / (1.0 - p) * (l_occ / l_free)
    return odds / (1.0 + odds)


def check_bayes_grid(model: SensorModel | None = None, points: int = 1001,
                     tol: float = 1e-12) -> CheckResult:
    model = model or SensorModel()
    grid = np.linspace(0.0, 1.0, points)
    worst = 0.0
    for obs in (EMPTY, OCCUPIED):
        got = posterior_update(grid, obs, model)
        want = np.array([odds_ratio_posterior(float(p), obs) for p in grid])
        worst = max(worst, float(np.max(np.abs(got - want))))
    return CheckResult("bayes-grid", worst <= tol, worst, tol, {"points": points * 2})


def mmck_stationary(arrival_rate: float, service_rate: float, servers: int,
                    capacity: int) -> np.ndarray:
    """Stationary distribution of the M/M/c/K birth-death chain (K = c + queue)."""
    probs = [1.0]
    for k in range(1, capacity + 1):
        probs.append(probs[-1] * arrival_rate / (service_rate * min(k, servers)))
    probs = np.array(probs)
    return probs / probs.sum()


def _row_lot_document(n_spaces: int) -> dict:
    aisle, entrance, exit_ = n_spaces + 1, n_spaces + 2, n_spaces + 3
    return {
        "nodes": [{"id": s, "kind": "space"} for s in range(1, n_spaces + 1)]
        + [{"id": aisle, "kind": "aisle"}, {"id": entrance, "kind": "entrance"},
           {"id": exit_, "kind": "exit"}],
        "edges": [{"u": s, "v": aisle} for s in range(1, n_spaces + 1)]
        + [{"u": entrance, "v": aisle, "one_way": True},
           {"u": aisle, "v": exit_, "one_way": True}],
        "scan_adjacency": {str(aisle): list(range(1, n_spaces + 1))},
        "entrance": entrance,
        "exit": exit_,
    }


def check_queue(rate: float = 30.0, servers: int = 3, queue: int = 2, hours: float = 200.0,
                replications: int = 200, warmup: float = 10.0, seed: int = 0,
                sigmas: float = 3.0) -> CheckResult:
    """Simulated blocking probability against the birth-death value.

    Blocking is counted over ``[warmup, hours)`` so the empty start does not
    bias the steady-state estimate.
    """
    config = ExperimentConfig(
        lot={"document": _row_lot_document(servers)}, policy=PolicyId.NEAREST, gamma=0.0,
        rate_segments=(), base_rate=rate, mu=60.0, horizon=hours,
        queue_capacity=queue, track_error=False, seed=seed)
    analytic = float(mmck_stationary(rate, 1.0 / config.mean_dwell, servers, servers + queue)[-1])
    per_rep = []
    for k in range(replications):
        day = run_day(config, replication_seed(seed, k), snapshot_times=(warmup,))
        start, end = day.snapshots[warmup], day.counters
        arrived = end.arrivals - start.arrivals
        per_rep.append((end.balked - start.balked) / arrived if arrived else 0.0)
    per_rep = np.array(per_rep)
    mean = float(per_rep.mean())
    se = float(per_rep.std(ddof=1) / math.sqrt(replications))
    dev = abs(mean - analytic)
    return CheckResult("queue-blocking", dev <= sigmas * se, dev, sigmas * se,
                       {"simulated": mean, "analytic": analytic, "stderr": se,
                        "replications": replications})


def check_submodularity(trials: int = 1000, seed: int = 0, slack: float = 1e-12) -> CheckResult:
    """Diminishing returns of route information gain over sets of route nodes."""
    rng = np.random.default_rng(seed)
    lot = build_grid_lot(2, 3)
    belief = BeliefState(lot.n_spaces)
    belief.p[:] = rng.random(lot.n_spaces)
    nodes = lot.aisle_nodes + [lot.entrance, lot.exit]
    f = lambda s: coverage_info_gain(belief, s, lot, 0.0)  # noqa: E731
    violations, worst, non_monotone = 0, 0.0, 0
    for _ in range(trials):
        v = nodes[rng.integers(len(nodes))]
        rest = [x for x in nodes if x != v]
        B = [x for x in rest if rng.random() < 0.5]
        A = [x for x in B if rng.random() < 0.5]
        gain_a = f(A + [v]) - f(A)
        gain_b = f(B + [v]) - f(B)
        shortfall = gain_b - gain_a
        worst = max(worst, shortfall)
        if shortfall > slack:
            violations += 1
        if f(B) < f(A) - slack:
            non_monotone += 1
    return CheckResult("submodularity", violations == 0 and non_monotone == 0, worst, slack,
                       {"trials": trials, "violations": violations,
                        "monotonicity_violations": non_monotone})


def check_decay(beta: float = 0.9, tol: float = 1e-15, steps: int = 100) -> CheckResult:
    """Exact contraction toward 0.5 and the geometric rate of repeated decay.

    After ``steps`` unit decays a belief sits ``beta**steps * |p - 0.5|`` from
    0.5; the check holds every grid point to that bound (plus ``tol``).
    """
    ps = np.linspace(0.0, 1.0, 101)
    dts = np.array([0.0, 0.1, 0.5, 1.0, 2.0, 3.7, 10.0, 50.0])
    P, D = np.meshgrid(ps, dts)
    worst = float(np.max(np.abs(np.abs(decay(P, D, beta) - 0.5) - beta ** D * np.abs(P - 0.5))))
    x = ps.copy()
    for _ in range(steps):
        x = decay(x, 1.0, beta)
    bound = beta ** steps * np.abs(ps - 0.5)
    excess = float(np.max(np.abs(x - 0.5) - bound))
    return CheckResult("decay-contraction", worst <= tol and excess <= 1e-12, worst, tol,
                       {"max_distance_after_steps": float(np.max(np.abs(x - 0.5))),
                        "steps": steps, "rate_bound_excess": excess})


def error_spread(times, errors, horizon: float) -> float:
    """Time-weighted standard deviation of a step error series."""
    t = np.asarray(times, dtype=float)
    e = np.asarray(errors, dtype=float)
    w = np.diff(np.concatenate((t, [horizon])))
    mean = float(np.dot(w, e) / horizon)
    return math.sqrt(max(float(np.dot(w, (e - mean) ** 2) / horizon), 0.0))


def oscillation_report(replications: int = 100, gamma: float = 0.5, seed: int = 0,
                       policies=tuple(PolicyId)) -> CheckResult:
    """Within-day spread of e(t), one-way against two-way (reported, never failed)."""
    detail = {}
    smaller = 0
    for policy in policies:
        spread = {}
        for mode in (RouteMode.ONE_WAY, RouteMode.TWO_WAY):
            cfg = ExperimentConfig(policy=policy, route_mode=mode, gamma=gamma, seed=seed)
            values = []
            for k in range(replications):
                r = run_replication(cfg, k)
                values.append(error_spread(r.times, r.errors, cfg.horizon))
            spread[mode] = float(np.mean(values))
        detail[f"{policy.value}:one-way"] = spread[RouteMode.ONE_WAY]
        detail[f"{policy.value}:two-way"] = spread[RouteMode.TWO_WAY]
        smaller += spread[RouteMode.ONE_WAY] < spread[RouteMode.TWO_WAY]
    detail["policies_with_smaller_one_way_spread"] = f"{smaller}/{len(policies)}"
    return CheckResult("oscillation-one-vs-two-way", True, float(smaller), float(len(policies)),
                       detail, informational=True)


def run_all(replications: int = 100, model: SensorModel | None = None) -> list:
    return [
        check_bayes_grid(model),
        check_queue(),
        check_submodularity(),
        check_decay(),
        oscillation_report(replications),
    ]


__all__ = ["CheckResult", "check_bayes_grid", "check_queue", "check_submodularity",
           "check_decay", "oscillation_report", "mmck_stationary", "odds_ratio_posterior",
           "error_spread", "run_all"]
