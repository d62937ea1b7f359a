"""Seeded Monte Carlo replications and policy x gamma x mode sweeps."""
from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .config import ExperimentConfig
from .engine import Counters, run_day

CSV_HEADER = ("policy", "route_mode", "gamma", "replications", "mean_error", "stderr")


@dataclass
class ReplicationResult:
    mean_error: float
    times: np.ndarray
    errors: np.ndarray
    counters: Counters
    seed: int
    index: int

    @property
    def blocking(self) -> float:
        c = self.counters
        return c.balked / c.arrivals if c.arrivals else 0.0


@dataclass(frozen=True)
class SweepRow:
    policy: str
    route_mode: str
    gamma: float
    replications: int
    mean_error: float
    stderr: float

    def as_tuple(self):
        return (self.policy, self.route_mode, self.gamma, self.replications,
                self.mean_error, self.stderr)


def time_avg_error(series, horizon: float | None = None) -> float:
    """Time average of a right-continuous step series of ``(t, e)`` pairs.

    Each value holds until the next timestamp and the last one until
    ``horizon`` (default: the last timestamp). The first value also covers
    ``[0, t_0)``.
    """
    arr = np.asarray(series, dtype=float).reshape(-1, 2)
    if arr.shape[0] == 0:
        raise ValueError("empty error series")
    t, e = arr[:, 0], arr[:, 1]
    if np.any(np.diff(t) < 0):
        raise ValueError("timestamps must be sorted")
    T = float(t[-1]) if horizon is None else float(horizon)
    if T <= 0:
        raise ValueError("averaging window must be positive")
    if t[0] < 0 or t[-1] > T:
        raise ValueError("timestamps must lie within [0, horizon]")
    widths = np.diff(np.concatenate(([0.0], t[1:], [T])))
    return float(np.dot(e, widths) / T)


def replication_seed(master_seed: int, index: int) -> np.random.SeedSequence:
    """Stream key for replication ``index``; distinct indices never share a stream."""
    return np.random.SeedSequence(master_seed, spawn_key=(index,))


def run_replication(config: ExperimentConfig, index: int = 0) -> ReplicationResult:
    day = run_day(config, replication_seed(config.seed, index))
    if day.errors.size:
        ebar = time_avg_error(np.column_stack((day.times, day.errors)), config.horizon)
    else:
        ebar = math.nan
    return ReplicationResult(ebar, day.times, day.errors, day.counters, config.seed, index)


def _mean_error(args) -> float:
    config, index = args
    return run_replication(config, index).mean_error


def summarize(values) -> tuple:
    """(mean, standard error) with stderr 0 for a single value."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise ValueError("no values to summarize")
    se = float(v.std(ddof=1) / math.sqrt(v.size)) if v.size > 1 else 0.0
    return float(v.mean()), se


def sweep_points(config: ExperimentConfig, gammas=None, policies=None, modes=None):
    gammas = config.gammas if gammas is None else gammas
    policies = config.policies if policies is None else policies
    modes = config.modes if modes is None else modes
    return [config.replace(policy=p, route_mode=m, gamma=g)
            for p in policies for m in modes for g in gammas]


def replicate(configs, replications: int, workers: int = 1, start: int = 0) -> list:
    """Mean errors per config, shape ``(len(configs), replications)``.

    Replication ``k`` of every config uses stream ``start + k``; results do not
    depend on worker count or completion order.
    """
    jobs = [(cfg, start + k) for cfg in configs for k in range(replications)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            flat = list(pool.map(_mean_error, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    else:
        flat = [_mean_error(job) for job in jobs]
    return [flat[i * replications:(i + 1) * replications] for i in range(len(configs))]


def sweep(config: ExperimentConfig, gammas=None, policies=None, modes=None,
          replications: int | None = None, workers: int | None = None,
          start: int = 0) -> list:
    """Aggregate rows ordered by policy, then route mode, then gamma."""
    reps = config.replications if replications is None else replications
    if reps < 1:
        raise ValueError("replications must be >= 1")
    points = sweep_points(config, gammas, policies, modes)
    results = replicate(points, reps, workers or config.workers, start)
    rows = []
    for cfg, values in zip(points, results):
        mean, se = summarize(values)
        rows.append(SweepRow(cfg.policy.value, cfg.route_mode.value, cfg.gamma, reps, mean, se))
    return rows


def format_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for r in rows:
        writer.writerow((r.policy, r.route_mode, repr(r.gamma), r.replications,
                         repr(r.mean_error), repr(r.stderr)))
    return buf.getvalue()
