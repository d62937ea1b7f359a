"""Discrete-event simulation of one day in the lot.

Arrivals form a nonhomogeneous Poisson process (sampled by thinning), parking
times are exponential, the lot has ``N`` spaces and a FIFO waiting queue of
capacity ``C``; cars that find the queue full leave at once. Probe cars scan
the spaces along their arrival and departure routes and report their own
space with certainty. Driving takes no simulated time.
"""
from __future__ import annotations

import heapq
import math
from collections import deque
from dataclasses import asdict, dataclass, field

import numpy as np

from .belief import BeliefState, apply_scan, estimation_error
from .config import ArrivalProfile, ExperimentConfig, build_lot
from .lot import LotGraph
from . import policies

TRACE_SCHEMA = 1

FREE, PROBE, NORMAL = 0, 1, 2


@dataclass
class Car:
    id: int
    probe: bool
    arrival: float
    space: int | None = None
    departure: float | None = None


@dataclass
class Counters:
    arrivals_probe: int = 0
    arrivals_normal: int = 0
    departures_probe: int = 0
    departures_normal: int = 0
    balked: int = 0

    @property
    def arrivals(self) -> int:
        return self.arrivals_probe + self.arrivals_normal

    @property
    def departures(self) -> int:
        return self.departures_probe + self.departures_normal

    def as_dict(self) -> dict:
        return asdict(self)


class SystemState:
    """Ground truth: per-space marks, cars in system, queue."""

    def __init__(self, n_spaces: int, capacity: int):
        self.X = np.zeros(n_spaces, dtype=np.int8)
        self.t_dep = np.full(n_spaces, math.inf)
        self.n = 0
        self.c = 0
        self.capacity = capacity
        self.queue: deque = deque()
        self.n_parked = 0

    @property
    def n_spaces(self) -> int:
        return self.X.size

    @property
    def occupied(self) -> np.ndarray:
        return self.X != FREE

    def check(self) -> None:
        parked = int(np.count_nonzero(self.X))
        assert parked == self.n_parked
        assert self.n == parked + self.c, "n must equal parked cars plus queue"
        assert 0 <= self.c <= self.capacity and self.c == len(self.queue)
        assert self.n <= self.n_spaces + self.capacity
        assert np.array_equal(np.isinf(self.t_dep), self.X == FREE)


@dataclass
class SimEvent:
    time: float
    kind: str  # arrival, assignment, departure, balk, queue_promote, scan, end
    car: int | None = None
    space: int | None = None
    probe: bool | None = None
    obs: int | None = None
    error: float | None = None
    beliefs: list | None = None

    def to_json(self) -> dict:
        out = {"schema": TRACE_SCHEMA}
        out.update({k: v for k, v in asdict(self).items() if v is not None})
        return out


@dataclass
class DayResult:
    times: np.ndarray
    errors: np.ndarray
    counters: Counters
    state: SystemState
    belief: BeliefState
    events: list = field(default_factory=list)
    snapshots: dict = field(default_factory=dict)


def sample_next_arrival(t: float, rate_fn, rng: np.random.Generator, gamma: float,
                        max_rate: float | None = None, horizon: float = math.inf):
    """Next arrival after ``t`` by thinning, and whether it is a probe car.

    Returns ``(time, probe)``. The time may lie past ``horizon``; the search
    stops there so a rate that vanishes late in the day cannot loop forever.
    """
    if max_rate is None:
        max_rate = rate_fn.max_rate
    if max_rate <= 0:
        return math.inf, False
    while True:
        t += rng.exponential(1.0 / max_rate)
        if t >= horizon:
            return t, False
        if rng.random() * max_rate < rate_fn(t):
            break
    return t, bool(rng.random() < gamma)


def sample_dwell(rng: np.random.Generator, mean: float = 1.0) -> float:
    """Exponential parking time in hours."""
    return rng.exponential(mean)


def make_streams(seed) -> dict:
    """Independent generators for arrivals, parking times, sensing and policy."""
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    names = ("arrivals", "dwell", "sensor", "policy")
    return {name: np.random.default_rng(child) for name, child in zip(names, ss.spawn(len(names)))}


def run_day(config: ExperimentConfig, seed=0, lot: LotGraph | None = None, *,
            trace: bool = False, trace_beliefs: bool = False,
            check_invariants: bool = False, snapshot_times=()) -> DayResult:
    """Simulate ``[0, config.horizon)`` and record e(t) after every event.

    ``times``/``errors`` start with the initial state at t=0. With ``trace``
    the full event list is kept as :class:`SimEvent` records.
    ``snapshot_times`` asks for copies of the counters as they stood at those
    times (used to drop a warm-up period).
    """
    lot = lot if lot is not None else build_lot(config)
    streams = make_streams(seed)
    rng_arr, rng_dwell = streams["arrivals"], streams["dwell"]
    rng_sensor, rng_policy = streams["sensor"], streams["policy"]

    N, C, horizon = lot.n_spaces, config.queue_capacity, config.horizon
    mode, model, thresholds = config.route_mode, config.sensor, config.thresholds
    profile: ArrivalProfile = config.profile
    max_rate = profile.max_rate
    mean_dwell = config.mean_dwell
    track = config.track_error or trace

    state = SystemState(N, C)
    belief = BeliefState(N, config.beta)
    counters = Counters()
    departures: list = []  # heap of (time, space index)
    cars_by_space: list = [None] * N
    times = [0.0] if track else []
    errors = [estimation_error(belief, state.occupied, 0.0, thresholds)] if track else []
    events: list = []
    step: list = []
    next_id = 0
    pending_snaps = sorted(snapshot_times)
    snapshots = {}

    def emit(ev: SimEvent):
        if trace:
            step.append(ev)

    def scan(route, now, car):
        spaces, obs = apply_scan(belief, route, lot, state.X != FREE, model, rng_sensor, now)
        if trace:
            for s, o in zip(spaces, obs):
                step.append(SimEvent(now, "scan", car.id, s, car.probe, o))

    def park(car: Car, idx: int, route, now: float):
        state.X[idx] = PROBE if car.probe else NORMAL
        state.n_parked += 1
        car.space = idx + 1
        car.departure = now + sample_dwell(rng_dwell, mean_dwell)
        state.t_dep[idx] = car.departure
        cars_by_space[idx] = car
        heapq.heappush(departures, (car.departure, idx))
        if car.probe:
            scan(route, now, car)
            belief.set_known(car.space, True, now)

    t_arr, arr_probe = sample_next_arrival(0.0, profile, rng_arr, config.gamma, max_rate, horizon)
    while True:
        t_dep = departures[0][0] if departures else math.inf
        t = min(t_arr, t_dep)
        while pending_snaps and pending_snaps[0] <= min(t, horizon):
            snapshots[pending_snaps.pop(0)] = Counters(**counters.as_dict())
        if t >= horizon:
            break
        if t_arr <= t_dep:
            car = Car(next_id, arr_probe, t)
            next_id += 1
            if car.probe:
                counters.arrivals_probe += 1
            else:
                counters.arrivals_normal += 1
            if state.n < N:
                a = policies.assign(config.policy, car.probe, belief=belief,
                                    occupied=state.X != FREE, lot=lot, now=t, mode=mode,
                                    rng=rng_policy, model=model, gain_model=config.gain_model)
                emit(SimEvent(t, "arrival", car.id, None, car.probe))
                emit(SimEvent(t, "assignment", car.id, a.space, car.probe))
                state.n += 1
                park(car, a.space - 1, a.route, t)
            elif state.n < N + C:
                emit(SimEvent(t, "arrival", car.id, None, car.probe))
                state.queue.append(car)
                state.n += 1
                state.c += 1
            else:
                counters.balked += 1
                emit(SimEvent(t, "balk", car.id, None, car.probe))
            t_arr, arr_probe = sample_next_arrival(t, profile, rng_arr, config.gamma,
                                                   max_rate, horizon)
        else:
            _, idx = heapq.heappop(departures)
            car = cars_by_space[idx]
            cars_by_space[idx] = None
            space = idx + 1
            if car.probe:
                counters.departures_probe += 1
            else:
                counters.departures_normal += 1
            state.X[idx] = FREE
            state.t_dep[idx] = math.inf
            state.n_parked -= 1
            state.n -= 1
            emit(SimEvent(t, "departure", car.id, space, car.probe))
            if car.probe:
                scan(lot.departure_route(space, mode), t, car)
                belief.set_known(space, False, t)
            if state.c > 0:
                head = state.queue.popleft()
                state.c -= 1
                emit(SimEvent(t, "queue_promote", head.id, space, head.probe))
                park(head, idx, lot.arrival_route(space, mode), t)
        assert state.n == state.n_parked + state.c
        if check_invariants:
            state.check()
        if track:
            e = estimation_error(belief, state.X != FREE, t, thresholds)
            times.append(t)
            errors.append(e)
            if trace:
                snapshot = belief.current(t).tolist() if trace_beliefs else None
                for ev in step:
                    ev.error = e
                    ev.beliefs = snapshot
                events.extend(step)
                step.clear()

    if trace:
        e = estimation_error(belief, state.X != FREE, horizon, thresholds)
        end = SimEvent(horizon, "end", error=e)
        if trace_beliefs:
            end.beliefs = belief.current(horizon).tolist()
        events.append(end)
    for ts in pending_snaps:
        snapshots[ts] = Counters(**counters.as_dict())
    return DayResult(np.asarray(times), np.asarray(errors), counters, state, belief,
                     events, snapshots)
