"""Space-assignment policies for arriving cars.

``occupied`` arguments are ground-truth boolean vectors indexed by
``space - 1``. Every policy only ever returns a space that is free in the
ground truth.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .belief import DEFAULT_SENSOR, BeliefState, binary_entropy, expected_info_gain
from .config import PolicyId
from .lot import LotGraph, Route, RouteMode

# relative slack under which two route gains count as tied
GAIN_TIE_TOL = 1e-12


class NoFreeSpaceError(RuntimeError):
    pass


@dataclass(frozen=True)
class Assignment:
    space: int
    route: Route
    info_gain: float = 0.0


def _free_indices(occupied) -> np.ndarray:
    free = np.flatnonzero(~np.asarray(occupied, dtype=bool))
    if free.size == 0:
        raise NoFreeSpaceError("no free space to assign")
    return free


def _pick(candidates: np.ndarray, *keys) -> int:
    """0-based index among ``candidates`` minimising ``keys`` (first is primary)."""
    order = np.lexsort((candidates,) + tuple(reversed(keys)))
    return int(candidates[order[0]])


def _assignment(lot: LotGraph, idx: int, mode, gain: float = 0.0) -> Assignment:
    space = idx + 1
    return Assignment(space, lot.arrival_route(space, mode), gain)


def assign_random(occupied, lot: LotGraph, rng: np.random.Generator,
                  mode=RouteMode.TWO_WAY) -> Assignment:
    free = _free_indices(occupied)
    return _assignment(lot, int(free[rng.integers(free.size)]), mode)


def assign_nearest(occupied, lot: LotGraph, mode=RouteMode.TWO_WAY) -> Assignment:
    """Free space with the shortest arrival route; ties go to the smaller id."""
    free = _free_indices(occupied)
    lengths = lot.arrival_lengths(mode)
    return _assignment(lot, _pick(free, lengths[free]), mode)


def assign_max_satisfaction(belief: BeliefState, occupied, lot: LotGraph, now: float,
                            mode=RouteMode.TWO_WAY) -> Assignment:
    """Free space the belief rates most likely empty (lowest decayed p)."""
    free = _free_indices(occupied)
    p = belief.current(now, free)
    lengths = lot.arrival_lengths(mode)[free]
    return _assignment(lot, _pick(free, p, lengths), mode)


def space_gains(belief: BeliefState, now: float, model=DEFAULT_SENSOR,
                gain_model: str = "expected") -> np.ndarray:
    """Information each space would yield if scanned once now."""
    p = belief.current(now)
    if gain_model == "entropy":
        g = binary_entropy(p)
    else:
        g = expected_info_gain(p, model)
    # pinned spaces are known exactly
    return np.where(belief.pinned, 0.0, g)


def coverage_info_gain(belief: BeliefState, nodes, lot: LotGraph, now: float,
                       model=DEFAULT_SENSOR, gain_model: str = "expected") -> float:
    """Information gained from the set of spaces visible from ``nodes``.

    Beliefs are independent across spaces, so the mutual information of the
    joint readings is the sum of per-space gains over the covered set.
    """
    covered = lot.visible_spaces(list(nodes))
    if not covered:
        return 0.0
    g = space_gains(belief, now, model, gain_model)
    return float(np.sum(g[np.asarray(covered) - 1]))


def route_info_gain(belief: BeliefState, route: Route, lot: LotGraph, now: float,
                    model=DEFAULT_SENSOR, gain_model: str = "expected") -> float:
    return coverage_info_gain(belief, route.nodes, lot, now, model, gain_model)


def candidate_gains(belief: BeliefState, lot: LotGraph, now: float, mode,
                    model=DEFAULT_SENSOR, gain_model: str = "expected") -> np.ndarray:
    """Arrival-route information gain for every space (index ``space - 1``)."""
    cover = lot.arrival_coverage(mode)
    return cover @ space_gains(belief, now, model, gain_model)


def assign_near_optimal(belief: BeliefState, occupied, lot: LotGraph, now: float,
                        mode=RouteMode.TWO_WAY, model=DEFAULT_SENSOR,
                        gain_model: str = "expected") -> Assignment:
    """Free space whose arrival route is expected to be most informative.

    Ties (within ``GAIN_TIE_TOL``) go to the shorter route, then the
    smaller id.
    """
    free = _free_indices(occupied)
    gains = candidate_gains(belief, lot, now, mode, model, gain_model)[free]
    best = gains.max()
    tied = free[gains >= best - GAIN_TIE_TOL * max(1.0, abs(best))]
    lengths = lot.arrival_lengths(mode)
    idx = _pick(tied, lengths[tied])
    return _assignment(lot, idx, mode, float(best))


def assign(policy, probe: bool, *, belief, occupied, lot, now, mode, rng,
           model=DEFAULT_SENSOR, gain_model="expected") -> Assignment:
    """Dispatch one arriving car to a space according to ``policy``.

    Normal cars follow the nearest rule under the two guidance policies.
    """
    policy = PolicyId.parse(policy)
    if policy is PolicyId.RANDOM:
        return assign_random(occupied, lot, rng, mode)
    if policy is PolicyId.NEAREST or not probe:
        return assign_nearest(occupied, lot, mode)
    if policy is PolicyId.MAX_SATISFACTION:
        return assign_max_satisfaction(belief, occupied, lot, now, mode)
    return assign_near_optimal(belief, occupied, lot, now, mode, model, gain_model)
