"""Per-space occupancy beliefs: recursive Bayes on noisy scans, decay toward 0.5,
threshold classification and the relative estimation error.

Scalar helpers (``posterior_update``, ``decay``, ``binary_entropy``,
``expected_info_gain``) accept floats or numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from enum import Enum

import numpy as np

EMPTY = 0
OCCUPIED = 1


class Classification(str, Enum):
    EMPTY = "empty"
    OCCUPIED = "occupied"
    UNKNOWN = "unknown"


@dataclass(frozen=True)
class SensorModel:
    """Confusion probabilities of a probe car's occupancy detector.

    ``p_hit`` is P(measure occupied | occupied) and ``p_true_neg`` is
    P(measure empty | free); the other two entries are their complements.
    """

    p_hit: float = 0.907
    p_true_neg: float = 0.941

    def __post_init__(self):
        for name in ("p_hit", "p_true_neg"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {value}")

    @property
    def p_miss(self) -> float:
        return 1.0 - self.p_hit

    @property
    def p_false_alarm(self) -> float:
        return 1.0 - self.p_true_neg

    def likelihood(self, obs: int, occupied: bool) -> float:
        """P(obs | truth)."""
        if occupied:
            return self.p_hit if obs == OCCUPIED else self.p_miss
        return self.p_false_alarm if obs == OCCUPIED else self.p_true_neg


DEFAULT_SENSOR = SensorModel()


@dataclass(frozen=True)
class Thresholds:
    empty: float = 0.4
    occupied: float = 0.6

    def __post_init__(self):
        if not 0.0 <= self.empty <= self.occupied <= 1.0:
            raise ValueError("thresholds must satisfy 0 <= empty <= occupied <= 1")


DEFAULT_THRESHOLDS = Thresholds()


def posterior_update(p, obs, model: SensorModel = DEFAULT_SENSOR):
    """Posterior probability of occupancy after a measurement.

    ``obs`` is ``EMPTY`` or ``OCCUPIED``, or an array of them matching ``p``.
    """
    if np.ndim(obs) == 0:
        if obs == OCCUPIED:
            hit, false_alarm = model.p_hit, model.p_false_alarm
        else:
            hit, false_alarm = model.p_miss, model.p_true_neg
    else:
        is_occ = np.asarray(obs) == OCCUPIED
        hit = np.where(is_occ, model.p_hit, model.p_miss)
        false_alarm = np.where(is_occ, model.p_false_alarm, model.p_true_neg)
    num = hit * p
    den = num + false_alarm * (1.0 - p)
    if np.ndim(den) == 0:
        # zero evidence only arises for degenerate sensors; keep the prior
        return float(num / den) if den > 0 else float(p)
    out = np.array(p, dtype=float, copy=True)
    np.divide(num, den, out=out, where=den > 0)
    return out


def sample_measurement(occupied, model: SensorModel, rng: np.random.Generator):
    """Draw noisy readings for one truth value or an array of them."""
    occupied = np.asarray(occupied, dtype=bool)
    p_report_occupied = np.where(occupied, model.p_hit, model.p_false_alarm)
    obs = (rng.random(occupied.shape) < p_report_occupied).astype(np.int8)
    return int(obs) if obs.ndim == 0 else obs


def decay(p, dt, beta: float):
    """Shrink a belief toward 0.5 by ``beta ** dt``.

    One expression covers both sides of 0.5: ``0.5 - f*(0.5 - p)`` and
    ``0.5 + f*(p - 0.5)`` are the same IEEE result.
    """
    out = 0.5 + np.power(beta, dt) * (np.subtract(p, 0.5))
    return float(out) if np.ndim(out) == 0 else out


def classify(p, thresholds: Thresholds = DEFAULT_THRESHOLDS) -> Classification:
    if p < thresholds.empty:
        return Classification.EMPTY
    if p > thresholds.occupied:
        return Classification.OCCUPIED
    return Classification.UNKNOWN


def binary_entropy(p):
    """Entropy in bits, with 0 log 0 taken as 0."""
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    lp = np.log2(p, out=np.zeros_like(p), where=p > 0)
    lq = np.log2(q, out=np.zeros_like(q), where=q > 0)
    h = -(p * lp + q * lq)
    return float(h) if h.ndim == 0 else h


def expected_info_gain(p, model: SensorModel = DEFAULT_SENSOR):
    """Mutual information between a space's state and one noisy reading of it."""
    p = np.asarray(p, dtype=float)
    p_obs_occ = model.p_hit * p + model.p_false_alarm * (1.0 - p)
    p_obs_empty = 1.0 - p_obs_occ
    post_occ = posterior_update(p, OCCUPIED, model)
    post_empty = posterior_update(p, EMPTY, model)
    gain = binary_entropy(p) - (
        p_obs_occ * binary_entropy(post_occ) + p_obs_empty * binary_entropy(post_empty)
    )
    # clip tiny negative round-off at p in {0, 1}
    gain = np.maximum(gain, 0.0)
    return float(gain) if gain.ndim == 0 else gain


class BeliefState:
    """Occupancy probabilities for spaces ``1..n_spaces`` with lazy decay.

    Each entry stores the value at ``last_touched``; reads go through
    :meth:`current` which applies the decay for the elapsed time. Spaces held
    by parked probe cars are *pinned* at certainty and do not decay.
    """

    def __init__(self, n_spaces: int, beta: float = 0.9, start: float = 0.0):
        if not 0.0 < beta <= 1.0:
            raise ValueError(f"beta must lie in (0, 1], got {beta}")
        self.beta = beta
        self.p = np.full(n_spaces, 0.5)
        self.last_touched = np.full(n_spaces, float(start))
        self.pinned = np.zeros(n_spaces, dtype=bool)

    @property
    def n_spaces(self) -> int:
        return self.p.size

    def current(self, now: float, idx=None) -> np.ndarray:
        """Beliefs decayed to ``now`` (0-based ``idx`` selects a subset)."""
        if idx is None:
            p, last, pinned = self.p, self.last_touched, self.pinned
        else:
            p, last, pinned = self.p[idx], self.last_touched[idx], self.pinned[idx]
        dt = now - last
        dt[pinned] = 0.0
        return decay(p, dt, self.beta)

    def touch(self, idx, now: float) -> None:
        """Materialise the decay of ``idx`` up to ``now``."""
        self.p[idx] = self.current(now, idx)
        self.last_touched[idx] = now

    def _index(self, space: int) -> int:
        if not 1 <= space <= self.n_spaces:
            raise KeyError(f"unknown space id {space}")
        return space - 1

    def set_known(self, space: int, occupied: bool, now: float) -> None:
        """Record a certain state reported by a probe car parking or leaving."""
        i = self._index(space)
        self.p[i] = 1.0 if occupied else 0.0
        self.last_touched[i] = now
        self.pinned[i] = occupied

    def copy(self) -> "BeliefState":
        new = BeliefState.__new__(BeliefState)
        new.beta = self.beta
        new.p = self.p.copy()
        new.last_touched = self.last_touched.copy()
        new.pinned = self.pinned.copy()
        return new


def set_known(belief: BeliefState, space: int, occupied: bool, now: float) -> BeliefState:
    belief.set_known(space, occupied, now)
    return belief


def apply_scan(belief, route, lot, occupied, model, rng, now):
    """Scan every space visible from ``route`` once and fold in the readings.

    ``occupied`` is the ground-truth boolean vector (index ``space - 1``).
    Pinned spaces are skipped. Returns ``(space_ids, observations)`` in scan
    order.
    """
    idx = lot.visible_index(route)
    idx = idx[~belief.pinned[idx]]
    if idx.size == 0:
        return [], []
    belief.touch(idx, now)
    obs = sample_measurement(occupied[idx], model, rng)
    belief.p[idx] = posterior_update(belief.p[idx], obs, model)
    return (idx + 1).tolist(), obs.tolist()


def error_vector(p_now: np.ndarray, occupied: np.ndarray,
                 thresholds: Thresholds = DEFAULT_THRESHOLDS) -> np.ndarray:
    """Per-space error: 1 when the belief is in the unknown band or wrong."""
    est_occ = p_now > thresholds.occupied
    est_empty = p_now < thresholds.empty
    wrong = (est_occ & ~occupied) | (est_empty & occupied)
    return (~(est_occ | est_empty)) | wrong


def estimation_error(belief: BeliefState, occupied, now: float,
                     thresholds: Thresholds = DEFAULT_THRESHOLDS) -> float:
    """Fraction of spaces whose classified belief disagrees with the truth."""
    occupied = np.asarray(occupied, dtype=bool)
    errs = error_vector(belief.current(now), occupied, thresholds)
    return float(np.count_nonzero(errs)) / belief.n_spaces
