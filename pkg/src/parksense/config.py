"""Experiment configuration with every model parameter exposed as a named key."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

from .belief import SensorModel, Thresholds
from .lot import MAX_SCAN_RANGE, LotGraph, RouteMode, build_grid_lot, load_lot


class ConfigError(ValueError):
    """Invalid configuration; the message names the offending key."""


class PolicyId(str, Enum):
    RANDOM = "random"
    NEAREST = "nearest"
    MAX_SATISFACTION = "max-satisfaction"
    NEAR_OPTIMAL = "near-optimal"

    @classmethod
    def parse(cls, value) -> "PolicyId":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).replace("_", "-"))
        except ValueError:
            raise ConfigError(f"policy: unknown policy {value!r}") from None


# (start, end, cars/hour); gaps fall back to ``base_rate``
DEFAULT_RATE_SEGMENTS = (
    (0.0, 1.0, 288.0),
    (8.0, 9.0, 288.0),
    (1.0, 3.0, 72.0),
    (7.0, 8.0, 72.0),
    (4.0, 6.0, 144.0),
)


@dataclass(frozen=True)
class ArrivalProfile:
    """Piecewise-constant arrival intensity in cars per hour.

    ``breakpoint_unit`` is the length of one breakpoint unit in hours: 1.0
    reads the segments as hours, 1/60 reads them as minutes.
    """

    segments: tuple = DEFAULT_RATE_SEGMENTS
    base_rate: float = 120.0
    breakpoint_unit: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "segments",
                           tuple(tuple(float(x) for x in seg) for seg in self.segments))

    def __call__(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"arrival rate undefined for negative time {t}")
        x = t / self.breakpoint_unit
        for start, end, rate in self.segments:
            if start <= x < end:
                return rate
        return self.base_rate

    @property
    def max_rate(self) -> float:
        return max([self.base_rate] + [rate for _, _, rate in self.segments])


def arrival_rate(t: float, profile: ArrivalProfile = ArrivalProfile()) -> float:
    return profile(t)


_SCALAR_TYPES = {"float": float, "int": int, "bool": bool}


@dataclass(frozen=True)
class ExperimentConfig:
    lot: dict = field(default_factory=lambda: {"aisles": 4, "spaces_per_aisle_side": 20})
    policy: PolicyId = PolicyId.NEAR_OPTIMAL
    route_mode: RouteMode = RouteMode.TWO_WAY
    gamma: float = 0.5
    beta: float = 0.9
    mu: float = 60.0  # mean parking time, minutes
    queue_capacity: int = 10
    horizon: float = 9.0  # hours
    rate_segments: tuple = DEFAULT_RATE_SEGMENTS
    base_rate: float = 120.0
    breakpoint_unit: float = 1.0
    sensor_p_hit: float = 0.907
    sensor_p_true_neg: float = 0.941
    threshold_empty: float = 0.4
    threshold_occupied: float = 0.6
    scan_range: int = MAX_SCAN_RANGE
    gain_model: str = "expected"
    track_error: bool = True
    replications: int = 1000
    seed: int = 0
    workers: int = 1
    gammas: tuple = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)
    policies: tuple = tuple(PolicyId)
    modes: tuple = (RouteMode.TWO_WAY, RouteMode.ONE_WAY)

    def __post_init__(self):
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        for f in dataclasses.fields(self):
            kind = _SCALAR_TYPES.get(f.type)
            if kind is None:
                continue
            value = getattr(self, f.name)
            if isinstance(value, bool) and kind is not bool or isinstance(value, str):
                raise ConfigError(f"{f.name}: expected {kind.__name__}, got {value!r}")
            try:
                coerced = kind(value)
            except (TypeError, ValueError):
                raise ConfigError(f"{f.name}: expected {kind.__name__}, got {value!r}") from None
            if kind is int and coerced != value:
                raise ConfigError(f"{f.name}: expected int, got {value!r}")
            set_(f.name, coerced)
        set_("policy", PolicyId.parse(self.policy))
        try:
            set_("route_mode", RouteMode.parse(self.route_mode))
            set_("modes", tuple(RouteMode.parse(m) for m in self.modes))
        except ValueError as exc:
            raise ConfigError(f"route_mode: {exc}") from None
        set_("policies", tuple(PolicyId.parse(p) for p in self.policies))
        set_("rate_segments", tuple(tuple(float(x) for x in s) for s in self.rate_segments))
        set_("gammas", tuple(float(g) for g in self.gammas))
        self.validate()

    def validate(self):
        if not 0.0 <= self.gamma <= 1.0:
            raise ConfigError(f"gamma out of range [0, 1]: {self.gamma}")
        for g in self.gammas:
            if not 0.0 <= g <= 1.0:
                raise ConfigError(f"gammas: gamma out of range [0, 1]: {g}")
        if not 0.0 < self.beta <= 1.0:
            raise ConfigError(f"beta out of range (0, 1]: {self.beta}")
        if self.mu <= 0:
            raise ConfigError(f"mu must be positive: {self.mu}")
        if self.queue_capacity < 0:
            raise ConfigError(f"queue_capacity must be >= 0: {self.queue_capacity}")
        if self.horizon <= 0:
            raise ConfigError(f"horizon must be positive: {self.horizon}")
        if self.replications < 1:
            raise ConfigError(f"replications must be >= 1: {self.replications}")
        if self.workers < 1:
            raise ConfigError(f"workers must be >= 1: {self.workers}")
        if self.base_rate < 0 or any(len(s) != 3 or s[2] < 0 or s[1] < s[0]
                                     for s in self.rate_segments):
            raise ConfigError("rate_segments: each segment is [start, end, rate>=0]")
        if self.breakpoint_unit <= 0:
            raise ConfigError(f"breakpoint_unit must be positive: {self.breakpoint_unit}")
        if self.gain_model not in ("expected", "entropy"):
            raise ConfigError(f"gain_model must be 'expected' or 'entropy': {self.gain_model!r}")
        if not 0 < self.scan_range <= MAX_SCAN_RANGE:
            raise ConfigError(f"scan_range must be in 1..{MAX_SCAN_RANGE}: {self.scan_range}")
        try:
            self.sensor
        except ValueError as exc:
            raise ConfigError(f"sensor: {exc}") from None
        try:
            self.thresholds
        except ValueError as exc:
            raise ConfigError(f"threshold: {exc}") from None
        if not isinstance(self.lot, dict) or not (
                "file" in self.lot or "document" in self.lot
                or {"aisles", "spaces_per_aisle_side"} <= set(self.lot)):
            raise ConfigError("lot: expected {aisles, spaces_per_aisle_side}, {file} or {document}")

    @property
    def sensor(self) -> SensorModel:
        return SensorModel(self.sensor_p_hit, self.sensor_p_true_neg)

    @property
    def thresholds(self) -> Thresholds:
        return Thresholds(self.threshold_empty, self.threshold_occupied)

    @property
    def profile(self) -> ArrivalProfile:
        return ArrivalProfile(self.rate_segments, self.base_rate, self.breakpoint_unit)

    @property
    def mean_dwell(self) -> float:
        """Mean parking time in hours."""
        return self.mu / 60.0

    def replace(self, **changes) -> "ExperimentConfig":
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> dict:
        out = {}
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if isinstance(value, Enum):
                value = value.value
            elif isinstance(value, tuple):
                value = [v.value if isinstance(v, Enum) else
                         list(v) if isinstance(v, tuple) else v for v in value]
            out[f.name] = value
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        if "config" in data and isinstance(data["config"], dict):
            data = data["config"]  # a run manifest
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"{unknown[0]}: unknown config key")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(f"malformed config: {exc}") from None

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError("config must be a JSON object")
        return cls.from_dict(data)


_LOT_CACHE: dict = {}


def build_lot(config: ExperimentConfig) -> LotGraph:
    """Build (or fetch from the per-process cache) the lot a config describes."""
    key = json.dumps([config.lot, config.scan_range], sort_keys=True)
    if key not in _LOT_CACHE:
        spec = config.lot
        if "file" in spec:
            lot = load_lot(Path(spec["file"]))
        elif "document" in spec:
            lot = load_lot(spec["document"])
        else:
            lot = build_grid_lot(int(spec["aisles"]), int(spec["spaces_per_aisle_side"]),
                                 config.scan_range)
        _LOT_CACHE[key] = lot
    return _LOT_CACHE[key]
