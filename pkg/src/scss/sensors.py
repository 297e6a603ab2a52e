"""Wheel-speed and lane-count sensing.

The Hall sensor side turns wheel rotation into timestamped pulses
(pulses_per_rev threshold crossings per revolution, timestamps quantized
to the capture timer's resolution) and estimates speed from the spacing
of recent pulses. The camera side reports how many lanes the road has,
with seeded dropout and adjacent-count misclassification noise.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .errors import ValidationError


def _require(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise ValidationError(name, message)


@dataclass(slots=True)
class HallConfig:
    # timer_resolution == 0 disables timestamp quantization entirely
    pulses_per_rev: int = 4
    timer_resolution: float = 1.0e-6
    estimate_timeout: float = 1.0
    smoothing_window: int = 3

    def __post_init__(self) -> None:
        _require(self.pulses_per_rev >= 1, "pulses_per_rev", "must be >= 1")
        _require(self.timer_resolution >= 0, "timer_resolution", "must be non-negative")
        _require(self.estimate_timeout > 0, "estimate_timeout", "must be strictly positive")
        _require(self.smoothing_window >= 1, "smoothing_window", "must be >= 1")


@dataclass(slots=True)
class PulseLog:
    """Pulse history plus the bookkeeping needed to place new crossings in time.

    last_angle/last_time remember the previous emit_pulses call so each
    threshold crossing can be timestamped at its interpolated instant
    rather than at the call boundary.
    """

    timestamps: list[float] = field(default_factory=list)
    last_emitted_angle_index: int = 0
    last_angle: float = 0.0
    last_time: float = 0.0


def emit_pulses(log: PulseLog, wheel_angle: float, now: float, cfg: HallConfig) -> PulseLog:
    """Append one pulse per sensing threshold crossed since the last call.

    Thresholds sit every 2*pi/pulses_per_rev of wheel angle. Crossing
    times are interpolated linearly between the previous call and this
    one, then quantized to timer_resolution. Mutates and returns log.
    """
    spacing = math.tau / cfg.pulses_per_rev
    target = math.floor(wheel_angle / spacing)
    if target > log.last_emitted_angle_index:
        prev_angle = log.last_angle
        prev_time = log.last_time
        swept = wheel_angle - prev_angle
        q = cfg.timer_resolution
        ts = log.timestamps
        for k in range(log.last_emitted_angle_index + 1, target + 1):
            if swept > 0.0:
                t = prev_time + (k * spacing - prev_angle) * (now - prev_time) / swept
            else:
                t = now
            if q > 0.0:
                t = round(t / q) * q
            # keep timestamps strictly increasing even if two crossings
            # quantize into the same timer tick
            if ts and t <= ts[-1]:
                t = ts[-1] + (q if q > 0.0 else 1e-9)
            ts.append(t)
        log.last_emitted_angle_index = target
    log.last_angle = wheel_angle
    log.last_time = now
    return log


def estimate_speed(log: PulseLog, now: float, wheel_radius: float, cfg: HallConfig) -> float:
    """Speed from the mean of the most recent inter-pulse intervals.

    v = (2*pi*R / pulses_per_rev) / mean interval, over the last
    smoothing_window intervals (fewer if the log is still short).
    Returns 0.0 when fewer than two pulses exist or the newest pulse is
    older than estimate_timeout.
    """
    ts = log.timestamps
    if len(ts) < 2:
        return 0.0
    if now - ts[-1] > cfg.estimate_timeout:
        return 0.0
    n = min(cfg.smoothing_window, len(ts) - 1)
    mean_interval = (ts[-1] - ts[-1 - n]) / n
    if mean_interval <= 0.0:
        return 0.0
    return (math.tau * wheel_radius / cfg.pulses_per_rev) / mean_interval


@dataclass(slots=True)
class LaneSensorConfig:
    sample_period: float = 0.2
    misclassification_prob: float = 0.02
    dropout_prob: float = 0.05

    def __post_init__(self) -> None:
        _require(self.sample_period > 0, "sample_period", "must be strictly positive")
        _require(
            0.0 <= self.misclassification_prob <= 1.0,
            "misclassification_prob",
            "must be in [0, 1]",
        )
        _require(0.0 <= self.dropout_prob <= 1.0, "dropout_prob", "must be in [0, 1]")


@dataclass(slots=True)
class LaneObservation:
    lane_count: int
    observed_at: float


def observe_lanes(
    true_lanes: int, now: float, rng: random.Random, cfg: LaneSensorConfig
) -> LaneObservation | None:
    """One camera sample: None on dropout, otherwise the (possibly
    misclassified) lane count.

    Misclassification moves the count to a uniformly chosen neighbor
    (+/-1 lane, never below 1).
    """
    if rng.random() < cfg.dropout_prob:
        return None
    count = true_lanes
    if rng.random() < cfg.misclassification_prob:
        neighbors = [c for c in (true_lanes - 1, true_lanes + 1) if c >= 1]
        count = rng.choice(neighbors)
    return LaneObservation(lane_count=count, observed_at=now)
