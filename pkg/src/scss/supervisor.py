"""Overspeed supervisor: lane-count limits, hysteresis, debounce, commands.

The supervisor node owns the lane-count -> speed-limit table and decides
when the brake intervention should run. It compares the estimated speed
against the current limit with hysteresis (engage above
engage_factor*limit, release below release_factor*limit), requires the
overspeed condition to persist for a debounce window before engaging,
and talks to the brake pulser with BRAKE_CMD and HEARTBEAT messages.
Heartbeats flow only while an intervention is active; a silent link
therefore releases the brake at the far end via its watchdog.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .link import BrakeCommand, Heartbeat, Message

# tolerance for comparing differences of tick timestamps against periods
_TIME_EPS = 1e-9


def kmh_to_ms(value_kmh: float) -> float:
    """km/h to m/s, rounded to 4 decimals (the storage convention)."""
    return round(value_kmh / 3.6, 4)


def _require(cond: bool, name: str, message: str) -> None:
    if not cond:
        raise ValidationError(name, message)


DEFAULT_TABLE_ENTRIES: tuple[tuple[int, float], ...] = (
    (1, kmh_to_ms(30.0)),
    (2, kmh_to_ms(50.0)),
    (3, kmh_to_ms(80.0)),
    (4, kmh_to_ms(100.0)),
)


@dataclass(slots=True)
class SpeedLimitTable:
    """Ordered (lane_count, limit m/s) entries plus a fallback limit used
    before the first lane observation arrives."""

    entries: tuple[tuple[int, float], ...] = DEFAULT_TABLE_ENTRIES
    fallback_limit: float = kmh_to_ms(50.0)

    def __post_init__(self) -> None:
        self.entries = tuple((int(lanes), float(limit)) for lanes, limit in self.entries)
        _require(len(self.entries) >= 1, "table_entries", "must have at least one entry")
        prev_lanes = 0
        prev_limit = 0.0
        for lanes, limit in self.entries:
            _require(lanes > prev_lanes, "table_entries", "lane counts must be strictly increasing")
            _require(limit > 0, "table_entries", "limits must be strictly positive")
            _require(limit >= prev_limit, "table_entries", "limits must not decrease with lane count")
            prev_lanes, prev_limit = lanes, limit
        _require(self.fallback_limit > 0, "fallback_limit", "must be strictly positive")


def resolve_limit(lane_count: int, table: SpeedLimitTable) -> float:
    """Limit for a lane count: exact entry, else the entry for the largest
    lane count not above it, else the smallest entry's limit."""
    best = None
    for lanes, limit in table.entries:
        if lanes <= lane_count:
            best = limit
        else:
            break
    return best if best is not None else table.entries[0][1]


@dataclass(slots=True)
class SupervisorConfig:
    engage_factor: float = 1.05
    release_factor: float = 0.98
    debounce: float = 0.3
    tick_period: float = 0.01
    command_repeat_period: float = 0.1
    # duty/frequency carried in BRAKE_CMD for the actuator's information
    command_duty_percent: int = 60
    command_freq_decihertz: int = 50

    def __post_init__(self) -> None:
        _require(self.engage_factor > 1.0, "engage_factor", "must be > 1")
        _require(0 < self.release_factor < 1.0, "release_factor", "must be in (0, 1)")
        _require(self.debounce >= 0, "debounce", "must be non-negative")
        _require(self.tick_period > 0, "tick_period", "must be strictly positive")
        _require(self.command_repeat_period > 0, "command_repeat_period", "must be strictly positive")
        _require(0 <= self.command_duty_percent <= 100, "command_duty_percent", "must be in [0, 100]")
        _require(0 <= self.command_freq_decihertz <= 255, "command_freq_decihertz", "must be in [0, 255]")


@dataclass(slots=True)
class SupervisorState:
    current_limit: float
    last_speed_estimate: float = 0.0
    overspeed_active: bool = False
    overspeed_candidate_since: float | None = None
    last_command_sent_at: float | None = None
    next_seq: int = 0


def initial_supervisor_state(table: SpeedLimitTable) -> SupervisorState:
    return SupervisorState(current_limit=table.fallback_limit)


def update_supervisor(
    state: SupervisorState,
    cfg: SupervisorConfig,
    table: SpeedLimitTable,
    speed_est: float,
    lane_obs,
    now: float,
) -> tuple[SupervisorState, list[Message]]:
    """One control tick. Returns the new state and messages to transmit.

    Order of business: fold in the lane observation (a dropout, passed as
    None, holds the previous limit), then run the hysteresis/debounce
    state machine, then emit messages. An activation or deactivation edge
    sends a BRAKE_CMD immediately; while active, the command is repeated
    every command_repeat_period. Heartbeats accompany the activation edge
    and every repeat, so they stop as soon as the intervention ends or the
    supervisor dies, letting the pulser's watchdog fail passive.
    """
    limit = state.current_limit
    if lane_obs is not None:
        limit = resolve_limit(lane_obs.lane_count, table)

    active = state.overspeed_active
    candidate_since = state.overspeed_candidate_since
    edge: bool | None = None

    if active:
        if speed_est < cfg.release_factor * limit:
            active = False
            candidate_since = None
            edge = False
    else:
        if speed_est > cfg.engage_factor * limit:
            if candidate_since is None:
                candidate_since = now
            if now - candidate_since >= cfg.debounce - _TIME_EPS:
                active = True
                edge = True
        else:
            candidate_since = None

    messages: list[Message] = []
    seq = state.next_seq
    last_sent = state.last_command_sent_at

    def _brake_cmd(flag: bool) -> None:
        nonlocal seq
        messages.append(
            BrakeCommand(
                seq=seq,
                active=flag,
                duty_percent=cfg.command_duty_percent,
                freq_decihertz=cfg.command_freq_decihertz,
            )
        )
        seq = (seq + 1) % 256

    def _heartbeat() -> None:
        nonlocal seq
        messages.append(Heartbeat(seq=seq, time_ms=int(round(now * 1000.0)) & 0xFFFFFFFF))
        seq = (seq + 1) % 256

    if edge is True:
        _brake_cmd(True)
        _heartbeat()
        last_sent = now
    elif edge is False:
        _brake_cmd(False)
        last_sent = now
    elif active and (last_sent is None or now - last_sent >= cfg.command_repeat_period - _TIME_EPS):
        _brake_cmd(True)
        _heartbeat()
        last_sent = now

    return (
        SupervisorState(
            current_limit=limit,
            last_speed_estimate=speed_est,
            overspeed_active=active,
            overspeed_candidate_since=candidate_since,
            last_command_sent_at=last_sent,
            next_seq=seq,
        ),
        messages,
    )
