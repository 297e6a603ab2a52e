"""Brake pulser: the actuator-side controller.

Drives the brake motor relay as a square wave while an intervention is
active, so the brakes grab and release instead of locking. Commands
arrive over the link; a heartbeat watchdog forces the output passive if
the supervisor goes quiet.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ValidationError
from .link import BrakeCommand, Heartbeat, Message


@dataclass(slots=True)
class PulserConfig:
    pulse_frequency: float = 5.0
    duty_fraction: float = 0.6
    watchdog_timeout: float = 0.5
    tick_period: float = 0.001

    def __post_init__(self) -> None:
        if self.pulse_frequency <= 0:
            raise ValidationError("pulse_frequency", "must be strictly positive")
        if not 0.0 < self.duty_fraction < 1.0:
            raise ValidationError("duty_fraction", "must be in (0, 1)")
        if self.watchdog_timeout <= 0:
            raise ValidationError("watchdog_timeout", "must be strictly positive")
        if self.tick_period <= 0:
            raise ValidationError("tick_period", "must be strictly positive")


@dataclass(slots=True)
class PulserState:
    active: bool = False
    phase_origin: float = 0.0
    last_heartbeat_at: float = float("-inf")
    motor_energized: bool = False
    last_seq_seen: int = -1


def handle_message(state: PulserState, msg: Message, now: float) -> PulserState:
    """Fold one received message into the pulser state.

    BRAKE_CMD sets or clears the active flag; the pulse phase restarts on
    an inactive-to-active edge, and a command repeating the last seen
    sequence number is ignored (idempotent replay). HEARTBEAT refreshes
    the watchdog. Anything else is ignored.
    """
    if isinstance(msg, BrakeCommand):
        if msg.seq == state.last_seq_seen:
            return state
        phase_origin = state.phase_origin
        if msg.active and not state.active:
            phase_origin = now
        return PulserState(
            active=msg.active,
            phase_origin=phase_origin,
            last_heartbeat_at=state.last_heartbeat_at,
            motor_energized=state.motor_energized,
            last_seq_seen=msg.seq,
        )
    if isinstance(msg, Heartbeat):
        return PulserState(
            active=state.active,
            phase_origin=state.phase_origin,
            last_heartbeat_at=now,
            motor_energized=state.motor_energized,
            last_seq_seen=state.last_seq_seen,
        )
    return state


def update_pulser(state: PulserState, cfg: PulserConfig, now: float) -> tuple[PulserState, bool]:
    """One pulser tick: returns (new state, motor_energized).

    Watchdog first: if the last heartbeat is older than watchdog_timeout
    the active flag is forced false and stays false until a fresh command
    arrives (fail passive). While active, the motor is energized during
    the first duty_fraction of each 1/pulse_frequency period, measured
    from the activation instant.
    """
    active = state.active
    if now - state.last_heartbeat_at > cfg.watchdog_timeout:
        active = False
    if active:
        period = 1.0 / cfg.pulse_frequency
        energized = (now - state.phase_origin) % period < cfg.duty_fraction * period
    else:
        energized = False
    return (
        PulserState(
            active=active,
            phase_origin=state.phase_origin,
            last_heartbeat_at=state.last_heartbeat_at,
            motor_energized=energized,
            last_seq_seen=state.last_seq_seen,
        ),
        energized,
    )
