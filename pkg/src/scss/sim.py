"""Scenario-driven closed-loop simulation.

One fixed-step engine advances the plant every plant_dt and runs each
component on its own period (every period must be a whole multiple of
plant_dt): camera samples feed the supervisor, the supervisor talks to
the brake pulser over the byte channel, the pulser drives the brake
motor, and the Hall sensor closes the speed-estimation loop. Everything
stochastic draws from streams derived from the scenario seed, so a rerun
with the same scenario and seed reproduces the trace exactly.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

from .actuator_ctrl import PulserConfig, PulserState, handle_message, update_pulser
from .errors import ValidationError
from .link import Ack, Channel, decode_stream, encode_frame
from .plant import (
    ActuatorParams,
    BrakeActuatorState,
    VehicleParams,
    VehicleState,
    step_actuator,
    step_vehicle,
)
from .sensors import (
    HallConfig,
    LaneSensorConfig,
    PulseLog,
    emit_pulses,
    estimate_speed,
    observe_lanes,
)
from .supervisor import (
    SpeedLimitTable,
    SupervisorConfig,
    initial_supervisor_state,
    resolve_limit,
    update_supervisor,
)

_OVERRIDE_SECTIONS = ("vehicle", "actuator", "sensors", "supervisor", "pulser", "link", "sim")


@dataclass(slots=True)
class Scenario:
    """A run description: how long, what road, what the driver does.

    road_segments are (start_position m, lane_count) pairs, first start 0,
    strictly increasing; each segment extends to the next start.
    throttle_profile are (start_time s, drive fraction) pairs with the
    same ordering rules. overrides hold per-module config values keyed by
    section name (vehicle, actuator, sensors, supervisor, pulser, link, sim).
    """

    duration: float
    road_segments: tuple[tuple[float, int], ...]
    throttle_profile: tuple[tuple[float, float], ...] = ((0.0, 0.0),)
    name: str = "scenario"
    seed: int = 0
    overrides: dict = field(default_factory=dict)


@dataclass(slots=True)
class SimConfig:
    plant_dt: float = 0.001
    inhibit_drive_on_overspeed: bool = True
    trace_decimation: int = 1

    def __post_init__(self) -> None:
        if self.plant_dt <= 0:
            raise ValidationError("plant_dt", "must be strictly positive")
        if self.trace_decimation < 1:
            raise ValidationError("trace_decimation", "must be >= 1")


@dataclass(slots=True)
class TraceRecord:
    time: float
    position: float
    speed_true: float
    speed_est: float
    lanes_true: int
    limit: float
    overspeed_active: bool
    motor_energized: bool
    piston_position: float
    chamber_pressure: float
    brake_torque: float
    drive_force: float


@dataclass(slots=True)
class RunSummary:
    max_overshoot: float
    time_over_limit: float
    time_to_compliance_per_segment: list[float]
    brake_activation_count: int
    pulse_count: int
    final_position: float


def validate_scenario(scenario: Scenario) -> None:
    """Raise ValidationError naming the offending field if the scenario
    is not runnable."""
    if not isinstance(scenario.duration, (int, float)) or not math.isfinite(scenario.duration):
        raise ValidationError("duration", "must be a finite number")
    if scenario.duration < 0:
        raise ValidationError("duration", "must be non-negative")
    if not scenario.name:
        raise ValidationError("name", "must be non-empty")
    if not isinstance(scenario.seed, int):
        raise ValidationError("seed", "must be an integer")

    segs = scenario.road_segments
    if not segs:
        raise ValidationError("road_segments", "at least one segment is required")
    if segs[0][0] != 0.0:
        raise ValidationError("road_segments", "first segment must start at position 0")
    prev = -1.0
    for start, lanes in segs:
        if start <= prev:
            raise ValidationError("road_segments", "start positions must be strictly increasing")
        if not isinstance(lanes, int) or lanes < 1:
            raise ValidationError("road_segments", "lane counts must be integers >= 1")
        prev = start

    prof = scenario.throttle_profile
    if not prof:
        raise ValidationError("throttle_profile", "at least one entry is required")
    if prof[0][0] != 0.0:
        raise ValidationError("throttle_profile", "first entry must start at time 0")
    prev = -1.0
    for start, fraction in prof:
        if start <= prev:
            raise ValidationError("throttle_profile", "start times must be strictly increasing")
        if not 0.0 <= fraction <= 1.0:
            raise ValidationError("throttle_profile", "fractions must be in [0, 1]")
        prev = start

    if not isinstance(scenario.overrides, dict):
        raise ValidationError("overrides", "must be a mapping of section name to values")
    for section, values in scenario.overrides.items():
        if section not in _OVERRIDE_SECTIONS:
            raise ValidationError(str(section), "unknown section")
        if not isinstance(values, dict):
            raise ValidationError(str(section), "section values must be a mapping")


def _build_config(cls, values: dict, section: str):
    fields = cls.__dataclass_fields__
    for key in values:
        if key not in fields:
            raise ValidationError(f"{section}.{key}", "unknown parameter")
    try:
        return cls(**values)
    except ValidationError as exc:
        raise ValidationError(f"{section}.{exc.field}", exc.message) from None


def _build_sensor_configs(values: dict) -> tuple[HallConfig, LaneSensorConfig]:
    hall_fields = HallConfig.__dataclass_fields__
    lane_fields = LaneSensorConfig.__dataclass_fields__
    hall_vals: dict = {}
    lane_vals: dict = {}
    for key, val in values.items():
        if key in hall_fields:
            hall_vals[key] = val
        elif key in lane_fields:
            lane_vals[key] = val
        else:
            raise ValidationError(f"sensors.{key}", "unknown parameter")
    return (
        _build_config(HallConfig, hall_vals, "sensors"),
        _build_config(LaneSensorConfig, lane_vals, "sensors"),
    )


def _build_supervisor_configs(values: dict) -> tuple[SupervisorConfig, SpeedLimitTable]:
    vals = dict(values)
    table_kwargs = {}
    if "table_entries" in vals:
        table_kwargs["entries"] = tuple(tuple(entry) for entry in vals.pop("table_entries"))
    if "fallback_limit" in vals:
        table_kwargs["fallback_limit"] = vals.pop("fallback_limit")
    try:
        table = SpeedLimitTable(**table_kwargs)
    except ValidationError as exc:
        raise ValidationError(f"supervisor.{exc.field}", exc.message) from None
    return _build_config(SupervisorConfig, vals, "supervisor"), table


def _build_channels(values: dict, seed: int) -> tuple[Channel, Channel]:
    allowed = {"latency", "byte_drop_prob"}
    for key in values:
        if key not in allowed:
            raise ValidationError(f"link.{key}", "unknown parameter")
    try:
        return (
            Channel(seed=seed * 2 + 1, **values),
            Channel(seed=seed * 2 + 2, **values),
        )
    except ValidationError as exc:
        raise ValidationError(f"link.{exc.field}", exc.message) from None


def sim_config_from_overrides(values: dict) -> SimConfig:
    return _build_config(SimConfig, values, "sim")


def _divider(period: float, plant_dt: float, field_name: str) -> int:
    ratio = period / plant_dt
    k = round(ratio)
    if k < 1 or abs(ratio - k) > 1e-6:
        raise ValidationError(field_name, f"must be a whole multiple of plant_dt ({plant_dt} s)")
    return k


class _StepLookup:
    """Piecewise-constant lookup over (start_key, value) pairs, tuned for
    monotonically non-decreasing queries."""

    __slots__ = ("_points", "_idx")

    def __init__(self, points):
        self._points = list(points)
        self._idx = 0

    def value_at(self, key: float):
        pts = self._points
        i = self._idx
        while i + 1 < len(pts) and key >= pts[i + 1][0]:
            i += 1
        self._idx = i
        return pts[i][1]


class SimulationEngine:
    """Owns all component state for one run. Most callers want
    run_scenario(); the engine itself is handy when a test needs to poke
    at internals (tick counters, pulse log, decode error totals)."""

    def __init__(self, scenario: Scenario, cfg: SimConfig | None = None):
        validate_scenario(scenario)
        self.scenario = scenario
        overrides = scenario.overrides
        if cfg is None:
            cfg = sim_config_from_overrides(overrides.get("sim", {}))
        self.cfg = cfg

        self.vehicle_params = _build_config(VehicleParams, overrides.get("vehicle", {}), "vehicle")
        self.actuator_params = _build_config(ActuatorParams, overrides.get("actuator", {}), "actuator")
        self.hall_cfg, self.lane_cfg = _build_sensor_configs(overrides.get("sensors", {}))
        self.sup_cfg, self.table = _build_supervisor_configs(overrides.get("supervisor", {}))
        self.pulser_cfg = _build_config(PulserConfig, overrides.get("pulser", {}), "pulser")
        self.ch_to_actuator, self.ch_to_supervisor = _build_channels(
            overrides.get("link", {}), scenario.seed
        )

        dt = cfg.plant_dt
        self.sup_every = _divider(self.sup_cfg.tick_period, dt, "supervisor.tick_period")
        self.lane_every = _divider(self.lane_cfg.sample_period, dt, "sensors.sample_period")
        self.pulser_every = _divider(self.pulser_cfg.tick_period, dt, "pulser.tick_period")
        _divider(self.sup_cfg.command_repeat_period, dt, "supervisor.command_repeat_period")

        self.vehicle = VehicleState()
        self.brake = BrakeActuatorState()
        self.pulser = PulserState()
        self.sup = initial_supervisor_state(self.table)
        self.pulse_log = PulseLog()
        self.lane_rng = random.Random(f"{scenario.seed}:lane-sensor")
        self.pending_obs = None
        self._act_acc = b""
        self._sup_acc = b""

        self.supervisor_ticks = 0
        self.pulser_ticks = 0
        self.lane_samples = 0
        self.acks_received = 0
        self.decode_errors = 0
        self.messages_to_actuator = 0

        self._segments = _StepLookup(scenario.road_segments)
        self._throttle = _StepLookup(scenario.throttle_profile)

    def run(self) -> list[TraceRecord]:
        dt = self.cfg.plant_dt
        n_steps = round(self.scenario.duration / dt)
        decimation = self.cfg.trace_decimation
        trace: list[TraceRecord] = []

        for i in range(n_steps):
            t = i * dt

            incoming = self.ch_to_actuator.step(t)
            if incoming:
                msgs, self._act_acc, errs = decode_stream(self._act_acc, incoming)
                self.decode_errors += errs
                for msg in msgs:
                    self.pulser = handle_message(self.pulser, msg, t)
                    self.messages_to_actuator += 1
                    self.ch_to_supervisor.send(encode_frame(Ack(seq=msg.seq)), t)
            incoming = self.ch_to_supervisor.step(t)
            if incoming:
                msgs, self._sup_acc, errs = decode_stream(self._sup_acc, incoming)
                self.decode_errors += errs
                for msg in msgs:
                    if isinstance(msg, Ack):
                        self.acks_received += 1

            if i % self.lane_every == 0:
                lanes = self._segments.value_at(self.vehicle.position)
                obs = observe_lanes(lanes, t, self.lane_rng, self.lane_cfg)
                self.lane_samples += 1
                if obs is not None:
                    self.pending_obs = obs

            if i % self.sup_every == 0:
                est = estimate_speed(self.pulse_log, t, self.vehicle_params.wheel_radius, self.hall_cfg)
                self.sup, outbound = update_supervisor(
                    self.sup, self.sup_cfg, self.table, est, self.pending_obs, t
                )
                self.pending_obs = None
                for msg in outbound:
                    self.ch_to_actuator.send(encode_frame(msg), t)
                self.supervisor_ticks += 1

            if i % self.pulser_every == 0:
                self.pulser, _ = update_pulser(self.pulser, self.pulser_cfg, t)
                self.pulser_ticks += 1
            energized = self.pulser.motor_energized

            self.brake = step_actuator(self.brake, energized, dt, self.actuator_params)
            drive = self._throttle.value_at(t) * self.vehicle_params.max_drive_force
            if self.cfg.inhibit_drive_on_overspeed and self.sup.overspeed_active:
                drive = 0.0
            self.vehicle = step_vehicle(self.vehicle, drive, self.brake.brake_torque, dt, self.vehicle_params)
            emit_pulses(self.pulse_log, self.vehicle.wheel_angle, t + dt, self.hall_cfg)

            if (i + 1) % decimation == 0:
                trace.append(
                    TraceRecord(
                        time=self.vehicle.time,
                        position=self.vehicle.position,
                        speed_true=self.vehicle.speed,
                        speed_est=self.sup.last_speed_estimate,
                        lanes_true=self._segments.value_at(self.vehicle.position),
                        limit=self.sup.current_limit,
                        overspeed_active=self.sup.overspeed_active,
                        motor_energized=energized,
                        piston_position=self.brake.piston_position,
                        chamber_pressure=self.brake.chamber_pressure,
                        brake_torque=self.brake.brake_torque,
                        drive_force=drive,
                    )
                )
        return trace


def run_scenario(scenario: Scenario, cfg: SimConfig | None = None) -> tuple[list[TraceRecord], RunSummary]:
    """Run a scenario to completion and return (trace, summary).

    When cfg is omitted it is built from the scenario's [sim] overrides,
    falling back to defaults.
    """
    engine = SimulationEngine(scenario, cfg)
    trace = engine.run()
    summary = summarize(trace, engine.table, scenario, pulse_count=engine.pulse_log.last_emitted_angle_index)
    return trace, summary


def summarize(
    trace: list[TraceRecord],
    table: SpeedLimitTable,
    scenario: Scenario,
    pulse_count: int | None = None,
) -> RunSummary:
    """Reduce a trace to its summary metrics.

    Overshoot and time-over-limit are measured against each record's own
    limit field (the supervisor's belief at that instant); per-segment
    compliance is measured against the ground-truth segment limit, from
    segment entry to the first record at or below it, with never-complied
    segments reporting their full dwell time. Granularity is one record
    spacing throughout. pulse_count, when not supplied by the engine, is
    derived from the final position via the no-slip wheel relation.
    """
    if not trace:
        return RunSummary(
            max_overshoot=0.0,
            time_over_limit=0.0,
            time_to_compliance_per_segment=[],
            brake_activation_count=0,
            pulse_count=0,
            final_position=0.0,
        )

    max_overshoot = 0.0
    time_over = 0.0
    activations = 0
    prev_active = False
    prev_time = 0.0
    for rec in trace:
        over = rec.speed_true - rec.limit
        if over > max_overshoot:
            max_overshoot = over
        if rec.speed_true > rec.limit:
            time_over += rec.time - prev_time
        if rec.overspeed_active and not prev_active:
            activations += 1
        prev_active = rec.overspeed_active
        prev_time = rec.time

    starts = [start for start, _ in scenario.road_segments]
    limits = [resolve_limit(lanes, table) for _, lanes in scenario.road_segments]
    compliance: list[float] = []
    current = 0
    entry_time = 0.0
    complied_at: float | None = None
    for rec in trace:
        while current + 1 < len(starts) and rec.position >= starts[current + 1]:
            compliance.append(
                (complied_at - entry_time) if complied_at is not None else (rec.time - entry_time)
            )
            current += 1
            entry_time = rec.time
            complied_at = None
        if complied_at is None and rec.speed_true <= limits[current]:
            complied_at = rec.time
    compliance.append(
        (complied_at - entry_time) if complied_at is not None else (trace[-1].time - entry_time)
    )

    if pulse_count is None:
        sensors_vals = scenario.overrides.get("sensors", {})
        hall_cfg, _ = _build_sensor_configs(sensors_vals)
        vehicle = _build_config(VehicleParams, scenario.overrides.get("vehicle", {}), "vehicle")
        revs = trace[-1].position / vehicle.wheel_radius / math.tau
        pulse_count = math.floor(revs * hall_cfg.pulses_per_rev + 1e-9)

    return RunSummary(
        max_overshoot=max_overshoot,
        time_over_limit=time_over,
        time_to_compliance_per_segment=compliance,
        brake_activation_count=activations,
        pulse_count=pulse_count,
        final_position=trace[-1].position,
    )
