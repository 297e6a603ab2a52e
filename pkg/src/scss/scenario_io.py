"""Scenario files and run outputs.

Scenario files are INI-style key/value sections:

    [scenario]   name, duration (s), seed
    [segments]   one `start_position_m = lane_count` line per segment
    [throttle]   one `start_time_s = drive_fraction` line per setpoint
    [vehicle] [actuator] [sensors] [supervisor] [pulser] [link] [sim]
                 optional parameter overrides, SI units

Speed limits are written in km/h (`limits_kmh`, `fallback_limit_kmh`)
and stored in m/s, rounded to 4 decimals at load. Traces go out as CSV
with a fixed column order, summaries as JSON with sorted keys; both are
byte-deterministic for a given run.
"""

from __future__ import annotations

import configparser
import dataclasses
import json
from pathlib import Path

from .errors import ScenarioParseError, ValidationError
from .sim import RunSummary, Scenario, TraceRecord, validate_scenario
from .supervisor import kmh_to_ms

TRACE_HEADER = (
    "time,position,speed_true,speed_est,lanes_true,limit,overspeed_active,"
    "motor_energized,piston_position,chamber_pressure,brake_torque,drive_force"
)

# section -> key -> parser kind
_F = "float"
_I = "int"
_B = "bool"
_SCHEMA: dict[str, dict[str, str]] = {
    "vehicle": {
        "mass": _F,
        "wheel_radius": _F,
        "drag_coeff": _F,
        "rolling_coeff": _F,
        "max_drive_force": _F,
        "gravity": _F,
    },
    "actuator": {
        "motor_stall_torque": _F,
        "motor_noload_speed": _F,
        "gear_ratio": _F,
        "gear_efficiency": _F,
        "pinion_radius": _F,
        "master_piston_area": _F,
        "caliper_piston_area": _F,
        "pad_friction": _F,
        "rotor_effective_radius": _F,
        "piston_preload_force": _F,
        "pressure_gain": _F,
        "piston_travel_max": _F,
        "release_time_constant": _F,
        "brake_corner_count": _I,
    },
    "sensors": {
        "pulses_per_rev": _I,
        "timer_resolution": _F,
        "estimate_timeout": _F,
        "smoothing_window": _I,
        "sample_period": _F,
        "misclassification_prob": _F,
        "dropout_prob": _F,
    },
    "supervisor": {
        "engage_factor": _F,
        "release_factor": _F,
        "debounce": _F,
        "tick_period": _F,
        "command_repeat_period": _F,
        "command_duty_percent": _I,
        "command_freq_decihertz": _I,
    },
    "pulser": {
        "pulse_frequency": _F,
        "duty_fraction": _F,
        "watchdog_timeout": _F,
        "tick_period": _F,
    },
    "link": {
        "latency": _F,
        "byte_drop_prob": _F,
    },
    "sim": {
        "plant_dt": _F,
        "inhibit_drive_on_overspeed": _B,
        "trace_decimation": _I,
    },
}

_TRUE_WORDS = {"1", "true", "yes", "on"}
_FALSE_WORDS = {"0", "false", "no", "off"}


def _parse_float(raw: str, field: str) -> float:
    try:
        return float(raw)
    except ValueError:
        raise ValidationError(field, f"not a number: {raw!r}") from None


def _parse_int(raw: str, field: str) -> int:
    try:
        return int(raw, 0)
    except ValueError:
        raise ValidationError(field, f"not an integer: {raw!r}") from None


def _parse_bool(raw: str, field: str) -> bool:
    word = raw.strip().lower()
    if word in _TRUE_WORDS:
        return True
    if word in _FALSE_WORDS:
        return False
    raise ValidationError(field, f"not a boolean: {raw!r}")


def _parse_limits_kmh(raw: str, field: str) -> tuple[tuple[int, float], ...]:
    """'1:30, 2:50' -> ((1, 8.3333), (2, 13.8889))."""
    entries = []
    for chunk in raw.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        if ":" not in chunk:
            raise ValidationError(field, f"expected lanes:kmh pairs, got {chunk!r}")
        lanes_raw, kmh_raw = chunk.split(":", 1)
        entries.append((_parse_int(lanes_raw.strip(), field), kmh_to_ms(_parse_float(kmh_raw.strip(), field))))
    if not entries:
        raise ValidationError(field, "needs at least one lanes:kmh pair")
    return tuple(entries)


def load_scenario(path) -> Scenario:
    """Parse and validate a scenario file.

    Raises OSError if the file cannot be read, ScenarioParseError on
    malformed syntax (the message carries configparser's line numbers),
    and ValidationError naming the field on semantic problems.
    """
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    parser.optionxform = str  # keep keys verbatim; segment positions are numeric
    path = Path(path)
    with open(path, "r", encoding="utf-8") as handle:
        try:
            parser.read_file(handle)
        except configparser.Error as exc:
            raise ScenarioParseError(str(exc)) from None

    known = {"scenario", "segments", "throttle"} | set(_SCHEMA)
    for section in parser.sections():
        if section not in known:
            raise ValidationError(section, "unknown section")

    name = path.stem
    duration = None
    seed = 0
    if parser.has_section("scenario"):
        for key, raw in parser.items("scenario"):
            if key == "name":
                name = raw.strip()
            elif key == "duration":
                duration = _parse_float(raw, "duration")
            elif key == "seed":
                seed = _parse_int(raw, "seed")
            else:
                raise ValidationError(f"scenario.{key}", "unknown parameter")
    if duration is None:
        raise ValidationError("duration", "required")

    if not parser.has_section("segments"):
        raise ValidationError("road_segments", "a [segments] section is required")
    segments = tuple(
        (_parse_float(key, "road_segments"), _parse_int(raw, "road_segments"))
        for key, raw in parser.items("segments")
    )

    if parser.has_section("throttle"):
        throttle = tuple(
            (_parse_float(key, "throttle_profile"), _parse_float(raw, "throttle_profile"))
            for key, raw in parser.items("throttle")
        )
    else:
        throttle = ((0.0, 0.0),)

    overrides: dict[str, dict] = {}
    for section, schema in _SCHEMA.items():
        if not parser.has_section(section):
            continue
        values: dict = {}
        for key, raw in parser.items(section):
            field = f"{section}.{key}"
            if section == "supervisor" and key == "limits_kmh":
                values["table_entries"] = _parse_limits_kmh(raw, field)
                continue
            if section == "supervisor" and key == "fallback_limit_kmh":
                values["fallback_limit"] = kmh_to_ms(_parse_float(raw, field))
                continue
            kind = schema.get(key)
            if kind is None:
                raise ValidationError(field, "unknown parameter")
            if kind == _F:
                values[key] = _parse_float(raw, field)
            elif kind == _I:
                values[key] = _parse_int(raw, field)
            else:
                values[key] = _parse_bool(raw, field)
        overrides[section] = values

    scenario = Scenario(
        duration=duration,
        road_segments=segments,
        throttle_profile=throttle,
        name=name,
        seed=seed,
        overrides=overrides,
    )
    validate_scenario(scenario)
    return scenario


def _g6(value: float) -> str:
    return format(value, ".6g")


def write_trace(trace: list[TraceRecord], path) -> None:
    """Write the trace as CSV: fixed header, floats at 6 significant
    digits, flags as 0/1, every row newline-terminated."""
    with open(path, "w", encoding="ascii", newline="") as handle:
        handle.write(TRACE_HEADER + "\n")
        for rec in trace:
            handle.write(
                ",".join(
                    (
                        _g6(rec.time),
                        _g6(rec.position),
                        _g6(rec.speed_true),
                        _g6(rec.speed_est),
                        str(rec.lanes_true),
                        _g6(rec.limit),
                        "1" if rec.overspeed_active else "0",
                        "1" if rec.motor_energized else "0",
                        _g6(rec.piston_position),
                        _g6(rec.chamber_pressure),
                        _g6(rec.brake_torque),
                        _g6(rec.drive_force),
                    )
                )
                + "\n"
            )


def write_summary(summary: RunSummary, path) -> None:
    """Write the run summary as JSON with sorted keys."""
    with open(path, "w", encoding="ascii", newline="") as handle:
        json.dump(dataclasses.asdict(summary), handle, sort_keys=True, indent=2)
        handle.write("\n")
