"""Vehicle and brake-actuator physics.

A longitudinal point-mass vehicle and the motor-driven hydraulic brake
chain that slows it: geared DC motor -> pinion and rack -> master piston
-> chamber pressure -> caliper clamp torque at each wheel. The gear train
trades speed for torque, so a small motor can press the master piston
hard enough to matter.

Everything is SI internally. Integration is explicit Euler at the caller's
step size; the torque balance through the gear train is quasi-static
(mechanism inertia is negligible next to the vehicle's).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ValidationError


def _require(cond: bool, field: str, message: str) -> None:
    if not cond:
        raise ValidationError(field, message)


@dataclass(slots=True)
class VehicleParams:
    """Longitudinal dynamics parameters.

    m dv/dt = F_drive - drag_coeff*v^2 - rolling_coeff*m*g - T_brake/wheel_radius
    """

    mass: float = 1200.0
    wheel_radius: float = 0.30
    drag_coeff: float = 0.392
    rolling_coeff: float = 0.012
    max_drive_force: float = 4000.0
    gravity: float = 9.81

    def __post_init__(self) -> None:
        _require(self.mass > 0, "mass", "must be strictly positive")
        _require(0 < self.wheel_radius < 1.0, "wheel_radius", "must be in (0, 1) m")
        _require(self.drag_coeff > 0, "drag_coeff", "must be strictly positive")
        _require(self.rolling_coeff > 0, "rolling_coeff", "must be strictly positive")
        _require(self.max_drive_force > 0, "max_drive_force", "must be strictly positive")
        _require(self.gravity > 0, "gravity", "must be strictly positive")


@dataclass(slots=True)
class VehicleState:
    time: float = 0.0
    position: float = 0.0
    speed: float = 0.0
    wheel_angle: float = 0.0
    drive_force_applied: float = 0.0


@dataclass(slots=True)
class ActuatorParams:
    """Brake chain parameters, motor shaft to caliper."""

    motor_stall_torque: float = 0.02
    motor_noload_speed: float = 1047.0
    gear_ratio: float = 100.0
    gear_efficiency: float = 0.8
    pinion_radius: float = 0.01
    master_piston_area: float = 2.0e-4
    caliper_piston_area: float = 8.0e-4
    pad_friction: float = 0.4
    rotor_effective_radius: float = 0.12
    piston_preload_force: float = 10.0
    pressure_gain: float = 5.0e7
    piston_travel_max: float = 0.02
    release_time_constant: float = 0.15
    brake_corner_count: int = 4

    def __post_init__(self) -> None:
        _require(self.motor_stall_torque > 0, "motor_stall_torque", "must be strictly positive")
        _require(self.motor_noload_speed > 0, "motor_noload_speed", "must be strictly positive")
        _require(self.gear_ratio >= 1.0, "gear_ratio", "must be >= 1")
        _require(0 < self.gear_efficiency <= 1.0, "gear_efficiency", "must be in (0, 1]")
        _require(self.pinion_radius > 0, "pinion_radius", "must be strictly positive")
        _require(self.master_piston_area > 0, "master_piston_area", "must be strictly positive")
        _require(self.caliper_piston_area > 0, "caliper_piston_area", "must be strictly positive")
        _require(self.pad_friction > 0, "pad_friction", "must be strictly positive")
        _require(self.rotor_effective_radius > 0, "rotor_effective_radius", "must be strictly positive")
        _require(self.piston_preload_force >= 0, "piston_preload_force", "must be non-negative")
        _require(self.pressure_gain > 0, "pressure_gain", "must be strictly positive")
        _require(self.piston_travel_max > 0, "piston_travel_max", "must be strictly positive")
        _require(self.release_time_constant > 0, "release_time_constant", "must be strictly positive")
        _require(self.brake_corner_count >= 1, "brake_corner_count", "must be >= 1")


@dataclass(slots=True)
class BrakeActuatorState:
    """Brake chain state. chamber_pressure is always pressure_gain * piston_position."""

    piston_position: float = 0.0
    chamber_pressure: float = 0.0
    output_shaft_speed: float = 0.0
    brake_torque: float = 0.0
    motor_energized: bool = False


def motor_output_torque(energized: bool, output_shaft_speed: float, params: ActuatorParams) -> float:
    """Torque at the gearbox output for a given output shaft speed.

    Linear torque-speed line of a DC motor, reflected through the gear
    ratio with efficiency applied: eta * G * T_stall * (1 - G*w_out/w_noload),
    floored at zero. De-energized, the motor produces nothing.
    """
    if not energized:
        return 0.0
    line = 1.0 - params.gear_ratio * output_shaft_speed / params.motor_noload_speed
    if line <= 0.0:
        return 0.0
    return params.gear_efficiency * params.gear_ratio * params.motor_stall_torque * line


def brake_torque_from_pressure(pressure: float, params: ActuatorParams) -> float:
    """Total brake torque over all corners: n * 2 * mu * P * A_caliper * r_eff."""
    return (
        params.brake_corner_count
        * 2.0
        * params.pad_friction
        * pressure
        * params.caliper_piston_area
        * params.rotor_effective_radius
    )


def step_actuator(
    state: BrakeActuatorState, energized: bool, dt: float, params: ActuatorParams
) -> BrakeActuatorState:
    """Advance the brake chain by dt and return the new state.

    Energized: the output shaft turns at the speed where the motor's
    torque line meets the quasi-static load torque
    (chamber_pressure * A_master + preload) * pinion_radius, and the
    piston advances at pinion_radius * w_out (clamped to its travel).
    De-energized: the piston relaxes exponentially toward zero with
    release_time_constant. Pressure and clamp torque follow the piston.
    """
    if energized:
        load_torque = (
            state.chamber_pressure * params.master_piston_area + params.piston_preload_force
        ) * params.pinion_radius
        stall_out = params.gear_efficiency * params.gear_ratio * params.motor_stall_torque
        margin = 1.0 - load_torque / stall_out
        omega_out = (params.motor_noload_speed / params.gear_ratio) * margin if margin > 0.0 else 0.0
        position = state.piston_position + params.pinion_radius * omega_out * dt
        if position > params.piston_travel_max:
            position = params.piston_travel_max
        elif position < 0.0:
            position = 0.0
    else:
        omega_out = 0.0
        position = state.piston_position * math.exp(-dt / params.release_time_constant)

    pressure = params.pressure_gain * position
    return BrakeActuatorState(
        piston_position=position,
        chamber_pressure=pressure,
        output_shaft_speed=omega_out,
        brake_torque=brake_torque_from_pressure(pressure, params),
        motor_energized=energized,
    )


def step_vehicle(
    state: VehicleState,
    drive_force: float,
    brake_torque: float,
    dt: float,
    params: VehicleParams,
) -> VehicleState:
    """Advance the vehicle by dt (explicit Euler) and return the new state.

    Resistive terms can never drive the speed below zero within a step;
    the wheel rolls without slip, so the wheel angle advances by
    delta_position / wheel_radius.
    """
    v = state.speed
    accel = (
        drive_force
        - params.drag_coeff * v * v
        - params.rolling_coeff * params.mass * params.gravity
        - brake_torque / params.wheel_radius
    ) / params.mass
    new_speed = v + accel * dt
    if new_speed < 0.0:
        new_speed = 0.0
    dx = v * dt
    return VehicleState(
        time=state.time + dt,
        position=state.position + dx,
        speed=new_speed,
        wheel_angle=state.wheel_angle + dx / params.wheel_radius,
        drive_force_applied=drive_force,
    )
