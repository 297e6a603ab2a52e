"""Desk-scale simulator of an automatic overspeed brake intervention.

A point-mass vehicle, a motor-driven hydraulic brake chain, Hall-pulse
speed sensing, a lane-counting camera, and two controllers joined by a
CRC-framed byte link, all stepped deterministically on a 1 ms grid.
"""

from .actuator_ctrl import PulserConfig, PulserState, handle_message, update_pulser
from .errors import ScenarioParseError, ValidationError
from .link import (
    Ack,
    BrakeCommand,
    Channel,
    Heartbeat,
    Message,
    crc8,
    decode_stream,
    encode_frame,
)
from .plant import (
    ActuatorParams,
    BrakeActuatorState,
    VehicleParams,
    VehicleState,
    brake_torque_from_pressure,
    motor_output_torque,
    step_actuator,
    step_vehicle,
)
from .scenario_io import TRACE_HEADER, load_scenario, write_summary, write_trace
from .sensors import (
    HallConfig,
    LaneObservation,
    LaneSensorConfig,
    PulseLog,
    emit_pulses,
    estimate_speed,
    observe_lanes,
)
from .sim import (
    RunSummary,
    Scenario,
    SimConfig,
    SimulationEngine,
    TraceRecord,
    run_scenario,
    summarize,
    validate_scenario,
)
from .supervisor import (
    SpeedLimitTable,
    SupervisorConfig,
    SupervisorState,
    initial_supervisor_state,
    kmh_to_ms,
    resolve_limit,
    update_supervisor,
)

__version__ = "0.1.0"
