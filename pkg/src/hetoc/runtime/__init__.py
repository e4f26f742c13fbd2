"""Execution runtime: device table, per-device arenas, interpreter."""

from .arena import Arena, ArenaError, RuntimeBuffer
from .devices import (
    DeviceConfigError,
    DeviceSpec,
    DeviceTable,
    detect_hardware,
    host_spec,
    load_device_config,
    parse_device_config,
    probe_sha_accel,
)
from .executor import ExecError, ExecReport, execute, execute_batched

__all__ = [
    "Arena",
    "ArenaError",
    "DeviceConfigError",
    "DeviceSpec",
    "DeviceTable",
    "ExecError",
    "ExecReport",
    "RuntimeBuffer",
    "detect_hardware",
    "execute",
    "execute_batched",
    "host_spec",
    "load_device_config",
    "parse_device_config",
    "probe_sha_accel",
]
