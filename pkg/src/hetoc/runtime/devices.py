"""Device detection and simulated-accelerator configuration.

The host is probed from the machine (logical cores, SHA extension flag);
simulated accelerators come from a JSON config file, either passed explicitly
or named by the HETOC_DEVICES environment variable.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, asdict

HOST_ID = "host"

_SPEC_FIELDS = {
    "id": str,
    "kind": str,
    "threads": int,
    "mem_bytes": int,
    "per_call_overhead_us": (int, float),
    "per_byte_copy_ns": (int, float),
    "per_alloc_us": (int, float),
    "host_mapped": bool,
    "sha_accel": bool,
}

_KINDS = ("host", "simulated_accel")


class DeviceConfigError(ValueError):
    pass


@dataclass(frozen=True)
class DeviceSpec:
    id: str
    kind: str = "simulated_accel"
    threads: int = 1
    mem_bytes: int = 1 << 62
    per_call_overhead_us: float = 0.0
    per_byte_copy_ns: float = 0.0
    per_alloc_us: float = 0.0
    host_mapped: bool = False
    sha_accel: bool = False

    def __post_init__(self):
        problems = []
        if not self.id:
            problems.append("id must be non-empty")
        if self.kind not in _KINDS:
            problems.append(f"kind must be one of {_KINDS}, got {self.kind!r}")
        if self.threads < 1:
            problems.append(f"threads must be >= 1, got {self.threads}")
        if self.mem_bytes <= 0:
            problems.append(f"mem_bytes must be > 0, got {self.mem_bytes}")
        for name in ("per_call_overhead_us", "per_byte_copy_ns", "per_alloc_us"):
            if getattr(self, name) < 0:
                problems.append(f"{name} must be >= 0")
        if problems:
            raise DeviceConfigError(f"device {self.id!r}: " + "; ".join(problems))


@dataclass(frozen=True)
class DeviceTable:
    host: DeviceSpec
    accels: tuple[DeviceSpec, ...] = ()

    def __post_init__(self):
        if self.host.kind != "host":
            raise DeviceConfigError("host entry must have kind 'host'")
        ids = [self.host.id] + [a.id for a in self.accels]
        if len(set(ids)) != len(ids):
            raise DeviceConfigError(f"duplicate device ids in {ids}")

    def all_devices(self) -> tuple[DeviceSpec, ...]:
        return (self.host, *self.accels)

    def get(self, device_id: str) -> DeviceSpec | None:
        for d in self.all_devices():
            if d.id == device_id:
                return d
        return None

    def resolve(self, device_id: str) -> DeviceSpec:
        d = self.get(device_id)
        if d is None:
            raise DeviceConfigError(f"unknown device id {device_id!r}")
        return d

    def is_host_mapped(self, device_id: str) -> bool:
        """Host itself and accels flagged host_mapped share the host memory domain."""
        d = self.get(device_id)
        return d is not None and (d.kind == "host" or d.host_mapped)

    def to_json(self) -> dict:
        return {"host": asdict(self.host), "accels": [asdict(a) for a in self.accels]}


def probe_sha_accel() -> bool:
    """Check the machine's CPU flags for a SHA instruction extension."""
    try:
        with open("/proc/cpuinfo") as fh:
            info = fh.read()
    except OSError:
        return False
    flags_lines = [ln for ln in info.splitlines() if ln.lower().startswith(("flags", "features"))]
    return any(" sha_ni" in ln or " sha1" in ln or " sha2" in ln for ln in flags_lines)


def host_spec(threads: int | None = None, sha_accel: bool | None = None) -> DeviceSpec:
    return DeviceSpec(
        id=HOST_ID,
        kind="host",
        threads=threads if threads is not None else (os.cpu_count() or 1),
        mem_bytes=1 << 62,
        host_mapped=True,
        sha_accel=probe_sha_accel() if sha_accel is None else sha_accel,
    )


def _parse_device(entry: dict, index: int) -> DeviceSpec:
    if not isinstance(entry, dict):
        raise DeviceConfigError(f"devices[{index}] must be an object")
    bad_keys = sorted(set(entry) - set(_SPEC_FIELDS))
    if bad_keys:
        raise DeviceConfigError(f"devices[{index}] has unknown keys: {', '.join(bad_keys)}")
    if "id" not in entry:
        raise DeviceConfigError(f"devices[{index}] is missing required key: id")
    wrong = sorted(
        k
        for k, v in entry.items()
        if not isinstance(v, _SPEC_FIELDS[k]) or isinstance(v, bool) != (_SPEC_FIELDS[k] is bool)
    )
    if wrong:
        raise DeviceConfigError(f"devices[{index}] has wrongly-typed keys: {', '.join(wrong)}")
    return DeviceSpec(**entry)


def load_device_config(path: str) -> tuple[DeviceSpec, ...]:
    """Parse the accelerator config file; raises DeviceConfigError with the offending keys."""
    try:
        with open(path) as fh:
            data = json.load(fh)
    except FileNotFoundError:
        raise DeviceConfigError(f"device config file not found: {path}")
    except json.JSONDecodeError as e:
        raise DeviceConfigError(f"device config {path} is not valid JSON: {e}")
    return parse_device_config(data, origin=path)


def parse_device_config(data, origin: str = "<config>") -> tuple[DeviceSpec, ...]:
    if not isinstance(data, dict) or set(data) != {"devices"}:
        raise DeviceConfigError(f"{origin}: top level must be an object with a 'devices' list")
    if not isinstance(data["devices"], list):
        raise DeviceConfigError(f"{origin}: 'devices' must be a list")
    accels = []
    for i, entry in enumerate(data["devices"]):
        spec = _parse_device(entry, i)
        if spec.kind == "host":
            raise DeviceConfigError(f"devices[{i}]: config may only declare simulated_accel devices")
        accels.append(spec)
    return tuple(accels)


_detected: DeviceTable | None = None


def detect_hardware(config_path: str | None = None, *, fresh: bool = False) -> DeviceTable:
    """Build the device table: probed host plus configured simulated accelerators.

    Without a config path, HETOC_DEVICES is consulted. The no-argument result is
    cached for the process lifetime; pass fresh=True to re-probe.
    """
    global _detected
    if config_path is None:
        config_path = os.environ.get("HETOC_DEVICES") or None
    if config_path is None and _detected is not None and not fresh:
        return _detected
    accels = load_device_config(config_path) if config_path else ()
    table = DeviceTable(host=host_spec(), accels=accels)
    if config_path is None:
        _detected = table
    return table
