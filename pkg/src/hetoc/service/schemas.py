"""Request/response models for the compile-and-run service."""

from __future__ import annotations

from pydantic import BaseModel, Field


class DiagnosticModel(BaseModel):
    severity: str
    location: str
    message: str


class VerifyRequest(BaseModel):
    ir_text: str


class VerifyResponse(BaseModel):
    ok: bool
    parse_errors: list[str] = Field(default_factory=list)
    diagnostics: list[DiagnosticModel] = Field(default_factory=list)


class PassStatModel(BaseModel):
    name: str
    ops_before: int
    ops_after: int


class OptRequest(BaseModel):
    ir_text: str
    passes: list[str] | None = None
    devices_config: dict | None = None
    no_sha_accel: bool = False


class OptResponse(BaseModel):
    ir_text: str
    stats: list[PassStatModel] = Field(default_factory=list)


class RunRequest(BaseModel):
    ir_text: str
    devices_config: dict | None = None
    # values are byte lists; missing params fill from seed (or zeros)
    inputs: dict[str, list[int]] | None = None
    seed: int | None = None
    lower: bool = True
    batched: bool = True
    no_sha_accel: bool = False


class ReportModel(BaseModel):
    wall_time: dict[str, float]
    compute_s: dict[str, float]
    charge_s: dict[str, float]
    batch_count: dict[str, int]
    bytes_copied: dict[str, int]
    elapsed_s: float


class RunResponse(BaseModel):
    outputs: dict[str, str]  # hex bytes per named buffer
    returned: list[float | int]
    report: ReportModel


class BenchRequest(BaseModel):
    alg: str
    count: int
    ratio: float = Field(ge=0.0, le=1.0, description="CPU share of the workload")
    width: int = 9
    devices_config: dict | None = None
    no_sha_accel: bool = False


class BenchResponse(BaseModel):
    ratio_cpu: float
    wall_s: float
    cpu_s: float
    accel_s: float
    batches: int
    n_data: int
    alg: str
    digest_head: str  # hex of the first digest, a cheap integrity witness


class SweepRequest(BaseModel):
    alg: str
    count: int
    step: float = 0.02
    width: int = 9
    devices_config: dict | None = None
    no_sha_accel: bool = False


class SweepRecordModel(BaseModel):
    ratio_cpu: float
    wall_s: float | None = None
    cpu_s: float | None = None
    accel_s: float | None = None
    batches: int = 0
    n_data: int = 0
    alg: str = ""
    error: str | None = None


class SweepResponse(BaseModel):
    records: list[SweepRecordModel]
    argmin_ratio: float | None
    csv_text: str


class DeviceModel(BaseModel):
    id: str
    kind: str
    threads: int
    mem_bytes: int
    per_call_overhead_us: float
    per_byte_copy_ns: float
    per_alloc_us: float
    host_mapped: bool
    sha_accel: bool


class DetectResponse(BaseModel):
    host: DeviceModel
    accels: list[DeviceModel]


class ErrorResponse(BaseModel):
    detail: str
