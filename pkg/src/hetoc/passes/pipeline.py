"""Pass pipeline: named rewrites applied in sequence, re-verified after each."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..hir.core import HirModule, walk_ops
from ..hir.verify import Diagnostic, verify
from ..runtime.devices import DeviceTable
from .host_mem_opt import host_mem_opt
from .lower_crypto import lower_crypto
from .lower_hyper_for import lower_hyper_for
from .lower_reduce import lower_reduce


@dataclass
class PassContext:
    devices: DeviceTable | None = None
    no_sha_accel: bool = False


PASS_REGISTRY = {
    "host-mem-opt": lambda m, ctx: host_mem_opt(m, ctx.devices),
    "lower-crypto": lambda m, ctx: lower_crypto(m, ctx.devices, ctx.no_sha_accel),
    "lower-hyper-for": lambda m, ctx: lower_hyper_for(m, ctx.devices),
    "lower-reduce": lambda m, ctx: lower_reduce(m),
}

DEFAULT_PIPELINE = ("host-mem-opt", "lower-crypto", "lower-hyper-for", "lower-reduce")


class PipelineError(Exception):
    def __init__(self, pass_name: str, message: str, diagnostics: list[Diagnostic] | None = None):
        super().__init__(f"pass '{pass_name}': {message}")
        self.pass_name = pass_name
        self.diagnostics = diagnostics or []


@dataclass
class PassRunStats:
    name: str
    ops_before: int
    ops_after: int

    @property
    def ops_erased(self) -> int:
        return max(0, self.ops_before - self.ops_after)

    @property
    def ops_created(self) -> int:
        return max(0, self.ops_after - self.ops_before)


def _count_ops(module: HirModule) -> int:
    return sum(1 for f in module.functions for _ in walk_ops(f.body))


def parse_pass_list(spec: str) -> list[str]:
    names = [p.strip() for p in spec.split(",") if p.strip()]
    unknown = [n for n in names if n not in PASS_REGISTRY]
    if unknown:
        raise ValueError(
            f"unknown pass(es): {', '.join(unknown)}; available: {', '.join(PASS_REGISTRY)}"
        )
    return names


@dataclass
class PassPipeline:
    passes: list[str] = field(default_factory=lambda: list(DEFAULT_PIPELINE))
    stats: list[PassRunStats] = field(default_factory=list)

    def __post_init__(self):
        unknown = [n for n in self.passes if n not in PASS_REGISTRY]
        if unknown:
            raise ValueError(f"unknown pass(es): {', '.join(unknown)}")

    def run(self, module: HirModule, ctx: PassContext | None = None) -> HirModule:
        """Apply each pass; a module failing verification after a pass is a bug."""
        ctx = ctx or PassContext()
        self.stats = []
        for name in self.passes:
            before = _count_ops(module)
            try:
                module = PASS_REGISTRY[name](module, ctx)
            except (ValueError, KeyError) as e:
                raise PipelineError(name, str(e)) from e
            diags = verify(module)
            if diags:
                raise PipelineError(
                    name, "produced a module that fails verification: "
                    + "; ".join(str(d) for d in diags[:5]),
                    diags,
                )
            self.stats.append(PassRunStats(name, before, _count_ops(module)))
        return module


def run_pipeline(
    module: HirModule,
    passes: list[str] | None = None,
    devices: DeviceTable | None = None,
    no_sha_accel: bool = False,
) -> HirModule:
    pipeline = PassPipeline(list(passes) if passes is not None else list(DEFAULT_PIPELINE))
    return pipeline.run(module, PassContext(devices=devices, no_sha_accel=no_sha_accel))
