"""Transformation passes: host memory optimization and lowering to device loops."""

from .dataflow import DataflowGraph, DfgEdge, DfgNode, build_dataflow_graph
from .host_mem_opt import HostMemOptStats, host_mem_opt, host_mem_opt_stats
from .lower_crypto import LoweringError, lower_crypto
from .lower_hyper_for import lower_hyper_for, reduce_combine_kind, reduce_identity
from .lower_reduce import lower_reduce
from .partition import partition_range, round_half_up
from .pipeline import (
    DEFAULT_PIPELINE,
    PASS_REGISTRY,
    PassContext,
    PassPipeline,
    PassRunStats,
    PipelineError,
    parse_pass_list,
    run_pipeline,
)

__all__ = [
    "DEFAULT_PIPELINE",
    "DataflowGraph",
    "DfgEdge",
    "DfgNode",
    "HostMemOptStats",
    "LoweringError",
    "PASS_REGISTRY",
    "PassContext",
    "PassPipeline",
    "PassRunStats",
    "PipelineError",
    "build_dataflow_graph",
    "host_mem_opt",
    "host_mem_opt_stats",
    "lower_crypto",
    "lower_hyper_for",
    "lower_reduce",
    "parse_pass_list",
    "partition_range",
    "reduce_combine_kind",
    "reduce_identity",
    "round_half_up",
    "run_pipeline",
]
