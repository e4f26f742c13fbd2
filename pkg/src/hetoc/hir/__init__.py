"""SSA intermediate representation: core structures, verifier, text form."""

from .core import (
    HOST,
    Block,
    Buffer,
    DeviceBinding,
    FuncBuilder,
    Function,
    HirModule,
    HirOp,
    Region,
    Scalar,
    SourceSpan,
    Value,
    clone_module,
    make_for,
    walk_ops,
)
from .parser import ModuleVerifyError, ParseError, parse, parse_verified, try_parse
from .printer import print_module
from .verify import Diagnostic, verify

__all__ = [
    "HOST",
    "Block",
    "Buffer",
    "DeviceBinding",
    "Diagnostic",
    "FuncBuilder",
    "Function",
    "HirModule",
    "HirOp",
    "ModuleVerifyError",
    "ParseError",
    "Region",
    "Scalar",
    "SourceSpan",
    "Value",
    "clone_module",
    "make_for",
    "parse",
    "parse_verified",
    "print_module",
    "try_parse",
    "verify",
    "walk_ops",
]
