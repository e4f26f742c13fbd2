"""Parser for the textual IR form.

Hand-written lexer and recursive-descent parser over the grammar the printer
emits. Any malformed input raises ParseError with a source span; no input may
crash the parser with anything else (fuzz-tested).
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    OP_SIGNATURES,
    SCALAR_KINDS,
    Block,
    Buffer,
    DeviceBinding,
    Function,
    HirModule,
    HirOp,
    Region,
    Scalar,
    SourceSpan,
    Value,
)
from .verify import Diagnostic, verify

_PUNCT = set("(){}[]<>,=:")


class ParseError(Exception):
    def __init__(self, message: str, span: SourceSpan):
        super().__init__(f"{span.line}:{span.column}: {message}")
        self.message = message
        self.span = span


class ModuleVerifyError(Exception):
    """Raised by parse_verified when a grammatical module fails verification."""

    def __init__(self, diagnostics: list[Diagnostic]):
        super().__init__("; ".join(str(d) for d in diagnostics))
        self.diagnostics = diagnostics


@dataclass
class _Token:
    kind: str  # ident | value | func | int | float | string | punct | eof
    text: str
    span: SourceSpan


def _tokenize(text: str) -> list[_Token]:
    toks: list[_Token] = []
    i, line, col = 0, 1, 1
    n = len(text)

    def span(start_i, start_line, start_col, end_i):
        return SourceSpan(start_i, end_i, start_line, start_col)

    while i < n:
        c = text[i]
        if c == "\n":
            i += 1
            line += 1
            col = 1
            continue
        if c in " \t\r":
            i += 1
            col += 1
            continue
        if text.startswith("//", i):
            while i < n and text[i] != "\n":
                i += 1
            continue
        start_i, start_line, start_col = i, line, col
        if c == '"':
            j = i + 1
            while j < n and text[j] not in '"\n':
                j += 1
            if j >= n or text[j] != '"':
                raise ParseError("unterminated string", span(start_i, line, col, j))
            toks.append(_Token("string", text[i + 1 : j], span(start_i, line, col, j + 1)))
            col += j + 1 - i
            i = j + 1
            continue
        if c in _PUNCT:
            toks.append(_Token("punct", c, span(start_i, line, col, i + 1)))
            i += 1
            col += 1
            continue
        if c == "%":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise ParseError("bare '%'", span(start_i, line, col, j))
            toks.append(_Token("value", text[i + 1 : j], span(start_i, line, col, j)))
            col += j - i
            i = j
            continue
        if c == "@":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            if j == i + 1:
                raise ParseError("bare '@'", span(start_i, line, col, j))
            toks.append(_Token("func", text[i + 1 : j], span(start_i, line, col, j)))
            col += j - i
            i = j
            continue
        if c.isdigit() or (c == "-" and i + 1 < n and text[i + 1].isdigit()):
            j = i + 1
            while j < n and text[j].isdigit():
                j += 1
            kind = "int"
            if j < n and text[j] == "." and j + 1 < n and text[j + 1].isdigit():
                kind = "float"
                j += 1
                while j < n and text[j].isdigit():
                    j += 1
            if j < n and text[j] in "eE":
                k = j + 1
                if k < n and text[k] in "+-":
                    k += 1
                if k < n and text[k].isdigit():
                    kind = "float"
                    j = k
                    while j < n and text[j].isdigit():
                        j += 1
            toks.append(_Token(kind, text[i:j], span(start_i, line, col, j)))
            col += j - i
            i = j
            continue
        if c.isalpha() or c == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] in "_."):
                j += 1
            toks.append(_Token("ident", text[i:j], span(start_i, line, col, j)))
            col += j - i
            i = j
            continue
        raise ParseError(f"unexpected character {c!r}", span(start_i, line, col, i + 1))
    toks.append(_Token("eof", "", SourceSpan(n, n, line, col)))
    return toks


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.pos = 0

    # -- token helpers --------------------------------------------------------

    def peek(self, ahead: int = 0) -> _Token:
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self) -> _Token:
        t = self.peek()
        if t.kind != "eof":
            self.pos += 1
        return t

    def fail(self, msg: str) -> ParseError:
        return ParseError(msg, self.peek().span)

    def expect(self, kind: str, text: str | None = None) -> _Token:
        t = self.peek()
        if t.kind != kind or (text is not None and t.text != text):
            want = text if text is not None else kind
            raise self.fail(f"expected {want!r}, found {t.text!r}")
        return self.next()

    def accept(self, kind: str, text: str | None = None) -> _Token | None:
        t = self.peek()
        if t.kind == kind and (text is None or t.text == text):
            return self.next()
        return None

    # -- module ---------------------------------------------------------------

    def module(self) -> HirModule:
        mod = HirModule()
        while self.peek().kind != "eof":
            mod.functions.append(self.function())
        return mod

    def function(self) -> Function:
        self.expect("ident", "func")
        name = self.expect("func").text
        self._values: dict[str, Value] = {}
        self._next_id = 0
        func = Function(name=name, param_names=[])
        self.expect("punct", "(")
        while not self.accept("punct", ")"):
            if func.params:
                self.expect("punct", ",")
            v = self.expect("value").text
            self.expect("punct", ":")
            func.params.append(self.define(v, self.type()))
            func.param_names.append(v)
        self.expect("punct", "{")
        func.body = self.block_ops()
        return func

    def define(self, name: str, type) -> Value:
        if name in self._values:
            raise self.fail(f"value %{name} redefined")
        v = Value(self._next_id, type)
        self._next_id += 1
        self._values[name] = v
        return v

    def use(self, tok: _Token) -> Value:
        v = self._values.get(tok.text)
        if v is None:
            raise ParseError(f"use of undefined value %{tok.text}", tok.span)
        return v

    def type(self):
        t = self.expect("ident")
        if t.text in SCALAR_KINDS:
            return Scalar(t.text)
        if t.text == "buf":
            self.expect("punct", "<")
            elem = self.expect("ident").text
            self.expect("punct", ",")
            length = int(self.expect("int").text)
            space = "host"
            if self.accept("punct", ","):
                space = self.expect("string").text
            self.expect("punct", ">")
            return Buffer(elem, length, space)
        raise ParseError(f"unknown type '{t.text}'", t.span)

    def type_list(self) -> list:
        types = [self.type()]
        while self.accept("punct", ","):
            types.append(self.type())
        return types

    # -- ops --------------------------------------------------------------------

    def block_ops(self) -> Block:
        block = Block()
        while not self.accept("punct", "}"):
            if self.peek().kind == "eof":
                raise self.fail("unterminated region")
            block.ops.append(self.op())
        return block

    def op(self) -> HirOp:
        start = self.peek().span
        result_names: list[str] = []
        if self.peek().kind == "value":
            result_names.append(self.next().text)
            while self.accept("punct", ","):
                result_names.append(self.expect("value").text)
            self.expect("punct", "=")
        opcode_tok = self.expect("ident")
        opcode = opcode_tok.text
        if opcode not in OP_SIGNATURES:
            raise ParseError(f"unknown opcode '{opcode}'", opcode_tok.span)
        method = getattr(self, "_op_" + opcode.replace(".", "_"))
        op: HirOp = method(result_names)
        op.loc = start
        n_res = OP_SIGNATURES[opcode][2]
        if n_res is not None and len(result_names) != n_res:
            raise ParseError(
                f"'{opcode}' takes {n_res} result(s), got {len(result_names)}", opcode_tok.span
            )
        return op

    def _bind_results(self, names: list[str], types: list) -> list[Value]:
        if len(names) != len(types):
            raise self.fail(f"{len(names)} result name(s) but {len(types)} type(s)")
        return [self.define(n, t) for n, t in zip(names, types)]

    def _single_result(self, names: list[str], type) -> list[Value]:
        return self._bind_results(names, [type])

    def _op_const(self, names):
        t = self.peek()
        if t.kind == "int":
            value = int(self.next().text)
        elif t.kind == "float":
            value = float(self.next().text)
        else:
            raise self.fail("const needs a numeric literal")
        self.expect("punct", ":")
        type = self.type()
        return HirOp("const", [], self._single_result(names, type), {"value": value})

    def _binop(self, opcode, names):
        a = self.use(self.expect("value"))
        self.expect("punct", ",")
        b = self.use(self.expect("value"))
        self.expect("punct", ":")
        type = self.type()
        return HirOp(opcode, [a, b], self._single_result(names, type))

    def _op_addi(self, names):
        return self._binop("addi", names)

    def _op_muli(self, names):
        return self._binop("muli", names)

    def _indexed(self) -> tuple[Value, Value]:
        buf = self.use(self.expect("value"))
        self.expect("punct", "[")
        idx = self.use(self.expect("value"))
        self.expect("punct", "]")
        return buf, idx

    def _op_load(self, names):
        buf, idx = self._indexed()
        self.expect("punct", ":")
        type = self.type()
        return HirOp("load", [buf, idx], self._single_result(names, type))

    def _op_store(self, names):
        v = self.use(self.expect("value"))
        self.expect("punct", ",")
        buf, idx = self._indexed()
        return HirOp("store", [v, buf, idx])

    def _op_memref_alloc(self, names):
        self.expect("punct", ":")
        type = self.type()
        return HirOp("memref.alloc", [], self._single_result(names, type))

    def _op_hyper_alloc(self, names):
        self.expect("ident", "dev")
        self.expect("punct", "(")
        device = self.expect("string").text
        self.expect("punct", ")")
        attrs = self.attr_dict_opt()
        attrs["device"] = device
        self.expect("punct", ":")
        type = self.type()
        if isinstance(type, Buffer):
            type = Buffer(type.elem, type.length, device)
        return HirOp("hyper.alloc", [], self._single_result(names, type), attrs)

    def _dealloc(self, opcode, names):
        return HirOp(opcode, [self.use(self.expect("value"))], attrs=self.attr_dict_opt())

    def _op_memref_dealloc(self, names):
        return self._dealloc("memref.dealloc", names)

    def _op_hyper_dealloc(self, names):
        return self._dealloc("hyper.dealloc", names)

    def _op_memref_copy(self, names):
        a = self.use(self.expect("value"))
        self.expect("punct", ",")
        b = self.use(self.expect("value"))
        return HirOp("memref.copy", [a, b])

    def _op_hyper_memcpy(self, names):
        a = self.use(self.expect("value"))
        self.expect("punct", ",")
        b = self.use(self.expect("value"))
        return HirOp("hyper.memcpy", [a, b], attrs=self.attr_dict_opt())

    def _op_atomic_rmw(self, names):
        kind = self.expect("ident").text
        a = self.use(self.expect("value"))
        self.expect("punct", ",")
        b = self.use(self.expect("value"))
        operands = [a, b]
        if self.accept("punct", "["):
            idx = self.use(self.expect("value"))
            self.expect("punct", "]")
            operands.append(idx)
        self.expect("punct", ":")
        type = self.type()
        return HirOp("atomic_rmw", operands, self._single_result(names, type), {"kind": kind})

    def _op_hyper_reduce(self, names):
        v = self.use(self.expect("value"))
        self.expect("punct", ":")
        self.type()  # operand type annotation; the value already carries it
        self.expect("punct", "{")
        self.expect("punct", "(")
        args = []
        while not self.accept("punct", ")"):
            if args:
                self.expect("punct", ",")
            name = self.expect("value").text
            self.expect("punct", ":")
            args.append(self.define(name, self.type()))
        self.expect("punct", ":")
        block = self.block_ops()
        block.args = args
        return HirOp("hyper.reduce", [v], regions=[Region([block])])

    def _op_hyper_reduce_return(self, names):
        return HirOp("hyper.reduce.return", [self.use(self.expect("value"))])

    def _op_crypto_digest(self, names):
        m = self.use(self.expect("value"))
        self.expect("punct", ",")
        o = self.use(self.expect("value"))
        self.expect("punct", ",")
        i = self.use(self.expect("value"))
        return HirOp("crypto.digest", [m, o, i], attrs=self.attr_dict_opt())

    def _op_crypto_hash_batch(self, names):
        m = self.use(self.expect("value"))
        self.expect("punct", ",")
        o = self.use(self.expect("value"))
        attrs = self.attr_dict_opt()
        self.expect("ident", "devices")
        attrs["devices"] = self.device_list()
        return HirOp("crypto.hash_batch", [m, o], attrs=attrs)

    def _loop_header(self) -> tuple[Value, int, int]:
        iv_name = self.expect("value").text
        self.expect("punct", "=")
        lb = int(self.expect("int").text)
        self.expect("ident", "to")
        ub = int(self.expect("int").text)
        iv = self.define(iv_name, Scalar("index"))
        return iv, lb, ub

    def _loop_tail(self, names) -> tuple[list[Value], Block]:
        types = []
        if self.accept("punct", ":"):
            types = self.type_list()
        results = self._bind_results(names, types)
        self.expect("punct", "{")
        return results, self.block_ops()

    def _op_hyper_for(self, names):
        iv, lb, ub = self._loop_header()
        self.expect("ident", "devices")
        devices = self.device_list()
        self.expect("ident", "shared")
        self.expect("punct", "=")
        shared = self.bool_lit()
        ins, outs = [], []
        if self.accept("ident", "ins"):
            ins = self.operand_parens()
        if self.accept("ident", "outs"):
            outs = self.operand_parens()
        results, block = self._loop_tail(names)
        block.args = [iv]
        return HirOp(
            "hyper.for",
            ins + outs,
            results,
            {"lb": lb, "ub": ub, "devices": devices, "shared": shared, "n_ins": len(ins)},
            [Region([block])],
        )

    def _op_par_loop(self, names):
        iv, lb, ub = self._loop_header()
        self.expect("ident", "device")
        self.expect("punct", "(")
        device = self.expect("string").text
        self.expect("punct", ")")
        results, block = self._loop_tail(names)
        block.args = [iv]
        return HirOp(
            "par.loop", [], results, {"device": device, "lb": lb, "ub": ub}, [Region([block])]
        )

    def _op_dev_launch(self, names):
        iv, lb, ub = self._loop_header()
        self.expect("ident", "device")
        self.expect("punct", "(")
        device = self.expect("string").text
        self.expect("punct", ")")
        attrs = {"device": device, "lb": lb, "ub": ub, "offset": 0}
        if self.accept("ident", "offset"):
            self.expect("punct", "(")
            attrs["offset"] = int(self.expect("int").text)
            self.expect("punct", ")")
        if self.accept("ident", "group"):
            self.expect("punct", "(")
            attrs["group"] = int(self.expect("int").text)
            self.expect("punct", ")")
        results, block = self._loop_tail(names)
        block.args = [iv]
        return HirOp("dev.launch", [], results, attrs, [Region([block])])

    def _op_yield(self, names):
        return HirOp("yield")

    def _op_return(self, names):
        operands = []
        if self.peek().kind == "value":
            operands.append(self.use(self.next()))
            while self.accept("punct", ","):
                operands.append(self.use(self.expect("value")))
            self.expect("punct", ":")
            self.type_list()
        return HirOp("return", operands)

    # -- attribute helpers --------------------------------------------------------

    def bool_lit(self) -> bool:
        t = self.expect("ident")
        if t.text == "true":
            return True
        if t.text == "false":
            return False
        raise ParseError(f"expected true/false, found '{t.text}'", t.span)

    def operand_parens(self) -> list[Value]:
        self.expect("punct", "(")
        vals = []
        while not self.accept("punct", ")"):
            if vals:
                self.expect("punct", ",")
            vals.append(self.use(self.expect("value")))
        return vals

    def attr_value(self):
        t = self.peek()
        if t.kind == "int":
            return int(self.next().text)
        if t.kind == "float":
            return float(self.next().text)
        if t.kind == "string":
            return self.next().text
        if t.kind == "ident" and t.text in ("true", "false"):
            return self.next().text == "true"
        raise self.fail("expected attribute value")

    def attr_dict_opt(self) -> dict:
        attrs: dict = {}
        if not self.accept("punct", "{"):
            return attrs
        while not self.accept("punct", "}"):
            if attrs:
                self.expect("punct", ",")
            key = self.expect("ident").text
            self.expect("punct", "=")
            if key in attrs:
                raise self.fail(f"duplicate attribute '{key}'")
            attrs[key] = self.attr_value()
        return attrs

    def device_list(self) -> list[DeviceBinding]:
        self.expect("punct", "[")
        bindings = []
        while not self.accept("punct", "]"):
            if bindings:
                self.expect("punct", ",")
            self.expect("punct", "{")
            target, ratio, config = None, None, {}
            first = True
            while not self.accept("punct", "}"):
                if not first:
                    self.expect("punct", ",")
                first = False
                key = self.expect("ident").text
                self.expect("punct", "=")
                if key == "target":
                    target = self.expect("string").text
                elif key == "ratio":
                    t = self.peek()
                    if t.kind not in ("int", "float"):
                        raise self.fail("ratio needs a numeric value")
                    ratio = float(self.next().text)
                elif key == "config":
                    self.expect("punct", "{")
                    cfirst = True
                    while not self.accept("punct", "}"):
                        if not cfirst:
                            self.expect("punct", ",")
                        cfirst = False
                        ck = self.expect("ident").text
                        self.expect("punct", "=")
                        config[ck] = int(self.expect("int").text)
                else:
                    raise self.fail(f"unknown device binding field '{key}'")
            if target is None or ratio is None:
                raise self.fail("device binding needs target and ratio")
            bindings.append(DeviceBinding(target, ratio, config))
        return bindings


def parse(text: str) -> HirModule:
    """Parse textual IR; raises ParseError on malformed input."""
    if isinstance(text, bytes):
        text = text.decode("utf-8", errors="strict")
    parser = _Parser(text)
    return parser.module()


def parse_verified(text: str) -> HirModule:
    """Parse and verify; raises ParseError or ModuleVerifyError."""
    module = parse(text)
    diags = verify(module)
    if diags:
        raise ModuleVerifyError(diags)
    return module


def try_parse(text: str) -> tuple[HirModule | None, list[ParseError]]:
    """Non-raising wrapper: returns (module, []) or (None, errors)."""
    try:
        return parse(text), []
    except ParseError as e:
        return None, [e]
    except UnicodeDecodeError as e:
        return None, [ParseError(str(e), SourceSpan(0, 0, 1, 1))]
