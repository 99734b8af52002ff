"""Behavioral specification documents: a small s-expression input language.

A document declares its input words, an optional output pipeline depth, and
a single expression over the inputs:

    (spec (inputs (a 16) (b 16) (c 16) (d 16))
          (pipeline 2)
          (and (mul (add a b) c) d))

``parse_spec`` lowers this to a behavioral program: every declared input
becomes a variable, the expression is built bottom-up with width checking,
and ``pipeline`` registers (all initialized to 0) are wrapped around the
root, so the program computes the expression ``pipeline`` cycles after its
operands arrive.

Expression operators and their width rules:

    (add x y) (sub x y) (mul x y)        equal widths, result same width
    (and x y) (or x y) (xor x y)         equal widths, result same width
    (not x)                              result same width
    (eq x y) (ult x y)                   equal widths, result width 1
    (mux s x y)                          s width 1; result s ? x : y
    (concat x y ...)                     left operand is most significant
    (extract hi lo x)                    inclusive bit slice
    (zext k x)                           k fresh zero bits on top

Malformed documents raise ParseError; expressions that violate a width rule
raise WidthError.  ``;`` starts a comment running to end of line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .ir import (BitVec, Operator, Prog, ProgBuilder, SketchmapError,
                 check_well_formed, op_result_width)

__all__ = [
    "ParseError",
    "SpecDocument",
    "parse_document",
    "parse_spec",
]


class ParseError(SketchmapError):
    """The document is not a well-shaped specification s-expression."""


@dataclass(frozen=True)
class SpecDocument:
    """A parsed specification: declared inputs, pipeline depth, program."""

    inputs: tuple[tuple[str, int], ...]
    pipeline: int
    prog: Prog


_TOKEN = re.compile(r"\(|\)|[^\s();]+")
_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*\Z")

_BINARY = ("add", "sub", "mul", "and", "or", "xor")
_COMPARE = ("eq", "ult")


def _tokenize(text: str) -> list[str]:
    out: list[str] = []
    for line in text.splitlines():
        out.extend(_TOKEN.findall(line.split(";", 1)[0]))
    return out


def _read(tokens: list[str], pos: int):
    """One datum starting at pos -> (str or nested list, next pos)."""
    if pos >= len(tokens):
        raise ParseError("unexpected end of input")
    tok = tokens[pos]
    if tok == "(":
        items = []
        pos += 1
        while True:
            if pos >= len(tokens):
                raise ParseError("missing ')'")
            if tokens[pos] == ")":
                return items, pos + 1
            item, pos = _read(tokens, pos)
            items.append(item)
    if tok == ")":
        raise ParseError("unexpected ')'")
    return tok, pos + 1


def _int(atom, what: str) -> int:
    if not isinstance(atom, str) or not re.fullmatch(r"-?\d+", atom):
        raise ParseError(f"{what} must be an integer, got {atom!r}")
    return int(atom)


def _clause(form, head: str):
    if not isinstance(form, list) or not form or form[0] != head:
        raise ParseError(f"expected ({head} ...), got {form!r}")
    return form[1:]


def _build(expr, b: ProgBuilder, env: dict[str, tuple[int, int]]):
    """Lower one expression tree -> (node id, width)."""
    if isinstance(expr, str):
        if expr not in env:
            raise ParseError(f"unknown input {expr!r}")
        return env[expr]
    if not expr:
        raise ParseError("empty expression ()")
    head = expr[0]
    if not isinstance(head, str):
        raise ParseError(f"operator expected, got {head!r}")
    args = expr[1:]

    def need(n: int):
        if len(args) != n:
            raise ParseError(f"{head} takes {n} operands, got {len(args)}")

    if head in _BINARY or head in _COMPARE:
        need(2)
        (x, wx), (y, wy) = (_build(a, b, env) for a in args)
        w = op_result_width(Operator(head, ()), [wx, wy])
        return b.op(head, x, y), w
    if head == "not":
        need(1)
        x, wx = _build(args[0], b, env)
        return b.op("not", x), wx
    if head == "mux":
        need(3)
        (s, ws), (x, wx), (y, wy) = (_build(a, b, env) for a in args)
        w = op_result_width(Operator("mux", ()), [ws, wx, wy])
        return b.op("mux", s, x, y), w
    if head == "concat":
        if len(args) < 2:
            raise ParseError(f"concat takes 2+ operands, got {len(args)}")
        parts = [_build(a, b, env) for a in args]
        out, w = parts[0]
        for x, wx in parts[1:]:
            out, w = b.concat(out, x), w + wx
        return out, w
    if head == "extract":
        need(3)
        hi, lo = _int(args[0], "extract hi"), _int(args[1], "extract lo")
        x, wx = _build(args[2], b, env)
        w = op_result_width(Operator("extract", (hi, lo)), [wx])
        return b.extract(hi, lo, x), w
    if head == "zext":
        need(2)
        k = _int(args[0], "zext amount")
        x, wx = _build(args[1], b, env)
        w = op_result_width(Operator("zero_extend", (k,)), [wx])
        return b.zext(k, x), w
    raise ParseError(f"unknown operator {head!r}")


def parse_document(text: str, pipeline_override: int | None = None
                   ) -> SpecDocument:
    """Parse a full specification document.

    pipeline_override, when given, replaces the document's own pipeline
    depth (used by the command line's --pipeline-depth flag).
    """
    tokens = _tokenize(text)
    form, pos = _read(tokens, 0)
    if pos != len(tokens):
        raise ParseError(f"trailing input after document: {tokens[pos]!r}")
    body = _clause(form, "spec")
    if not body:
        raise ParseError("spec needs (inputs ...) and an expression")

    decls = _clause(body[0], "inputs")
    if not decls:
        raise ParseError("at least one input is required")
    inputs: list[tuple[str, int]] = []
    for d in decls:
        if not isinstance(d, list) or len(d) != 2:
            raise ParseError(f"input declaration must be (name width): {d!r}")
        name, width = d[0], _int(d[1], "input width")
        if not isinstance(name, str) or not _NAME.fullmatch(name):
            raise ParseError(f"bad input name {name!r}")
        if any(n == name for n, _ in inputs):
            raise ParseError(f"duplicate input {name!r}")
        if width <= 0:
            raise ParseError(f"input {name!r} width must be positive")
        inputs.append((name, width))

    rest = body[1:]
    pipeline = 0
    if rest and isinstance(rest[0], list) and rest[0][:1] == ["pipeline"]:
        clause = _clause(rest[0], "pipeline")
        if len(clause) != 1:
            raise ParseError(f"pipeline takes one number, got {clause!r}")
        pipeline = _int(clause[0], "pipeline depth")
        if pipeline < 0:
            raise ParseError("pipeline depth must be >= 0")
        rest = rest[1:]
    if len(rest) != 1:
        raise ParseError(f"expected exactly one expression, got {len(rest)}")
    if pipeline_override is not None:
        if pipeline_override < 0:
            raise ParseError("pipeline depth must be >= 0")
        pipeline = pipeline_override

    b = ProgBuilder()
    env = {name: (b.var(name, w), w) for name, w in inputs}
    root, w = _build(rest[0], b, env)
    for _ in range(pipeline):
        root = b.reg(root, BitVec.of(0, w))
    prog = b.prog(root)
    check_well_formed(prog)
    return SpecDocument(tuple(inputs), pipeline, prog)


def parse_spec(text: str) -> Prog:
    """Parse a document and return just its behavioral program."""
    return parse_document(text).prog
