"""Deterministic SMT-LIB2 (QF_BV) emission and model parsing.

Terms are emitted as a flat chain of 0-ary define-funs in first-visit
topological order, so shared subterms are written once and the script
never nests deeply.  Width-1 terms standing for booleans are asserted as
(= term #b1); the eq/compare family is emitted through (ite ... #b1 #b0)
so every term stays bit-vector sorted.

Byte-for-byte determinism is a contract: the same query object emits the
same script, which keeps solver behavior and test logs reproducible.
"""

from __future__ import annotations

import re

from .ir import BitVec, Operator, SketchmapError
from .terms import Term

_CMP = {"eq": "=", "ult": "bvult", "ule": "bvule", "slt": "bvslt",
        "sle": "bvsle"}
_BIN = {"add": "bvadd", "sub": "bvsub", "mul": "bvmul", "and": "bvand",
        "or": "bvor", "xor": "bvxor", "shl": "bvshl", "lshr": "bvlshr",
        "ashr": "bvashr"}


def _sanitize(name: str) -> str:
    return re.sub(r"[^A-Za-z0-9_]", "_", name)


def symbol_name(t: Term) -> str:
    if t.kind == "input":
        return f"in_{_sanitize(t.name)}_t{t.time}"
    if t.kind == "hole":
        return f"hole_{_sanitize(t.label)}"
    raise SketchmapError(f"not a symbol term: {t!r}")


def _bits(b: BitVec) -> str:
    return "#b" + format(b.value, f"0{b.width}b")


class _Emitter:
    def __init__(self):
        self.lines: list[str] = []
        self.names: dict[int, str] = {}  # id(term) -> emitted name/literal
        self.counter = 0

    def ref(self, t: Term) -> str:
        s = self.names.get(id(t))
        if s is not None:
            return s
        if t.kind == "const":
            s = _bits(t.value)
        elif t.kind in ("input", "hole"):
            s = symbol_name(t)
        else:
            expr = self._expr(t)
            s = f"t{self.counter}"
            self.counter += 1
            self.lines.append(
                f"(define-fun {s} () (_ BitVec {t.width}) {expr})")
        self.names[id(t)] = s
        return s

    def _expr(self, t: Term) -> str:
        if t.kind == "ite":
            c, a, b = (self.ref(x) for x in t.args)
            return f"(ite (= {c} #b1) {a} {b})"
        op = t.op
        args = [self.ref(x) for x in t.args]
        name = op.name
        if name in _BIN:
            return f"({_BIN[name]} {args[0]} {args[1]})"
        if name in _CMP:
            return f"(ite ({_CMP[name]} {args[0]} {args[1]}) #b1 #b0)"
        if name == "not":
            return f"(bvnot {args[0]})"
        if name == "neg":
            return f"(bvneg {args[0]})"
        if name == "mux":
            return f"(ite (= {args[0]} #b1) {args[1]} {args[2]})"
        if name == "concat":
            return f"(concat {args[0]} {args[1]})"
        if name == "extract":
            hi, lo = op.params
            return f"((_ extract {hi} {lo}) {args[0]})"
        if name == "zero_extend":
            return f"((_ zero_extend {op.params[0]}) {args[0]})"
        if name == "sign_extend":
            return f"((_ sign_extend {op.params[0]}) {args[0]})"
        w = t.args[0].width
        zero = "#b" + "0" * w
        ones = "#b" + "1" * w
        if name == "reduce_or":
            return f"(ite (distinct {args[0]} {zero}) #b1 #b0)"
        if name == "reduce_and":
            return f"(ite (= {args[0]} {ones}) #b1 #b0)"
        raise SketchmapError(f"cannot emit operator {name!r}")


def emit_smtlib(asserts: list[Term], declare: list[Term],
                get_values: list[Term]) -> tuple[str, dict[str, Term]]:
    """Render a full script.

    asserts: width-1 terms, each asserted equal to #b1 as a named
    assertion.  declare: symbol terms to declare-const (leaves of the
    asserts are added automatically).  get_values: symbols to query after
    a sat answer.  Returns (script text, emitted-name -> symbol term).
    """
    from .terms import term_leaves

    syms: dict[int, Term] = {id(s): s for s in declare}
    for a in asserts:
        ins, holes = term_leaves(a)
        for s in ins | holes:
            syms[id(s)] = s
    for s in get_values:
        syms[id(s)] = s

    by_name: dict[str, Term] = {}
    for s in syms.values():
        n = symbol_name(s)
        if n in by_name and by_name[n] is not s:
            raise SketchmapError(f"symbol name collision on {n!r}")
        by_name[n] = s

    em = _Emitter()
    out = ["(set-option :produce-models true)", "(set-logic QF_BV)"]
    for n in sorted(by_name):
        out.append(f"(declare-const {n} (_ BitVec {by_name[n].width}))")
    body: list[str] = []
    for k, a in enumerate(asserts):
        if a.width != 1:
            raise SketchmapError("asserted terms must have width 1")
        r = em.ref(a)
        body.append(f"(assert (! (= {r} #b1) :named a{k}))")
    out.extend(em.lines)
    out.extend(body)
    out.append("(check-sat)")
    if get_values:
        names = " ".join(symbol_name(s) for s in get_values)
        out.append(f"(get-value ({names}))")
    out.append("(exit)")
    return "\n".join(out) + "\n", by_name


def parse_solver_output(text: str) -> tuple[str, dict[str, BitVec]]:
    """(status, model) from a solver's stdout.

    status is "sat", "unsat", or "unknown".  Model values accept #b / #x
    literals and (_ bvN w) triples, as printed by common QF_BV solvers.
    """
    from .solver.qfbv import SolverInputError, parse_all

    try:
        exprs = parse_all(text)
    except SolverInputError as e:
        raise SketchmapError(f"unparseable solver output: {e}") from e
    status = "unknown"
    model: dict[str, BitVec] = {}
    for e in exprs:
        if isinstance(e, str):
            if e in ("sat", "unsat", "unknown"):
                status = e
            continue
        for pair in e:
            if (isinstance(pair, list) and len(pair) == 2
                    and isinstance(pair[0], str)):
                v = _parse_value(pair[1])
                if v is not None:
                    model[pair[0]] = v
    return status, model


def _parse_value(v) -> BitVec | None:
    if isinstance(v, str):
        if v.startswith("#b"):
            return BitVec(len(v) - 2, int(v[2:], 2))
        if v.startswith("#x"):
            return BitVec(4 * (len(v) - 2), int(v[2:], 16))
        if v == "true":
            return BitVec(1, 1)
        if v == "false":
            return BitVec(1, 0)
        return None
    if (isinstance(v, list) and len(v) == 3 and v[0] == "_"
            and isinstance(v[1], str) and v[1].startswith("bv")):
        return BitVec.of(int(v[1][2:]), int(v[2]))
    return None
