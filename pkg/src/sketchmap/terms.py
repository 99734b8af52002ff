"""Hash-consed symbolic terms over bit vectors.

A Term is a const, an input symbol (name, cycle), a hole symbol, an
operator application, or an if-then-else.  Terms are interned per
TermBuilder: structurally equal terms are the same object, so equality
checks are pointer checks and structurally aligned circuits collapse.

Construction folds aggressively but only with rules that preserve the
concrete semantics of eval_op bit for bit:

  * all-constant applications evaluate away,
  * algebraic identities (x&0, x^0, x*1, eq(x,x), ...),
  * wiring normalization (extract of extract / concat / extends),
  * ite with a constant condition or equal branches,
  * distribution of an operation over a small ite tree when every other
    argument is constant.  This is what keeps synthesis queries small:
    with concrete inputs substituted, a configurable datapath folds to an
    ite tree over its configuration bits, not a symbolic multiplier.

The agreement of all this with the concrete interpreter is pinned by a
randomized test over full programs.
"""

from __future__ import annotations

from typing import Optional, Union

from .interp import eval_op
from .ir import ArityError, BitVec, Operator, WidthError, op_result_width

_DIST_LIMIT = 64  # max ite-tree size eligible for distribution


class Term:
    __slots__ = ("kind", "width", "args", "op", "name", "time", "label",
                 "value", "ite_size")

    def __init__(self, kind: str, width: int, *, args: tuple = (),
                 op: Optional[Operator] = None, name: str = "",
                 time: int = -1, label: str = "",
                 value: Optional[BitVec] = None):
        self.kind = kind
        self.width = width
        self.args = args
        self.op = op
        self.name = name
        self.time = time
        self.label = label
        self.value = value
        # size of the pure ite-over-const tree rooted here, None otherwise
        if kind == "const":
            self.ite_size: Optional[int] = 1
        elif kind == "ite":
            sizes = [a.ite_size for a in args[1:]]
            self.ite_size = (1 + sum(sizes)) if all(s is not None for s in sizes) else None
        else:
            self.ite_size = None

    def __repr__(self):
        if self.kind == "const":
            return f"<{self.value}>"
        if self.kind == "input":
            return f"<{self.name}@{self.time}:{self.width}>"
        if self.kind == "hole":
            return f"<?{self.label}:{self.width}>"
        if self.kind == "ite":
            return f"<ite {self.args!r}>"
        return f"<{self.op} {self.args!r}>"


class TermBuilder:
    """Interning context.  Terms from different builders never mix."""

    def __init__(self):
        self._table: dict = {}
        self.inputs: dict[tuple[str, int], Term] = {}
        self.holes: dict[str, Term] = {}

    def _intern(self, key, make) -> Term:
        t = self._table.get(key)
        if t is None:
            t = make()
            self._table[key] = t
        return t

    def const(self, b: BitVec) -> Term:
        return self._intern(("c", b.width, b.value),
                            lambda: Term("const", b.width, value=b))

    def const_of(self, value: int, width: int) -> Term:
        return self.const(BitVec.of(value, width))

    def input(self, name: str, time: int, width: int) -> Term:
        key = ("i", name, time)
        t = self._table.get(key)
        if t is None:
            t = Term("input", width, name=name, time=time)
            self._table[key] = t
            self.inputs[(name, time)] = t
        if t.width != width:
            raise WidthError(
                f"input {name!r} used at widths {t.width} and {width}")
        return t

    def hole(self, label: str, width: int) -> Term:
        key = ("h", label)
        t = self._table.get(key)
        if t is None:
            t = Term("hole", width, label=label)
            self._table[key] = t
            self.holes[label] = t
        if t.width != width:
            raise WidthError(
                f"hole {label!r} used at widths {t.width} and {width}")
        return t

    # -- ite ------------------------------------------------------------

    def ite(self, cond: Term, a: Term, b: Term) -> Term:
        if cond.width != 1:
            raise WidthError("ite condition must have width 1")
        if a.width != b.width:
            raise WidthError("ite branches must share a width")
        if cond.kind == "const":
            return a if cond.value.value == 1 else b
        if a is b:
            return a
        if a.width == 1 and a.kind == "const" and b.kind == "const":
            # ite(c,1,0) = c ; ite(c,0,1) = not c
            if a.value.value == 1 and b.value.value == 0:
                return cond
            return self.app(Operator("not"), [cond])
        key = ("t", id(cond), id(a), id(b))
        return self._intern(key, lambda: Term("ite", a.width,
                                              args=(cond, a, b)))

    # -- operator application -------------------------------------------

    def app(self, op: Operator, args: list[Term]) -> Term:
        rw = op_result_width(op, [a.width for a in args])
        if all(a.kind == "const" for a in args):
            return self.const(eval_op(op, [a.value for a in args]))
        folded = self._fold(op, args, rw)
        if folded is not None:
            return folded
        dist = self._distribute(op, args, rw)
        if dist is not None:
            return dist
        key = ("a", op, tuple(id(a) for a in args))
        return self._intern(key, lambda: Term("app", rw, op=op,
                                              args=tuple(args)))

    def _fold(self, op: Operator, args: list[Term], rw: int) -> Optional[Term]:
        name = op.name
        if name == "mux":
            return self.ite(args[0], args[1], args[2])
        if name == "eq" and args[0] is args[1]:
            return self.const_of(1, 1)
        if name in ("ule", "sle") and args[0] is args[1]:
            return self.const_of(1, 1)
        if name in ("ult", "slt") and args[0] is args[1]:
            return self.const_of(0, 1)
        if name in ("xor", "sub") and args[0] is args[1]:
            return self.const_of(0, args[0].width)
        if name in ("and", "or") and args[0] is args[1]:
            return args[0]
        if name == "not" and args[0].kind == "app" and args[0].op.name == "not":
            return args[0].args[0]
        w = args[0].width
        full = (1 << w) - 1
        for i in (0, 1):
            if len(args) == 2 and args[i].kind == "const":
                k = args[i].value.value
                other = args[1 - i]
                if name == "and":
                    if k == 0:
                        return self.const_of(0, w)
                    if k == full:
                        return other
                elif name == "or":
                    if k == 0:
                        return other
                    if k == full:
                        return self.const_of(full, w)
                elif name == "xor":
                    if k == 0:
                        return other
                elif name == "add":
                    if k == 0:
                        return other
                elif name == "mul":
                    if k == 0:
                        return self.const_of(0, w)
                    if k == 1:
                        return other
        if name == "sub" and args[1].kind == "const" and args[1].value.value == 0:
            return args[0]
        if name in ("shl", "lshr", "ashr") and args[1].kind == "const" \
                and args[1].value.value == 0:
            return args[0]
        if name in ("zero_extend", "sign_extend") and op.params[0] == 0:
            return args[0]
        if name == "extract":
            hi, lo = op.params
            x = args[0]
            if lo == 0 and hi == x.width - 1:
                return x
            if x.kind == "app":
                xi = x.op.name
                if xi == "extract":
                    h2, l2 = x.op.params
                    return self.app(Operator("extract", (l2 + hi, l2 + lo)),
                                    [x.args[0]])
                if xi == "zero_extend":
                    iw = x.args[0].width
                    if hi < iw:
                        return self.app(Operator("extract", (hi, lo)),
                                        [x.args[0]])
                    if lo >= iw:
                        return self.const_of(0, rw)
                if xi == "concat":
                    hi_part, lo_part = x.args
                    if hi < lo_part.width:
                        return self.app(Operator("extract", (hi, lo)),
                                        [lo_part])
                    if lo >= lo_part.width:
                        return self.app(
                            Operator("extract",
                                     (hi - lo_part.width, lo - lo_part.width)),
                            [hi_part])
        return None

    def _distribute(self, op: Operator, args: list[Term],
                    rw: int) -> Optional[Term]:
        """op(... ite-tree ..., consts) -> push op into the tree."""
        ite_at = -1
        for i, a in enumerate(args):
            if a.kind == "ite" and a.ite_size is not None:
                if ite_at >= 0:
                    return None  # two ite args: leave alone
                ite_at = i
            elif a.kind != "const":
                return None
        if ite_at < 0:
            return None
        t = args[ite_at]
        if t.ite_size > _DIST_LIMIT:
            return None
        cond, x, y = t.args
        ax = list(args)
        ax[ite_at] = x
        ay = list(args)
        ay[ite_at] = y
        return self.ite(cond, self.app(op, ax), self.app(op, ay))

    # -- substitution ----------------------------------------------------

    def substitute(self, t: Term, mapping: dict[Term, Term],
                   memo: Optional[dict] = None) -> Term:
        """Replace leaf terms (inputs/holes) per mapping, rebuilding (and
        thus refolding) everything above."""
        if memo is None:
            memo = {}
        out = memo.get(id(t))
        if out is not None:
            return out
        if t in mapping:
            r = mapping[t]
            if r.width != t.width:
                raise WidthError("substitution changes a width")
        elif t.kind in ("const", "input", "hole"):
            r = t
        elif t.kind == "ite":
            c, a, b = (self.substitute(x, mapping, memo) for x in t.args)
            r = self.ite(c, a, b)
        else:
            r = self.app(t.op, [self.substitute(x, mapping, memo)
                                for x in t.args])
        memo[id(t)] = r
        return r


def term_leaves(t: Term) -> tuple[set[Term], set[Term]]:
    """(input symbols, hole symbols) reachable from t."""
    ins: set[Term] = set()
    holes: set[Term] = set()
    seen: set[int] = set()
    stack = [t]
    while stack:
        x = stack.pop()
        if id(x) in seen:
            continue
        seen.add(id(x))
        if x.kind == "input":
            ins.add(x)
        elif x.kind == "hole":
            holes.add(x)
        else:
            stack.extend(x.args)
    return ins, holes


def eval_term(t: Term, inputs: dict[tuple[str, int], BitVec],
              holes: dict[str, BitVec],
              memo: Optional[dict] = None) -> BitVec:
    """Concrete evaluation; the reference the solver path is tested against."""
    if memo is None:
        memo = {}
    v = memo.get(id(t))
    if v is not None:
        return v
    if t.kind == "const":
        v = t.value
    elif t.kind == "input":
        v = inputs[(t.name, t.time)]
        if v.width != t.width:
            raise WidthError(f"input {t.name!r} width mismatch")
    elif t.kind == "hole":
        v = holes[t.label]
        if v.width != t.width:
            raise WidthError(f"hole {t.label!r} width mismatch")
    elif t.kind == "ite":
        c = eval_term(t.args[0], inputs, holes, memo)
        v = eval_term(t.args[1] if c.value == 1 else t.args[2],
                      inputs, holes, memo)
    else:
        v = eval_op(t.op, [eval_term(a, inputs, holes, memo) for a in t.args])
    memo[id(t)] = v
    return v
