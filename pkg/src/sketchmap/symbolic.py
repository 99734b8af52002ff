"""Symbolic interpretation and equivalence-query construction.

symbolic_run unrolls a program over cycles 0..T, producing one Term per
cycle for the root.  Registers turn into references to the previous
cycle's data term (init constant at cycle 0), so the result is a pure
combinational term over input symbols (name, cycle) and hole symbols.

build_query lines up a behavioral spec against a sketch over a shared
TermBuilder: both sides see the same input symbols, so structurally
aligned datapaths intern to the same terms and the equality conjuncts can
fold before any solver runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import ceil, log2
from typing import Optional

from .ir import (
    BV, BitVec, ChoiceHole, ConstantHole, Hole, Id, Node, Op, Operator, Prim,
    Prog, Reg, Sketch, SketchmapError, Var, WidthError, check_well_formed,
    free_vars, is_behavioral, sketch_holes_consistent, structural_violations,
    var_widths, _collect_programs,
)
from .terms import Term, TermBuilder, term_leaves


class FreeVarMismatch(SketchmapError):
    """Spec and sketch disagree on their input signature."""


def selector_width(k: int) -> int:
    """Bits needed to index k alternatives (k >= 1; 0 bits when k == 1)."""
    if k < 1:
        raise ValueError("a choice needs at least one alternative")
    return max(1, ceil(log2(k))) if k > 1 else 0


def _choice_term(tb: TermBuilder, label: str, spec: ChoiceHole,
                 alt_terms: list[Term]) -> Term:
    k = len(alt_terms)
    if k == 1:
        return alt_terms[0]
    sel = tb.hole(label, selector_width(k))
    out = alt_terms[-1]
    for i in range(k - 2, -1, -1):
        cond = tb.app(Operator("eq"), [sel, tb.const_of(i, sel.width)])
        out = tb.ite(cond, alt_terms[i], out)
    return out


def symbolic_run(p: Prog, upto: int, tb: Optional[TermBuilder] = None
                 ) -> list[Term]:
    """Terms for the root at cycles 0..upto (well-formedness checked)."""
    if tb is None:
        tb = TermBuilder()
    witness = check_well_formed(p)
    progs: list = []
    _collect_programs(p, progs, set())
    node_of: dict[Id, Node] = {}
    for prog, _ in progs:
        node_of.update(prog.nodes)
    var_src: dict[Id, tuple[str, object]] = {}
    for prog, enclosing in progs:
        if enclosing is None:
            for i, n in prog.nodes.items():
                if isinstance(n, Var):
                    var_src[i] = ("env", n.name)
        else:
            _, prim = enclosing
            bm = prim.bind_map()
            for i, n in prog.nodes.items():
                if isinstance(n, Var):
                    var_src[i] = ("bind", bm[n.name])
    order = sorted(node_of, key=lambda j: (witness[j], j))
    regs = [(i, n) for i, n in node_of.items() if isinstance(n, Reg)]

    def eval_plain(n: Node, cur: dict[Id, Term], t: int) -> Term:
        """A node with no id of its own (a choice alternative)."""
        if isinstance(n, BV):
            return tb.const(n.b)
        if isinstance(n, Var):
            return tb.input(n.name, t, n.width)
        if isinstance(n, Op):
            return tb.app(n.op, [cur[a] for a in n.args])
        raise SketchmapError(f"bad choice alternative {n}")

    roots: list[Term] = []
    prev: dict[Id, Term] = {}
    for t in range(upto + 1):
        cur: dict[Id, Term] = {}
        for i, n in regs:
            cur[i] = tb.const(n.init) if t == 0 else prev[n.data]
        for i in order:
            n = node_of[i]
            if isinstance(n, Reg):
                continue
            if isinstance(n, BV):
                cur[i] = tb.const(n.b)
            elif isinstance(n, Var):
                kind, src = var_src[i]
                if kind == "env":
                    cur[i] = tb.input(src, t, n.width)
                else:
                    cur[i] = cur[src]
            elif isinstance(n, Op):
                cur[i] = tb.app(n.op, [cur[a] for a in n.args])
            elif isinstance(n, Prim):
                cur[i] = cur[n.body.root]
            else:
                assert isinstance(n, Hole)
                if isinstance(n.spec, ConstantHole):
                    cur[i] = tb.hole(n.label, n.spec.width)
                else:
                    alts = [eval_plain(a, cur, t) for a in n.spec.alternatives]
                    cur[i] = _choice_term(tb, n.label, n.spec, alts)
        roots.append(cur[p.root])
        prev = cur
    return roots


def eval_constraint_expr(tb: TermBuilder, expr, holes: dict[str, "ConstantHole | ChoiceHole"]) -> Term:
    """Side-constraint expression -> Term over hole symbols.

    Grammar (nested tuples): ("bv", value, width) | ("hole", label) |
    ("concat", hi, lo) | ("extract", hi, lo, e).  A constraint holds when
    the term equals 1 (width must be 1).
    """
    tag = expr[0]
    if tag == "bv":
        return tb.const_of(expr[1], expr[2])
    if tag == "hole":
        label = expr[1]
        spec = holes.get(label)
        if spec is None:
            raise SketchmapError(f"constraint references unknown hole {label!r}")
        if isinstance(spec, ConstantHole):
            return tb.hole(label, spec.width)
        return tb.hole(label, selector_width(len(spec.alternatives)))
    if tag == "concat":
        a = eval_constraint_expr(tb, expr[1], holes)
        b = eval_constraint_expr(tb, expr[2], holes)
        return tb.app(Operator("concat"), [a, b])
    if tag == "extract":
        e = eval_constraint_expr(tb, expr[3], holes)
        return tb.app(Operator("extract", (expr[1], expr[2])), [e])
    raise SketchmapError(f"bad constraint expression {expr!r}")


@dataclass
class EquivalenceQuery:
    """Everything the CEGIS loop needs, term side.

    equal_terms[i] states spec == sketch at cycle t + i (width 1); the
    full claim is their conjunction plus the side constraints (choice
    selector bounds and architecture constraints), which mention holes
    only.  input_symbols covers every (name, cycle) either side reads.
    """

    spec_terms: list[Term]
    sketch_terms: list[Term]
    equal_terms: list[Term]
    side_constraints: list[Term]
    input_symbols: list[Term]
    hole_symbols: list[Term]
    t: int
    c: int
    spec_prog: Prog = field(repr=False, default=None)
    sketch: Sketch = field(repr=False, default=None)
    builder: TermBuilder = field(repr=False, default=None)


def build_query(spec: Prog, sketch: Sketch, t: int, c: int
                ) -> EquivalenceQuery:
    if t < 0 or c < 0:
        raise ValueError("t and c must be >= 0")
    if not is_behavioral(spec):
        raise SketchmapError("the spec program must be behavioral (no "
                             "primitives, no holes)")
    bad = structural_violations(sketch.psi)
    if bad:
        raise SketchmapError("sketch is not structural: " + "; ".join(bad))
    if not sketch_holes_consistent(sketch):
        raise SketchmapError("sketch hole table does not match its program")
    sw = var_widths(spec)
    kw = var_widths(sketch.psi)
    if sw != kw:
        raise FreeVarMismatch(
            f"spec inputs {sorted(sw.items())} but sketch inputs "
            f"{sorted(kw.items())}")

    tb = TermBuilder()
    spec_all = symbolic_run(spec, t + c, tb)
    sketch_all = symbolic_run(sketch.psi, t + c, tb)
    if spec_all[0].width != sketch_all[0].width:
        raise WidthError(
            f"spec output width {spec_all[0].width} != sketch output "
            f"width {sketch_all[0].width}")
    eq = Operator("eq")
    equal_terms = [tb.app(eq, [spec_all[i], sketch_all[i]])
                   for i in range(t, t + c + 1)]

    side: list[Term] = []
    for label, spec_h in sketch.holes.items():
        if isinstance(spec_h, ChoiceHole):
            k = len(spec_h.alternatives)
            w = selector_width(k)
            if w and k < (1 << w):
                sel = tb.hole(label, w)
                side.append(tb.app(Operator("ult"),
                                   [sel, tb.const_of(k, w)]))
    for expr in sketch.side_constraints:
        ct = eval_constraint_expr(tb, expr, sketch.holes)
        if ct.width != 1:
            raise WidthError("side constraints must have width 1")
        side.append(ct)

    ins: set[Term] = set()
    hols: set[Term] = set()
    for x in equal_terms + side + spec_all[t:] + sketch_all[t:]:
        i2, h2 = term_leaves(x)
        ins |= i2
        hols |= h2
    # every hole the sketch declares gets a symbol even if folding dropped
    # it from the equalities: the model must still assign it
    for label, spec_h in sketch.holes.items():
        if isinstance(spec_h, ConstantHole):
            hols.add(tb.hole(label, spec_h.width))
        else:
            w = selector_width(len(spec_h.alternatives))
            if w:
                hols.add(tb.hole(label, w))

    return EquivalenceQuery(
        spec_terms=spec_all[t:],
        sketch_terms=sketch_all[t:],
        equal_terms=equal_terms,
        side_constraints=side,
        input_symbols=sorted(ins, key=lambda s: (s.name, s.time)),
        hole_symbols=sorted(hols, key=lambda s: s.label),
        t=t,
        c=c,
        spec_prog=spec,
        sketch=sketch,
        builder=tb,
    )
