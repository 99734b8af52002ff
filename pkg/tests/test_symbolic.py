"""Term DAG, symbolic interpretation, query construction."""

import random

import pytest

from sketchmap.interp import Stream, simulate
from sketchmap.ir import (
    BV, BitVec, ChoiceHole, ConstantHole, Op, Operator, Prog, ProgBuilder,
    Sketch, Var, WidthError,
)
from sketchmap.symbolic import (
    FreeVarMismatch, build_query, selector_width, symbolic_run,
)
from sketchmap.terms import TermBuilder, eval_term, term_leaves
from util_progs import random_behavioral


def _bv(v, w):
    return BitVec.of(v, w)


class TestTermBuilder:
    def test_interning(self):
        tb = TermBuilder()
        a = tb.input("a", 0, 4)
        b = tb.input("b", 0, 4)
        t1 = tb.app(Operator("add"), [a, b])
        t2 = tb.app(Operator("add"), [a, b])
        assert t1 is t2
        assert tb.const_of(3, 4) is tb.const_of(3, 4)

    def test_constant_evaluation(self):
        tb = TermBuilder()
        t = tb.app(Operator("mul"), [tb.const_of(7, 4), tb.const_of(7, 4)])
        assert t.kind == "const" and t.value == _bv(1, 4)

    def test_identity_folds(self):
        tb = TermBuilder()
        a = tb.input("a", 0, 4)
        assert tb.app(Operator("eq"), [a, a]).value == _bv(1, 1)
        assert tb.app(Operator("xor"), [a, a]).value == _bv(0, 4)
        assert tb.app(Operator("and"), [a, tb.const_of(0, 4)]).value == _bv(0, 4)
        assert tb.app(Operator("and"), [a, tb.const_of(15, 4)]) is a
        assert tb.app(Operator("add"), [tb.const_of(0, 4), a]) is a
        assert tb.app(Operator("mul"), [a, tb.const_of(1, 4)]) is a
        assert tb.app(Operator("or"), [a, a]) is a
        n = tb.app(Operator("not"), [a])
        assert tb.app(Operator("not"), [n]) is a

    def test_wiring_folds(self):
        tb = TermBuilder()
        a = tb.input("a", 0, 4)
        assert tb.app(Operator("extract", (3, 0)), [a]) is a
        z = tb.app(Operator("zero_extend", (2,)), [a])
        assert tb.app(Operator("extract", (3, 0)), [z]) is a
        assert tb.app(Operator("extract", (5, 4)), [z]).value == _bv(0, 2)
        b = tb.input("b", 0, 4)
        cc = tb.app(Operator("concat"), [a, b])
        assert tb.app(Operator("extract", (3, 0)), [cc]) is b
        assert tb.app(Operator("extract", (7, 4)), [cc]) is a
        e1 = tb.app(Operator("extract", (2, 1)), [a])
        e2 = tb.app(Operator("extract", (1, 1)), [e1])
        assert e2 is tb.app(Operator("extract", (2, 2)), [a])

    def test_ite_folds(self):
        tb = TermBuilder()
        c = tb.input("c", 0, 1)
        a = tb.input("a", 0, 4)
        b = tb.input("b", 0, 4)
        assert tb.ite(tb.const_of(1, 1), a, b) is a
        assert tb.ite(tb.const_of(0, 1), a, b) is b
        assert tb.ite(c, a, a) is a
        assert tb.ite(c, tb.const_of(1, 1), tb.const_of(0, 1)) is c

    def test_mux_becomes_ite(self):
        tb = TermBuilder()
        c = tb.input("c", 0, 1)
        a = tb.input("a", 0, 4)
        b = tb.input("b", 0, 4)
        t = tb.app(Operator("mux"), [c, a, b])
        assert t.kind == "ite"

    def test_distribution_collapses_configurable_datapath(self):
        # (ite(h, a+d, a-d) * c) with a,c,d constant folds to an ite of
        # constants: no symbolic multiply survives.
        tb = TermBuilder()
        h = tb.hole("sel", 1)
        a, c, d = (tb.const_of(v, 8) for v in (20, 3, 5))
        pre = tb.ite(tb.app(Operator("eq"), [h, tb.const_of(1, 1)]),
                     tb.app(Operator("add"), [a, d]),
                     tb.app(Operator("sub"), [a, d]))
        m = tb.app(Operator("mul"), [pre, c])
        assert m.kind == "ite"
        assert m.args[1].value == _bv(75, 8)
        assert m.args[2].value == _bv(45, 8)

    def test_substitute_refolds(self):
        tb = TermBuilder()
        a = tb.input("a", 0, 4)
        b = tb.input("b", 0, 4)
        t = tb.app(Operator("add"), [tb.app(Operator("mul"), [a, b]), a])
        s = tb.substitute(t, {a: tb.const_of(3, 4), b: tb.const_of(5, 4)})
        assert s.value == _bv((3 * 5 + 3) & 15, 4)

    def test_width_conflicts_rejected(self):
        tb = TermBuilder()
        tb.input("a", 0, 4)
        with pytest.raises(WidthError):
            tb.input("a", 0, 5)
        tb.hole("h", 3)
        with pytest.raises(WidthError):
            tb.hole("h", 4)


class TestSymbolicRun:
    def test_combinational(self):
        b = ProgBuilder()
        a = b.var("a", 1)
        c = b.var("c", 1)
        g = b.op("and", a, c)
        roots = symbolic_run(b.prog(g), 1)
        assert roots[0].op.name == "and"
        assert {(s.name, s.time) for s in term_leaves(roots[0])[0]} == \
            {("a", 0), ("c", 0)}
        assert {(s.name, s.time) for s in term_leaves(roots[1])[0]} == \
            {("a", 1), ("c", 1)}

    def test_register_shifts_time(self):
        b = ProgBuilder()
        a = b.var("a", 4)
        r = b.reg(a, _bv(9, 4))
        roots = symbolic_run(b.prog(r), 2)
        assert roots[0].value == _bv(9, 4)
        assert roots[1].kind == "input" and roots[1].time == 0
        assert roots[2].time == 1

    def test_constant_hole_becomes_symbol(self):
        b = ProgBuilder()
        h = b.hole("m", ConstantHole(4))
        roots = symbolic_run(b.prog(h), 0)
        assert roots[0].kind == "hole" and roots[0].label == "m"

    def test_choice_hole_becomes_selected_ite(self):
        b = ProgBuilder()
        a = b.var("a", 4)
        c = b.var("c", 4)
        alts = (Op(Operator("add"), (a, c)), Op(Operator("sub"), (a, c)),
                Op(Operator("xor"), (a, c)))
        h = b.hole("w", ChoiceHole(alts))
        roots = symbolic_run(b.prog(h), 0)
        t = roots[0]
        assert t.kind == "ite"
        _, holes = term_leaves(t)
        assert {x.label for x in holes} == {"w"}
        assert selector_width(3) == 2

    def test_termination_on_random_programs(self):
        rng = random.Random(31)
        for _ in range(50):
            p = random_behavioral(rng, max_nodes=14, max_width=6)
            roots = symbolic_run(p, 8)
            assert len(roots) == 9

    def test_agreement_with_interpreter(self):
        rng = random.Random(37)
        for _ in range(60):
            p = random_behavioral(rng, max_nodes=12, max_width=5)
            from sketchmap.ir import var_widths
            vw = var_widths(p)
            horizon = 4
            roots = symbolic_run(p, horizon - 1)
            env_vals = {(n, t): _bv(rng.getrandbits(w), w)
                        for n, w in vw.items() for t in range(horizon)}
            streams = {n: Stream(tuple(env_vals[(n, t)]
                                       for t in range(horizon)))
                       for n in vw}
            sim = simulate(p, streams, horizon)
            for t in range(horizon):
                got = eval_term(roots[t], env_vals, {})
                assert got == sim[t], f"cycle {t}: {got} != {sim[t]}"


def _lut2_sketch(width_out=1):
    """Hand-built sketch: one 4-bit memory hole indexed by concat(b, a)."""
    from sketchmap.ir import EmitMeta, PortBinding, Prim

    b = ProgBuilder()
    a_id = b.var("a", 1)
    b_id = b.var("b", 1)
    idx = b.concat(b_id, a_id)
    h = b.hole("m", ConstantHole(4))
    body_b = b.child()
    tbl = body_b.var("tbl", 4)
    sel = body_b.var("sel", 2)
    shifted = body_b.op("lshr", tbl, body_b.zext(2, sel))
    out = body_b.extract(0, 0, shifted)
    body = body_b.prog(out)
    meta = EmitMeta(
        "lut2",
        (("sel", PortBinding("in", "in", 2)),),
        (("sram", "tbl"),), "out")
    pr = b.add(Prim((("tbl", h), ("sel", idx)), body, meta))
    return Sketch(b.prog(pr), {"m": ConstantHole(4)})


def _xor_spec():
    b = ProgBuilder()
    a = b.var("a", 1)
    c = b.var("b", 1)
    return b.prog(b.op("xor", a, c))


class TestBuildQuery:
    def test_conjunct_counts(self):
        spec = _xor_spec()
        sk = _lut2_sketch()
        q0 = build_query(spec, sk, 0, 0)
        assert len(q0.equal_terms) == 1
        q21 = build_query(spec, sk, 2, 1)
        assert len(q21.equal_terms) == 2
        times = {s.time for s in q21.input_symbols}
        assert times <= {0, 1, 2, 3}

    def test_shared_inputs_between_sides(self):
        spec = _xor_spec()
        sk = _lut2_sketch()
        q = build_query(spec, sk, 0, 0)
        names = {(s.name, s.time) for s in q.input_symbols}
        assert names == {("a", 0), ("b", 0)}
        assert {h.label for h in q.hole_symbols} == {"m"}

    def test_free_var_mismatch(self):
        b = ProgBuilder()
        a = b.var("a", 1)
        spec = b.prog(b.op("not", a))
        with pytest.raises(FreeVarMismatch):
            build_query(spec, _lut2_sketch(), 0, 0)

    def test_width_mismatch_of_inputs(self):
        b = ProgBuilder()
        a = b.var("a", 2)
        c = b.var("b", 2)
        spec = b.prog(b.op("xor", a, c))
        with pytest.raises(FreeVarMismatch):
            build_query(spec, _lut2_sketch(), 0, 0)

    def test_spec_must_be_behavioral(self):
        sk = _lut2_sketch()
        with pytest.raises(Exception):
            build_query(sk.psi, sk, 0, 0)

    def test_aligned_sides_fold_to_true(self):
        # identical programs: every equality folds at construction
        b = ProgBuilder()
        a = b.var("a", 4)
        c = b.var("b", 4)
        spec = b.prog(b.op("add", a, c))
        b2 = ProgBuilder()
        a2 = b2.var("a", 4)
        c2 = b2.var("b", 4)
        b3 = b2.child()
        x = b3.var("x", 4)
        y = b3.var("y", 4)
        s = b3.op("add", x, y)
        body = b3.prog(s)
        from sketchmap.ir import EmitMeta, PortBinding, Prim
        meta = EmitMeta("adder", (("x", PortBinding("a", "in", 4)),
                                  ("y", PortBinding("b", "in", 4))), (), "o")
        pr = b2.add(Prim((("x", a2), ("y", c2)), body, meta))
        sk = Sketch(b2.prog(pr), {})
        q = build_query(spec, sk, 0, 2)
        assert all(t.kind == "const" and t.value.value == 1
                   for t in q.equal_terms)
