"""SMT-LIB rendering and solver-output parsing."""

import pytest

from sketchmap.ir import BitVec, Operator, SketchmapError
from sketchmap.smtlib import emit_smtlib, parse_solver_output, symbol_name
from sketchmap.terms import TermBuilder


def _simple_assert():
    tb = TermBuilder()
    a = tb.input("a", 0, 4)
    b = tb.input("b", 1, 4)
    s = tb.app(Operator("add"), [a, b])
    eq = tb.app(Operator("eq"), [s, tb.const_of(9, 4)])
    return tb, a, b, eq


class TestEmission:
    def test_structure(self):
        tb, a, b, eq = _simple_assert()
        text, names = emit_smtlib([eq], [], [a, b])
        assert text.startswith("(set-option :produce-models true)\n"
                               "(set-logic QF_BV)\n")
        assert "(declare-const in_a_t0 (_ BitVec 4))" in text
        assert "(declare-const in_b_t1 (_ BitVec 4))" in text
        assert "bvadd" in text
        assert ":named a0" in text
        assert text.rstrip().endswith("(exit)")
        assert "(check-sat)" in text
        assert "(get-value (in_a_t0 in_b_t1))" in text
        assert set(names) == {"in_a_t0", "in_b_t1"}

    def test_byte_determinism(self):
        texts = set()
        for _ in range(3):
            tb, a, b, eq = _simple_assert()
            texts.add(emit_smtlib([eq], [], [a, b])[0])
        assert len(texts) == 1

    def test_comparisons_become_bit(self):
        tb = TermBuilder()
        a = tb.input("a", 0, 4)
        lt = tb.app(Operator("ult"), [a, tb.const_of(3, 4)])
        text, _ = emit_smtlib([lt], [], [])
        assert "(ite (bvult" in text and "#b1 #b0" in text

    def test_hole_names(self):
        tb = TermBuilder()
        h = tb.hole("m", 4)
        assert symbol_name(h) == "hole_m"
        eq = tb.app(Operator("eq"), [h, tb.const_of(6, 4)])
        text, _ = emit_smtlib([eq], [h], [h])
        assert "(declare-const hole_m (_ BitVec 4))" in text

    def test_wide_asserts_rejected(self):
        tb = TermBuilder()
        a = tb.input("a", 0, 4)
        with pytest.raises(SketchmapError):
            emit_smtlib([a], [], [])

    def test_shared_subterm_emitted_once(self):
        tb = TermBuilder()
        a = tb.input("a", 0, 8)
        sq = tb.app(Operator("mul"), [a, a])
        e1 = tb.app(Operator("eq"), [sq, tb.const_of(4, 8)])
        e2 = tb.app(Operator("ult"), [sq, tb.const_of(100, 8)])
        text, _ = emit_smtlib([e1, e2], [], [])
        assert text.count("bvmul") == 1


class TestOutputParsing:
    def test_sat_with_model(self):
        status, model = parse_solver_output(
            "sat\n((in_a_t0 #b0110) (hole_m #x2a))\n")
        assert status == "sat"
        assert model["in_a_t0"] == BitVec(4, 6)
        assert model["hole_m"] == BitVec(8, 0x2A)

    def test_unsat(self):
        assert parse_solver_output("unsat\n") == ("unsat", {})

    def test_decimal_triples(self):
        status, model = parse_solver_output("sat\n((x (_ bv9 4)))\n")
        assert model["x"] == BitVec(4, 9)

    def test_garbage_raises(self):
        with pytest.raises(SketchmapError):
            parse_solver_output("sat\n((x #b01")

    def test_roundtrip_through_builtin_solver(self):
        from sketchmap.solver.qfbv import run_script
        tb, a, b, eq = _simple_assert()
        text, names = emit_smtlib([eq], [], [a, b])
        status, model = parse_solver_output(run_script(text))
        assert status == "sat"
        got = (model["in_a_t0"].value + model["in_b_t1"].value) % 16
        assert got == 9
