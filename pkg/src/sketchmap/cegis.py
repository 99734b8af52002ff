"""Counterexample-guided synthesis over equivalence queries.

The loop alternates two existential queries:

  SYNTH:  find hole values making spec == sketch hold on every input
          environment collected so far (plus the side constraints).
  VERIFY: find an input environment where the candidate's sketch differs
          from the spec over the checked cycle window.

VERIFY unsat means the candidate works everywhere: the holes are
substituted and the finished program is re-checked by the concrete
interpreter on all accumulated counterexamples, so a solver or encoding
bug surfaces as a hard error instead of a wrong netlist.  SYNTH unsat
means no hole assignment can work: the sketch cannot express the spec.

The counterexample set is seeded with a few deterministic pseudo-random
environments before the first SYNTH call.  Any environment is a sound
member (the final program must agree on all of them); seeding just saves
solver round-trips.  Progress is asserted every iteration: a VERIFY
counterexample that was already in the set would mean the loop cannot
terminate, so it raises instead.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Optional, Union

from .interp import Stream, simulate
from .ir import (
    BV, BitVec, ChoiceHole, ConstantHole, Node, Prog, Sketch,
    substitute_holes,
)
from .portfolio import (
    PortfolioResult, PortfolioTimeout, SolverConfig, SolverError,
    portfolio_solve,
)
from .smtlib import emit_smtlib, symbol_name
from .symbolic import EquivalenceQuery, build_query, selector_width
from .terms import Operator, Term, term_leaves

CexEnv = dict[tuple[str, int], BitVec]


@dataclass
class Success:
    program: Prog
    model: dict[str, BitVec]          # hole label -> solved value
    assignment: dict[str, Node]       # hole label -> substituted node
    solver: str
    wall_time: float
    iterations: int
    counterexamples: list[CexEnv] = field(repr=False, default_factory=list)


@dataclass
class Unsat:
    wall_time: float
    iterations: int


@dataclass
class Timeout:
    wall_time: float
    iterations: int


SynthesisResult = Union[Success, Unsat, Timeout]


def _random_envs(query: EquivalenceQuery, count: int, seed: int
                 ) -> list[CexEnv]:
    if not query.input_symbols:
        return []
    rng = random.Random(seed)
    out = []
    for _ in range(count):
        env = {(s.name, s.time): BitVec.of(rng.getrandbits(s.width), s.width)
               for s in query.input_symbols}
        if env not in out:
            out.append(env)
    return out


def _subst_inputs(query: EquivalenceQuery, term: Term, env: CexEnv) -> Term:
    tb = query.builder
    mapping = {s: tb.const(env.get((s.name, s.time),
                                   BitVec.of(0, s.width)))
               for s in query.input_symbols}
    return tb.substitute(term, mapping)


def _decode_assignment(query: EquivalenceQuery,
                       model: dict[str, BitVec]) -> tuple[
                           dict[str, BitVec], dict[str, Node]]:
    """Solver model (emitted names) -> hole label values and nodes."""
    by_label: dict[str, BitVec] = {}
    for s in query.hole_symbols:
        v = model.get(symbol_name(s), BitVec.of(0, s.width))
        by_label[s.label] = BitVec.of(v.value, s.width)
    nodes: dict[str, Node] = {}
    for label, spec in query.sketch.holes.items():
        if isinstance(spec, ConstantHole):
            v = by_label.get(label, BitVec.of(0, spec.width))
            by_label[label] = v
            nodes[label] = BV(v)
        else:
            k = len(spec.alternatives)
            w = selector_width(k)
            idx = by_label.get(label, BitVec.of(0, max(1, w))).value if w else 0
            if idx >= k:
                raise SolverError(
                    f"model picked alternative {idx} of {k} for {label!r} "
                    f"despite the side constraint")
            nodes[label] = spec.alternatives[idx]
    return by_label, nodes


def _revalidate(query: EquivalenceQuery, program: Prog,
                cexs: list[CexEnv]) -> None:
    """Concrete agreement on every accumulated counterexample."""
    from .ir import var_widths
    widths = var_widths(query.spec_prog)
    horizon = query.t + query.c + 1
    for env in cexs:
        streams = {}
        for name, w in widths.items():
            vals = [env.get((name, tt), BitVec.of(0, w))
                    for tt in range(horizon)]
            streams[name] = Stream(tuple(vals))
        a = simulate(query.spec_prog, streams, horizon)
        b = simulate(program, streams, horizon)
        for tt in range(query.t, horizon):
            if a[tt] != b[tt]:
                raise SolverError(
                    "soundness failure: solver accepted a candidate the "
                    f"interpreter refutes at cycle {tt} (spec {a[tt]}, "
                    f"got {b[tt]})")


def cegis(query: EquivalenceQuery,
          solvers: Optional[list[SolverConfig]] = None,
          timeout: float = 120.0,
          initial_samples: int = 4,
          seed: int = 2024) -> SynthesisResult:
    start = time.monotonic()
    deadline = start + timeout

    def remaining() -> float:
        return deadline - time.monotonic()

    def solve(asserts: list[Term], declare: list[Term],
              get: list[Term]) -> PortfolioResult:
        text, _ = emit_smtlib(asserts, declare, get)
        return portfolio_solve(text, solvers, timeout=remaining())

    tb = query.builder
    one = tb.const_of(1, 1)
    cexs: list[CexEnv] = _random_envs(query, initial_samples, seed)
    iterations = 0
    last_winner = "none"

    try:
        while True:
            iterations += 1
            if remaining() <= 0:
                return Timeout(time.monotonic() - start, iterations)

            # SYNTH over the accumulated environments
            synth_asserts = list(query.side_constraints)
            infeasible = False
            for env in cexs:
                for eq in query.equal_terms:
                    g = _subst_inputs(query, eq, env)
                    if g.kind == "const":
                        if g.value.value == 0:
                            infeasible = True
                            break
                        continue
                    synth_asserts.append(g)
                if infeasible:
                    break
            if infeasible:
                return Unsat(time.monotonic() - start, iterations)
            if any(a.kind == "const" and a.value.value == 0
                   for a in synth_asserts):
                return Unsat(time.monotonic() - start, iterations)
            synth_asserts = [a for a in synth_asserts if a.kind != "const"]

            if synth_asserts or query.hole_symbols:
                r = solve(synth_asserts, query.hole_symbols,
                          query.hole_symbols)
                if r.status == "unsat":
                    return Unsat(time.monotonic() - start, iterations)
                last_winner = r.winner
                model = r.model
            else:
                model = {}

            by_label, node_assignment = _decode_assignment(query, model)

            # VERIFY the candidate over all inputs
            hole_map = {s: tb.const(by_label[s.label])
                        for s in query.hole_symbols}
            subbed = [tb.substitute(eq, hole_map)
                      for eq in query.equal_terms]
            for sc in query.side_constraints:
                g = tb.substitute(sc, hole_map)
                if not (g.kind == "const" and g.value.value == 1):
                    raise SolverError(
                        "SYNTH model violates a side constraint")
            conj = one
            for g in subbed:
                conj = tb.app(Operator("and"), [conj, g])
            refute = tb.app(Operator("not"), [conj])
            if refute.kind == "const":
                if refute.value.value == 1:
                    # differs on every input: only possible without inputs
                    return Unsat(time.monotonic() - start, iterations)
                verified = True
            else:
                r = solve([refute], query.input_symbols,
                          query.input_symbols)
                if r.status == "unsat":
                    verified = True
                else:
                    last_winner = r.winner
                    verified = False
                    env: CexEnv = {}
                    for s in query.input_symbols:
                        v = r.model.get(symbol_name(s),
                                        BitVec.of(0, s.width))
                        env[(s.name, s.time)] = BitVec.of(v.value, s.width)
                    if env in cexs:
                        raise SolverError(
                            "CEGIS made no progress: VERIFY returned an "
                            "environment already in the set")
                    cexs.append(env)

            if verified:
                program = substitute_holes(query.sketch, node_assignment)
                _revalidate(query, program, cexs)
                return Success(
                    program=program,
                    model=by_label,
                    assignment=node_assignment,
                    solver=last_winner,
                    wall_time=time.monotonic() - start,
                    iterations=iterations,
                    counterexamples=cexs,
                )
    except PortfolioTimeout:
        return Timeout(time.monotonic() - start, iterations)


def synthesize(spec: Prog, sketch: Sketch, t: int = 0, c: int = 2,
               solvers: Optional[list[SolverConfig]] = None,
               timeout: float = 120.0,
               initial_samples: int = 4,
               seed: int = 2024) -> SynthesisResult:
    """End-to-end: build the equivalence query for cycles t..t+c and run
    the loop.  c = 0 checks a single cycle; pipelined mappings use t equal
    to the pipeline depth so the fill cycles are excluded."""
    q = build_query(spec, sketch, t, c)
    return cegis(q, solvers=solvers, timeout=timeout,
                 initial_samples=initial_samples, seed=seed)
