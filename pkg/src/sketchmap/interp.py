"""Cycle-accurate concrete interpreter for hole-free programs.

Semantics, per node at cycle t:

  * BV b           -> b
  * Var x          -> env[x][t]
  * Op o args      -> eval_op(o, args at t)
  * Reg data init  -> init at t = 0, value of data at t-1 otherwise
  * Prim binds body-> body root at t under a fresh environment where each
                      body variable x reads the bound node binds[x]

Two implementations with identical observable behavior:

  * interp / simulate: schedules every node (including nodes inside Prim
    bodies) by the well-formedness witness and evaluates cycle by cycle on
    plain ints.  Linear in nodes x cycles, no recursion, keeps only two
    cycles of values alive.
  * interp_naive: the recursive definition above, memo-free, for small
    programs; exists so tests can check that memoization is unobservable.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Mapping, Sequence, Union

from .ir import (
    BV, BitVec, Hole, Id, Op, Operator, Prim, Prog, Reg, SketchmapError, Var,
    check_well_formed, _collect_programs, node_widths,
)


class HorizonExceeded(SketchmapError):
    """A stream was read past its last provided cycle."""


@dataclass(frozen=True)
class Stream:
    """A finite input trace: one BitVec per cycle, uniform width."""

    values: tuple[BitVec, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError("stream must cover at least one cycle")
        w = self.values[0].width
        if any(v.width != w for v in self.values):
            raise ValueError("stream values must share one width")

    @property
    def width(self) -> int:
        return self.values[0].width

    def __len__(self) -> int:
        return len(self.values)

    def at(self, t: int) -> BitVec:
        if t >= len(self.values):
            raise HorizonExceeded(
                f"cycle {t} requested but the stream ends at "
                f"{len(self.values) - 1}")
        return self.values[t]


Env = Mapping[str, Stream]


def stream_of_ints(values: Sequence[int], width: int) -> Stream:
    return Stream(tuple(BitVec.of(v, width) for v in values))


def env_of_ints(spec: Mapping[str, tuple[Sequence[int], int]]) -> dict[str, Stream]:
    """{name: (ints, width)} -> environment, for terse test setup."""
    return {k: stream_of_ints(vs, w) for k, (vs, w) in spec.items()}


# -- operator evaluation ----------------------------------------------------


def _signed(v: int, w: int) -> int:
    return v - (1 << w) if (v >> (w - 1)) & 1 else v


def eval_op(op: Operator, args: list[BitVec]) -> BitVec:
    """Evaluate one operator application on constants.

    Shifts read the full unsigned shift amount; amounts >= width give 0
    (ashr: all sign bits), matching SMT-LIB.  mul truncates.  Comparisons
    and reductions return width 1.
    """
    from .ir import op_result_width
    rw = op_result_width(op, [a.width for a in args])
    return BitVec(rw, eval_op_int(op, [a.value for a in args],
                                  [a.width for a in args]))


def eval_op_int(op: Operator, vals: list[int], widths: list[int]) -> int:
    """Int-level core of eval_op; callers guarantee the width rule holds."""
    name = op.name
    w = widths[0]
    mask = (1 << w) - 1
    if name == "add":
        return (vals[0] + vals[1]) & mask
    if name == "sub":
        return (vals[0] - vals[1]) & mask
    if name == "mul":
        return (vals[0] * vals[1]) & mask
    if name == "and":
        return vals[0] & vals[1]
    if name == "or":
        return vals[0] | vals[1]
    if name == "xor":
        return vals[0] ^ vals[1]
    if name == "not":
        return vals[0] ^ mask
    if name == "neg":
        return (-vals[0]) & mask
    if name == "shl":
        s = vals[1]
        return (vals[0] << s) & mask if s < w else 0
    if name == "lshr":
        s = vals[1]
        return vals[0] >> s if s < w else 0
    if name == "ashr":
        s = vals[1]
        sv = _signed(vals[0], w)
        return (sv >> s) & mask if s < w else (mask if sv < 0 else 0)
    if name == "eq":
        return 1 if vals[0] == vals[1] else 0
    if name == "ult":
        return 1 if vals[0] < vals[1] else 0
    if name == "ule":
        return 1 if vals[0] <= vals[1] else 0
    if name == "slt":
        return 1 if _signed(vals[0], w) < _signed(vals[1], widths[1]) else 0
    if name == "sle":
        return 1 if _signed(vals[0], w) <= _signed(vals[1], widths[1]) else 0
    if name == "mux":
        return vals[1] if vals[0] == 1 else vals[2]
    if name == "reduce_or":
        return 1 if vals[0] != 0 else 0
    if name == "reduce_and":
        return 1 if vals[0] == mask else 0
    if name == "concat":
        return (vals[0] << widths[1]) | vals[1]
    if name == "extract":
        hi, lo = op.params
        return (vals[0] >> lo) & ((1 << (hi - lo + 1)) - 1)
    if name == "zero_extend":
        return vals[0]
    if name == "sign_extend":
        (k,) = op.params
        if k and (vals[0] >> (w - 1)) & 1:
            return vals[0] | (((1 << k) - 1) << w)
        return vals[0]
    raise AssertionError(f"unhandled operator {name}")


# -- compiled evaluation ----------------------------------------------------


def _require_hole_free(p: Prog) -> None:
    progs: list = []
    _collect_programs(p, progs, set())
    for prog, _ in progs:
        for i, n in prog.nodes.items():
            if isinstance(n, Hole):
                raise SketchmapError(
                    f"cannot interpret a program with holes (node {i}); "
                    f"substitute them first")


class _Compiled:
    """One program compiled to a per-cycle evaluation plan.

    plan: list of (id, closure) in witness order; each closure computes the
    node's int value for the current cycle from cur (this cycle's values),
    prev (last cycle's) and env.  Registers are split out: at cycle 0 they
    load init, afterwards they read prev[data].
    """

    def __init__(self, p: Prog, env: Env):
        self.witness = check_well_formed(p)
        self.root = p.root
        progs: list = []
        _collect_programs(p, progs, set())

        widths = node_widths(p)
        self.widths = widths
        fv_widths: dict[str, int] = {}
        for prog, enclosing in progs:
            if enclosing is None and prog is p:
                for n in prog.nodes.values():
                    if isinstance(n, Var):
                        fv_widths[n.name] = n.width
        for name, w in fv_widths.items():
            if name not in env:
                raise SketchmapError(f"environment is missing input {name!r}")
            if env[name].width != w:
                raise SketchmapError(
                    f"input {name!r} has width {env[name].width}, "
                    f"program expects {w}")
        self.env = env
        self.horizon = min(len(s) for s in env.values()) if env else None

        # Map every Var to its source: top-level vars read env, body vars
        # read the enclosing prim's bound id.
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

        order = sorted(
            (i for prog, _ in progs for i in prog.nodes),
            key=lambda j: (self.witness[j], j))
        node_of: dict[Id, object] = {}
        for prog, _ in progs:
            node_of.update(prog.nodes)

        self.regs: list[tuple[Id, Id, int]] = []  # (id, data id, init value)
        plan: list[tuple[Id, Callable]] = []
        for i in order:
            n = node_of[i]
            if isinstance(n, BV):
                c = n.b.value
                plan.append((i, (lambda cur, prev, t, c=c: c)))
            elif isinstance(n, Var):
                kind, src = var_src[i]
                if kind == "env":
                    stream = env[src]
                    plan.append((i, (lambda cur, prev, t, s=stream: s.at(t).value)))
                else:
                    plan.append((i, (lambda cur, prev, t, a=src: cur[a])))
            elif isinstance(n, Reg):
                self.regs.append((i, n.data, n.init.value))
            elif isinstance(n, Prim):
                r = n.body.root
                plan.append((i, (lambda cur, prev, t, a=r: cur[a])))
            elif isinstance(n, Op):
                opr, args = n.op, n.args
                aw = [widths[a] for a in args]
                plan.append((i, _op_closure(opr, args, aw)))
            else:
                raise AssertionError(n)
        self.plan = plan

    def run(self, upto: int) -> "_Run":
        return _Run(self, upto)


def _op_closure(op: Operator, args: tuple[Id, ...], aw: list[int]) -> Callable:
    """Specialize the hot operators; fall back to eval_op_int."""
    name = op.name
    w = aw[0]
    mask = (1 << w) - 1
    if name == "add" and len(args) == 2:
        a, b = args
        return lambda cur, prev, t: (cur[a] + cur[b]) & mask
    if name == "sub" and len(args) == 2:
        a, b = args
        return lambda cur, prev, t: (cur[a] - cur[b]) & mask
    if name == "mul" and len(args) == 2:
        a, b = args
        return lambda cur, prev, t: (cur[a] * cur[b]) & mask
    if name == "and":
        a, b = args
        return lambda cur, prev, t: cur[a] & cur[b]
    if name == "or":
        a, b = args
        return lambda cur, prev, t: cur[a] | cur[b]
    if name == "xor":
        a, b = args
        return lambda cur, prev, t: cur[a] ^ cur[b]
    if name == "mux":
        s, x, y = args
        return lambda cur, prev, t: cur[x] if cur[s] == 1 else cur[y]
    if name == "concat":
        a, b = args
        wb = aw[1]
        return lambda cur, prev, t: (cur[a] << wb) | cur[b]
    if name == "extract":
        hi, lo = op.params
        m = (1 << (hi - lo + 1)) - 1
        a = args[0]
        return lambda cur, prev, t: (cur[a] >> lo) & m
    if name == "lshr":
        a, b = args
        return lambda cur, prev, t: cur[a] >> cur[b] if cur[b] < w else 0
    if name == "zero_extend":
        a = args[0]
        return lambda cur, prev, t: cur[a]
    ids = list(args)
    return lambda cur, prev, t: eval_op_int(op, [cur[a] for a in ids], aw)


class _Run:
    """Streams cycles 0..upto, keeping a two-cycle window of values."""

    def __init__(self, c: _Compiled, upto: int):
        if c.horizon is not None and upto >= c.horizon:
            raise HorizonExceeded(
                f"cycle {upto} requested but inputs end at {c.horizon - 1}")
        self.c = c
        self.t = -1
        self.cur: dict[Id, int] = {}
        self.prev: dict[Id, int] = {}
        self.upto = upto

    def step(self) -> dict[Id, int]:
        self.t += 1
        self.prev, self.cur = self.cur, {}
        cur, prev, t = self.cur, self.prev, self.t
        if t == 0:
            for i, _, init in self.c.regs:
                cur[i] = init
        else:
            for i, data, _ in self.c.regs:
                cur[i] = prev[data]
        for i, f in self.c.plan:
            cur[i] = f(cur, prev, t)
        return cur


def simulate(p: Prog, env: Env, horizon: int) -> list[BitVec]:
    """Root values for cycles 0..horizon-1."""
    _require_hole_free(p)
    if horizon < 1:
        return []
    c = _Compiled(p, env)
    run = c.run(horizon - 1)
    w = c.widths[p.root]
    out = []
    for _ in range(horizon):
        vals = run.step()
        out.append(BitVec(w, vals[p.root]))
    return out


def interp(p: Prog, env: Env, t: int, n: Id) -> BitVec:
    """Value of node n at cycle t (n must be a top-level node of p)."""
    _require_hole_free(p)
    if n not in p.nodes:
        raise SketchmapError(f"id {n} is not a node of the program")
    c = _Compiled(p, env)
    run = c.run(t)
    for _ in range(t + 1):
        vals = run.step()
    return BitVec(c.widths[n], vals[n])


# -- reference implementation ----------------------------------------------


def interp_naive(p: Prog, env: Union[Env, Callable[[str, int], BitVec]],
                 t: int, n: Id) -> BitVec:
    """Direct recursive semantics, no memo.  Exponential on deep programs;
    only for cross-checking the compiled path on small inputs."""
    _require_hole_free(p) if isinstance(env, Mapping) else None
    if isinstance(env, Mapping):
        check_well_formed(p)
        lookup = lambda x, tt: env[x].at(tt)
    else:
        lookup = env
    return _naive(p, lookup, t, n)


def _naive(p: Prog, lookup: Callable[[str, int], BitVec], t: int,
           n: Id) -> BitVec:
    node = p.nodes[n]
    if isinstance(node, BV):
        return node.b
    if isinstance(node, Var):
        return lookup(node.name, t)
    if isinstance(node, Op):
        return eval_op(node.op, [_naive(p, lookup, t, a) for a in node.args])
    if isinstance(node, Reg):
        if t == 0:
            return node.init
        return _naive(p, lookup, t - 1, node.data)
    if isinstance(node, Prim):
        bm = node.bind_map()
        inner = lambda x, tt: _naive(p, lookup, tt, bm[x])
        return _naive(node.body, inner, t, node.body.root)
    raise SketchmapError(f"cannot interpret node {n}: {node}")


def trace_lines(values: Sequence[BitVec]) -> list[str]:
    """Trace dump format: one line per cycle, ``t=<n> out=<hex>``."""
    return [f"t={i} out={v.value:x}" for i, v in enumerate(values)]
