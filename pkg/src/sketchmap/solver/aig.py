"""And-inverter graph with structural hashing, plus bit-vector blasting.

Literal encoding: 2*node for the plain output, 2*node+1 inverted.  Node 0
is reserved for the constant, so literal 0 is FALSE and literal 1 is TRUE.
and_() folds the usual identities (x&x, x&~x, constants) and canonicalizes
argument order, so structurally equal subformulas share one node; that is
what makes equivalence queries between structurally aligned circuits cheap.

Bit vectors are Python lists of literals, LSB first.  The blasting
strategies are chosen for sharing, not size: ripple adders and ascending
shift-add multipliers mean the low k bits of a wide operation are the same
AIG nodes as the bits of the k-wide operation over the same inputs.
"""

from __future__ import annotations

from .sat import SatSolver, neg

FALSE = 0
TRUE = 1


class AIG:
    def __init__(self):
        self.nodes: list = [None]  # node 0: constant
        self.strash: dict = {}

    def var(self) -> int:
        self.nodes.append(None)
        return 2 * (len(self.nodes) - 1)

    def and_(self, a: int, b: int) -> int:
        if a > b:
            a, b = b, a
        if a == FALSE:
            return FALSE
        if a == TRUE:
            return b
        if a == b:
            return a
        if a ^ 1 == b:
            return FALSE
        key = (a, b)
        hit = self.strash.get(key)
        if hit is not None:
            return hit
        self.nodes.append(key)
        lit = 2 * (len(self.nodes) - 1)
        self.strash[key] = lit
        return lit

    def or_(self, a: int, b: int) -> int:
        return self.and_(a ^ 1, b ^ 1) ^ 1

    def xor_(self, a: int, b: int) -> int:
        if a == FALSE:
            return b
        if a == TRUE:
            return b ^ 1
        if b == FALSE:
            return a
        if b == TRUE:
            return a ^ 1
        if a == b:
            return FALSE
        if a ^ 1 == b:
            return TRUE
        return self.and_(self.and_(a, b ^ 1) ^ 1, self.and_(a ^ 1, b) ^ 1) ^ 1

    def mux_(self, s: int, a: int, b: int) -> int:
        """s ? a : b."""
        if s == TRUE:
            return a
        if s == FALSE:
            return b
        if a == b:
            return a
        return self.or_(self.and_(s, a), self.and_(s ^ 1, b))

    def and_many(self, lits: list[int]) -> int:
        out = TRUE
        for lit in lits:
            out = self.and_(out, lit)
        return out

    def or_many(self, lits: list[int]) -> int:
        out = FALSE
        for lit in lits:
            out = self.or_(out, lit)
        return out

    # -- bit-vector layer (lists of literals, LSB first) --------------------

    def const_bits(self, value: int, width: int) -> list[int]:
        return [TRUE if (value >> i) & 1 else FALSE for i in range(width)]

    def var_bits(self, width: int) -> list[int]:
        return [self.var() for _ in range(width)]

    def add_bits(self, xs: list[int], ys: list[int],
                 cin: int = FALSE) -> tuple[list[int], int]:
        """Ripple-carry; returns (sum bits, carry out)."""
        assert len(xs) == len(ys)
        out = []
        c = cin
        for a, b in zip(xs, ys):
            axb = self.xor_(a, b)
            out.append(self.xor_(axb, c))
            c = self.or_(self.and_(a, b), self.and_(c, axb))
        return out, c

    def sub_bits(self, xs: list[int], ys: list[int]) -> list[int]:
        return self.add_bits(xs, [y ^ 1 for y in ys], TRUE)[0]

    def neg_bits(self, xs: list[int]) -> list[int]:
        zero = [FALSE] * len(xs)
        return self.sub_bits(zero, xs)

    def mul_bits(self, xs: list[int], ys: list[int]) -> list[int]:
        """Shift-add with ascending rows, truncated to len(xs)."""
        w = len(xs)
        acc = [self.and_(x, ys[0]) for x in xs]
        for i in range(1, w):
            row = [self.and_(xs[j], ys[i]) for j in range(w - i)]
            hi, _ = self.add_bits(acc[i:], row)
            acc = acc[:i] + hi
        return acc

    def eq_bits(self, xs: list[int], ys: list[int]) -> int:
        return self.and_many([self.xor_(a, b) ^ 1 for a, b in zip(xs, ys)])

    def ult_bits(self, xs: list[int], ys: list[int]) -> int:
        # a < b  iff  no carry out of a + ~b + 1
        c = TRUE
        for a, b in zip(xs, ys):
            nb = b ^ 1
            axb = self.xor_(a, nb)
            c = self.or_(self.and_(a, nb), self.and_(c, axb))
        return c ^ 1

    def slt_bits(self, xs: list[int], ys: list[int]) -> int:
        fx = xs[:-1] + [xs[-1] ^ 1]
        fy = ys[:-1] + [ys[-1] ^ 1]
        return self.ult_bits(fx, fy)

    def mux_bits(self, s: int, xs: list[int], ys: list[int]) -> list[int]:
        return [self.mux_(s, a, b) for a, b in zip(xs, ys)]

    def shift_bits(self, xs: list[int], ss: list[int], kind: str) -> list[int]:
        """Barrel shifter; kind in shl / lshr / ashr.  Amounts >= width
        flush to zero (ashr: to the sign bit)."""
        w = len(xs)
        fill = xs[-1] if kind == "ashr" else FALSE
        # constant shift amount folds to wiring
        if all(s in (FALSE, TRUE) for s in ss):
            k = sum(1 << i for i, s in enumerate(ss) if s == TRUE)
            return self._shift_const(xs, k, kind, fill)
        out = list(xs)
        stages = 0
        while (1 << stages) < w:
            stages += 1
        for i in range(min(stages, len(ss))):
            shifted = self._shift_const(out, 1 << i, kind, fill)
            out = self.mux_bits(ss[i], shifted, out)
        # any set bit at position >= stages means shift >= width
        over = self.or_many(ss[stages:])
        return self.mux_bits(over, [fill] * w, out)

    def _shift_const(self, xs: list[int], k: int, kind: str,
                     fill: int) -> list[int]:
        w = len(xs)
        if k >= w:
            return [fill] * w
        if kind == "shl":
            return [FALSE] * k + xs[: w - k]
        return xs[k:] + [fill] * k

    # -- CNF + evaluation ----------------------------------------------------

    def to_sat(self, root: int) -> tuple[SatSolver, dict[int, int]]:
        """Tseitin-encode the cone of root; asserts root.  Returns the
        solver and a map AIG node -> SAT var for the cone."""
        solver = SatSolver()
        node_var: dict[int, int] = {}

        def sat_lit(lit: int) -> int:
            node = lit >> 1
            v = node_var[node]
            return 2 * v + (lit & 1)

        stack = [root >> 1]
        seen = set()
        order = []
        while stack:
            n = stack.pop()
            if n in seen or n == 0:
                continue
            seen.add(n)
            order.append(n)
            entry = self.nodes[n]
            if entry is not None:
                stack.append(entry[0] >> 1)
                stack.append(entry[1] >> 1)
        for n in sorted(seen):
            node_var[n] = solver.new_var()
        for n in order:
            entry = self.nodes[n]
            if entry is None:
                continue
            a, b = entry
            ln, la, lb = 2 * node_var[n], sat_lit(a), sat_lit(b)
            solver.add_clause([neg(ln), la])
            solver.add_clause([neg(ln), lb])
            solver.add_clause([ln, neg(la), neg(lb)])
        solver.add_clause([sat_lit(root)])
        return solver, node_var

    def eval_root(self, root: int, values: dict[int, bool]) -> bool:
        """Evaluate under var-node assignments (missing vars read False)."""
        memo: dict[int, bool] = {0: False}
        # iterative to survive deep graphs
        stack = [root >> 1]
        while stack:
            n = stack[-1]
            if n in memo:
                stack.pop()
                continue
            entry = self.nodes[n]
            if entry is None:
                memo[n] = values.get(n, False)
                stack.pop()
                continue
            a, b = entry[0] >> 1, entry[1] >> 1
            if a in memo and b in memo:
                va = memo[a] ^ bool(entry[0] & 1)
                vb = memo[b] ^ bool(entry[1] & 1)
                memo[n] = va and vb
                stack.pop()
            else:
                if a not in memo:
                    stack.append(a)
                if b not in memo:
                    stack.append(b)
        return memo[root >> 1] ^ bool(root & 1)
