"""Reduced ordered binary decision diagrams with model counting.

A deliberately small engine: hash-consed nodes, memoized binary apply,
and a satisfying-assignment counter.  That is everything the error
evaluators need, and keeping it local makes the node budget and the
variable order explicit instead of buried in a dependency.

Node ids are ints; 0 and 1 are the constant functions.  Variables are
levels ``0 .. num_vars-1`` from the root down.
"""

from __future__ import annotations

from typing import Sequence

from .circuit import GateFn, Netlist
from .exceptions import ResourceError, ValidationError

_OP_AND = 0
_OP_OR = 1
_OP_XOR = 2

DEFAULT_NODE_LIMIT = 1_000_000


class BddManager:
    """Shared node store for functions over a fixed variable count."""

    __slots__ = ("num_vars", "node_limit", "_level", "_lo", "_hi", "_unique", "_cache")

    ZERO = 0
    ONE = 1

    def __init__(self, num_vars: int, node_limit: int = DEFAULT_NODE_LIMIT):
        if num_vars < 0:
            raise ValidationError("num_vars must be nonnegative")
        self.num_vars = num_vars
        self.node_limit = node_limit
        # Terminals sit below the deepest variable level.
        self._level: list[int] = [num_vars, num_vars]
        self._lo: list[int] = [0, 1]
        self._hi: list[int] = [0, 1]
        self._unique: dict[tuple[int, int, int], int] = {}
        self._cache: dict[tuple[int, int, int], int] = {}

    def __len__(self) -> int:
        return len(self._level)

    def _node(self, level: int, lo: int, hi: int) -> int:
        if lo == hi:
            return lo
        key = (level, lo, hi)
        found = self._unique.get(key)
        if found is None:
            if len(self._level) >= self.node_limit:
                raise ResourceError(
                    f"decision-diagram node budget exceeded ({len(self._level)} nodes)"
                )
            found = len(self._level)
            self._level.append(level)
            self._lo.append(lo)
            self._hi.append(hi)
            self._unique[key] = found
        return found

    def var(self, index: int) -> int:
        if not (0 <= index < self.num_vars):
            raise ValidationError(f"variable {index} outside 0..{self.num_vars - 1}")
        return self._node(index, 0, 1)

    def apply(self, op: int, u: int, v: int) -> int:
        if op == _OP_AND:
            if u == 0 or v == 0:
                return 0
            if u == 1:
                return v
            if v == 1:
                return u
            if u == v:
                return u
        elif op == _OP_OR:
            if u == 1 or v == 1:
                return 1
            if u == 0:
                return v
            if v == 0:
                return u
            if u == v:
                return u
        else:
            if u == v:
                return 0
            if u == 0:
                return v
            if v == 0:
                return u
        if v < u:
            u, v = v, u
        key = (op, u, v)
        found = self._cache.get(key)
        if found is not None:
            return found
        lu, lv = self._level[u], self._level[v]
        top = min(lu, lv)
        u_lo, u_hi = (self._lo[u], self._hi[u]) if lu == top else (u, u)
        v_lo, v_hi = (self._lo[v], self._hi[v]) if lv == top else (v, v)
        result = self._node(
            top, self.apply(op, u_lo, v_lo), self.apply(op, u_hi, v_hi)
        )
        self._cache[key] = result
        return result

    def and_(self, u: int, v: int) -> int:
        return self.apply(_OP_AND, u, v)

    def or_(self, u: int, v: int) -> int:
        return self.apply(_OP_OR, u, v)

    def xor(self, u: int, v: int) -> int:
        return self.apply(_OP_XOR, u, v)

    def not_(self, u: int) -> int:
        return self.apply(_OP_XOR, u, 1)

    def satcount(self, u: int) -> int:
        """Number of assignments of all ``num_vars`` variables satisfying u."""
        memo: dict[int, int] = {0: 0, 1: 1}

        def count(x: int) -> int:
            found = memo.get(x)
            if found is not None:
                return found
            lx = self._level[x]
            lo, hi = self._lo[x], self._hi[x]
            total = count(lo) << (self._level[lo] - lx - 1)
            total += count(hi) << (self._level[hi] - lx - 1)
            memo[x] = total
            return total

        return count(u) << self._level[u]

    def evaluate(self, u: int, assignment: Sequence[int]) -> int:
        """Follow one assignment down the diagram (for spot checks)."""
        while u > 1:
            u = self._hi[u] if assignment[self._level[u]] else self._lo[u]
        return u


def netlist_to_bdds(
    mgr: BddManager, netlist: Netlist, var_of_input: Sequence[int] | None = None
) -> list[int]:
    """Build one diagram per netlist output.

    ``var_of_input[i]`` places primary input ``i`` at that variable level;
    the default is identity order.
    """
    order = tuple(var_of_input) if var_of_input is not None else tuple(range(netlist.input_count))
    if len(order) != netlist.input_count or len(set(order)) != len(order):
        raise ValidationError("variable order must cover every input exactly once")
    values: list[int] = [mgr.var(v) for v in order]
    for gate in netlist.gates:
        fn = gate.fn
        if fn == GateFn.CONST0:
            r = mgr.ZERO
        elif fn == GateFn.CONST1:
            r = mgr.ONE
        elif fn == GateFn.BUF:
            r = values[gate.a]
        elif fn == GateFn.NOT:
            r = mgr.not_(values[gate.a])
        else:
            a, b = values[gate.a], values[gate.b]
            if fn == GateFn.AND:
                r = mgr.and_(a, b)
            elif fn == GateFn.OR:
                r = mgr.or_(a, b)
            elif fn == GateFn.XOR:
                r = mgr.xor(a, b)
            elif fn == GateFn.NAND:
                r = mgr.not_(mgr.and_(a, b))
            elif fn == GateFn.NOR:
                r = mgr.not_(mgr.or_(a, b))
            else:
                r = mgr.not_(mgr.xor(a, b))
        values.append(r)
    return [values[r] for r in netlist.outputs]
