"""Independent reference implementations used to pin expected values.

Everything here is written for clarity over speed and deliberately avoids
the package's own packed-word kernels, so a bug cannot hide on both sides
of a comparison.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import product

from pcforge.circuit import ARITY, GateFn, Netlist


def eval_single(netlist: Netlist, bits: list[int]) -> list[int]:
    """Evaluate one input assignment gate by gate, no packing anywhere."""
    values = list(bits)
    for gate in netlist.gates:
        if gate.fn == GateFn.CONST0:
            v = 0
        elif gate.fn == GateFn.CONST1:
            v = 1
        elif gate.fn == GateFn.BUF:
            v = values[gate.a]
        elif gate.fn == GateFn.NOT:
            v = 1 - values[gate.a]
        else:
            a, b = values[gate.a], values[gate.b]
            if gate.fn == GateFn.AND:
                v = a & b
            elif gate.fn == GateFn.OR:
                v = a | b
            elif gate.fn == GateFn.XOR:
                v = a ^ b
            elif gate.fn == GateFn.NAND:
                v = 1 - (a & b)
            elif gate.fn == GateFn.NOR:
                v = 1 - (a | b)
            elif gate.fn == GateFn.XNOR:
                v = 1 - (a ^ b)
            else:
                raise AssertionError(gate.fn)
        values.append(v)
    return [values[r] for r in netlist.outputs]


def output_value(netlist: Netlist, bits: list[int]) -> int:
    """Outputs interpreted as a little-endian unsigned value."""
    out = eval_single(netlist, bits)
    return sum(b << j for j, b in enumerate(out))


def all_assignments(n: int):
    """Yield (index, bits) for every assignment, bit j = bit j of index."""
    for i in range(1 << n):
        yield i, [(i >> j) & 1 for j in range(n)]


def exhaustive_arith_error(approx: Netlist, exact: Netlist) -> tuple[Fraction, int]:
    """(mean, worst) absolute output-value error over all assignments."""
    assert approx.input_count == exact.input_count
    n = approx.input_count
    total = 0
    worst = 0
    for _, bits in all_assignments(n):
        d = abs(output_value(approx, bits) - output_value(exact, bits))
        total += d
        worst = max(worst, d)
    return Fraction(total, 1 << n), worst


def pareto_front(points: list[tuple[float, float]]) -> list[int]:
    """Indices of points not strictly dominated under (min, min).

    Quadratic and obvious: a point is dropped iff some other point is at
    least as good in both coordinates and better in one.
    """
    keep = []
    for i, (ai, bi) in enumerate(points):
        dominated = False
        for j, (aj, bj) in enumerate(points):
            if j != i and aj <= ai and bj <= bi and (aj < ai or bj < bi):
                dominated = True
                break
        if not dominated:
            keep.append(i)
    return keep


def signed_deviation(x: int, z: int, exact_rel: bool, approx_rel: bool) -> int:
    """Zero when the relations agree, else the operand gap x - z."""
    return 0 if exact_rel == approx_rel else x - z


def ternary_infer(hidden_w, output_w, bits) -> int:
    """Plain-Python forward pass for a two-layer ternary model."""
    hidden = []
    for row in hidden_w:
        pos = sum(b for w, b in zip(row, bits) if w == 1)
        neg = sum(b for w, b in zip(row, bits) if w == -1)
        hidden.append(1 if pos >= neg else 0)
    best_c, best_s = 0, None
    for c, row in enumerate(output_w):
        # Two-valued match count: +1 weights pass, -1 weights invert.
        s = sum((h if w == 1 else 1 - h) for w, h in zip(row, hidden) if w != 0)
        # Offset for dropped zero-weight terms, kept exact by doubling.
        s2 = 2 * s + sum(1 for w in row if w == 0)
        if best_s is None or s2 > best_s:
            best_c, best_s = c, s2
    return best_c
