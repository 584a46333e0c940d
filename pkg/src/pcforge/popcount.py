"""Constructive popcount circuits: exact adder trees and LSB truncation.

The exact builder is the seed for evolutionary search and the reference
every approximation is measured against, so it favors a clean recursive
structure over last-gate cleverness.
"""

from __future__ import annotations

from .circuit import GateFn, Netlist, NetlistBuilder, cone_prune
from .exceptions import ValidationError


def _half_add(b: NetlistBuilder, x: int, y: int) -> tuple[int, int]:
    return b.xor(x, y), b.and_(x, y)


def _full_add(b: NetlistBuilder, x: int, y: int, c: int) -> tuple[int, int]:
    t = b.xor(x, y)
    s = b.xor(t, c)
    carry = b.or_(b.and_(x, y), b.and_(t, c))
    return s, carry


def _ripple_add(
    b: NetlistBuilder,
    xs: list[int],
    ys: list[int],
    cin: int | None,
    max_sum: int,
) -> list[int]:
    """Add two little-endian counts plus an optional carry-in bit.

    ``max_sum`` bounds the true sum, so provably-zero high bits are
    trimmed instead of emitted.
    """
    out: list[int] = []
    carry = cin
    for j in range(max(len(xs), len(ys))):
        terms = [t for t in (
            xs[j] if j < len(xs) else None,
            ys[j] if j < len(ys) else None,
            carry,
        ) if t is not None]
        if len(terms) == 3:
            s, carry = _full_add(b, *terms)
        elif len(terms) == 2:
            s, carry = _half_add(b, *terms)
        else:
            s, carry = terms[0], None
        out.append(s)
    if carry is not None:
        out.append(carry)
    return out[: max(1, max_sum.bit_length())]


def _count_bits(b: NetlistBuilder, xs: list[int]) -> list[int]:
    """Little-endian popcount of the given signals."""
    k = len(xs)
    if k == 1:
        return [xs[0]]
    if k == 2:
        return list(_half_add(b, xs[0], xs[1]))
    if k == 3:
        return list(_full_add(b, xs[0], xs[1], xs[2]))
    # One bit feeds the adder's carry-in; the rest split evenly.
    left = (k - 1) // 2
    lo = _count_bits(b, xs[:left])
    hi = _count_bits(b, xs[left : k - 1])
    return _ripple_add(b, lo, hi, xs[k - 1], max_sum=k)


def build_exact_pc(n: int) -> Netlist:
    """Exact popcount over ``n`` inputs; output width is ``n.bit_length()``."""
    if n < 1:
        raise ValidationError("popcount needs at least one input")
    b = NetlistBuilder(n, name=f"pc{n}")
    outs = _count_bits(b, list(range(n)))
    net = cone_prune(b.build(outs))
    assert net.output_count == n.bit_length()
    return net


def build_truncated_pc(n: int, cut_bits: int) -> Netlist:
    """Exact popcount with the ``cut_bits`` lowest outputs forced to zero.

    The fan-in cones feeding only the cut outputs are pruned away, which
    is where the area saving comes from.  Output width is unchanged.
    """
    exact = build_exact_pc(n)
    width = exact.output_count
    if not (0 <= cut_bits < width):
        raise ValidationError(f"cut_bits must lie in [0, {width}) for n={n}")
    if cut_bits == 0:
        return Netlist(
            input_count=exact.input_count,
            gates=exact.gates,
            outputs=exact.outputs,
            name=f"pc{n}_t0",
        )
    b = NetlistBuilder(n, name=f"pc{n}_t{cut_bits}")
    outs = b.splice(exact, list(range(n)))
    zero = b.const(0)
    return cone_prune(b.build([zero] * cut_bits + outs[cut_bits:]))
