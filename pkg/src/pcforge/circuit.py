"""Gate-level netlist core: gate set, area model, simulation, JSON I/O.

Signals are addressed by integers: primary inputs occupy addresses
``0 .. input_count-1`` and gate ``i`` drives address ``input_count + i``.
Gate lists are topologically ordered by construction -- every operand
address is strictly below the gate's own address -- so simulation is a
single forward pass.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .bits import BitMatrix
from .exceptions import ConfigError, ValidationError


class GateFn(enum.IntEnum):
    """The fixed gate alphabet.  Values double as genotype opcodes."""

    CONST0 = 0
    CONST1 = 1
    BUF = 2
    NOT = 3
    AND = 4
    OR = 5
    XOR = 6
    NAND = 7
    NOR = 8
    XNOR = 9


#: Operand count per gate function.
ARITY: dict[GateFn, int] = {
    GateFn.CONST0: 0,
    GateFn.CONST1: 0,
    GateFn.BUF: 1,
    GateFn.NOT: 1,
    GateFn.AND: 2,
    GateFn.OR: 2,
    GateFn.XOR: 2,
    GateFn.NAND: 2,
    GateFn.NOR: 2,
    GateFn.XNOR: 2,
}

# Row-level evaluation, one entry per opcode.  ``m`` is the vector mask;
# inverting ops must XOR with it to stay within the packed width.
_EVAL: tuple[Callable[[int, int, int], int], ...] = (
    lambda a, b, m: 0,  # CONST0
    lambda a, b, m: m,  # CONST1
    lambda a, b, m: a,  # BUF
    lambda a, b, m: a ^ m,  # NOT
    lambda a, b, m: a & b,  # AND
    lambda a, b, m: a | b,  # OR
    lambda a, b, m: a ^ b,  # XOR
    lambda a, b, m: (a & b) ^ m,  # NAND
    lambda a, b, m: (a | b) ^ m,  # NOR
    lambda a, b, m: (a ^ b) ^ m,  # XNOR
)


def eval_gate_row(fn: int, a_row: int, b_row: int, mask: int) -> int:
    """Evaluate one gate over packed operand rows."""
    return _EVAL[fn](a_row, b_row, mask)


@dataclass(frozen=True)
class Gate:
    """One gate instance; unused operand slots are stored as 0."""

    fn: GateFn
    a: int = 0
    b: int = 0


@dataclass(frozen=True)
class AreaTable:
    """Per-function gate costs.  Costs may be zero but never negative."""

    costs: Mapping[GateFn, float]

    def __post_init__(self):
        for fn, cost in self.costs.items():
            if cost < 0:
                raise ConfigError(f"negative area for {GateFn(fn).name}")

    def cost(self, fn: GateFn) -> float:
        try:
            return self.costs[fn]
        except KeyError:
            raise ConfigError(f"area table has no entry for {GateFn(fn).name}") from None

    @classmethod
    def from_dict(cls, raw: Mapping[str, float]) -> "AreaTable":
        try:
            costs = {GateFn[name.upper()]: float(v) for name, v in raw.items()}
        except KeyError as exc:
            raise ConfigError(f"unknown gate function in area table: {exc}") from None
        return cls(costs=costs)

    def to_dict(self) -> dict[str, float]:
        return {GateFn(fn).name: float(v) for fn, v in sorted(self.costs.items())}


#: Default technology weights: inverters cost 1, two-input monotone
#: gates 2, parity gates 3, buffers and constants are free.
DEFAULT_AREA = AreaTable(
    costs={
        GateFn.CONST0: 0.0,
        GateFn.CONST1: 0.0,
        GateFn.BUF: 0.0,
        GateFn.NOT: 1.0,
        GateFn.AND: 2.0,
        GateFn.OR: 2.0,
        GateFn.XOR: 3.0,
        GateFn.NAND: 2.0,
        GateFn.NOR: 2.0,
        GateFn.XNOR: 3.0,
    }
)


@dataclass(frozen=True)
class Netlist:
    """Immutable combinational netlist over the fixed gate alphabet."""

    input_count: int
    gates: tuple[Gate, ...]
    outputs: tuple[int, ...]
    name: str = "netlist"

    def __post_init__(self):
        if self.input_count < 0:
            raise ValidationError("input_count must be nonnegative")
        n = self.input_count
        for i, gate in enumerate(self.gates):
            addr = n + i
            arity = ARITY[gate.fn]
            if arity >= 1 and not (0 <= gate.a < addr):
                raise ValidationError(f"gate {i}: operand a={gate.a} not before address {addr}")
            if arity >= 2 and not (0 <= gate.b < addr):
                raise ValidationError(f"gate {i}: operand b={gate.b} not before address {addr}")
        top = n + len(self.gates)
        for k, ref in enumerate(self.outputs):
            if not (0 <= ref < top):
                raise ValidationError(f"output {k} references unknown signal {ref}")

    @property
    def output_count(self) -> int:
        return len(self.outputs)

    @property
    def signal_count(self) -> int:
        return self.input_count + len(self.gates)


def simulate(netlist: Netlist, inputs: BitMatrix) -> BitMatrix:
    """Evaluate the netlist over all vectors of ``inputs`` in parallel.

    ``inputs`` must provide one row per primary input; the result has one
    row per primary output, same vector count.
    """
    if inputs.row_count != netlist.input_count:
        raise ValidationError(
            f"netlist expects {netlist.input_count} input rows, got {inputs.row_count}"
        )
    mask = inputs.mask
    values: list[int] = list(inputs.rows)
    append = values.append
    for gate in netlist.gates:
        if gate.fn <= GateFn.CONST1:
            append(0 if gate.fn == GateFn.CONST0 else mask)
        else:
            # Feed-forward addressing guarantees operands exist already.
            append(_EVAL[gate.fn](values[gate.a], values[gate.b], mask))
    return BitMatrix(rows=tuple(values[r] for r in netlist.outputs), count=inputs.count)


def area(netlist: Netlist, table: AreaTable = DEFAULT_AREA) -> float:
    """Total gate cost under the given technology weights."""
    return float(sum(table.cost(g.fn) for g in netlist.gates))


class NetlistBuilder:
    """Mutable construction helper; emits an immutable :class:`Netlist`.

    ``add`` returns the new gate's signal address, so generator code reads
    like three-address assembly.  ``splice`` embeds a finished netlist,
    remapping its inputs onto caller-supplied signals.
    """

    def __init__(self, input_count: int, name: str = "netlist"):
        if input_count < 0:
            raise ValidationError("input_count must be nonnegative")
        self.input_count = input_count
        self.name = name
        self._gates: list[Gate] = []
        self._const_cache: dict[GateFn, int] = {}

    def input_ref(self, i: int) -> int:
        if not (0 <= i < self.input_count):
            raise ValidationError(f"no primary input {i}")
        return i

    @property
    def next_address(self) -> int:
        return self.input_count + len(self._gates)

    def add(self, fn: GateFn, a: int = 0, b: int = 0) -> int:
        addr = self.next_address
        arity = ARITY[fn]
        if arity >= 1 and not (0 <= a < addr):
            raise ValidationError(f"operand a={a} not available at address {addr}")
        if arity >= 2 and not (0 <= b < addr):
            raise ValidationError(f"operand b={b} not available at address {addr}")
        self._gates.append(Gate(fn=fn, a=a if arity >= 1 else 0, b=b if arity >= 2 else 0))
        return addr

    def const(self, value: int) -> int:
        """Shared constant driver; at most one gate per constant."""
        fn = GateFn.CONST1 if value else GateFn.CONST0
        if fn not in self._const_cache:
            self._const_cache[fn] = self.add(fn)
        return self._const_cache[fn]

    def not_(self, a: int) -> int:
        return self.add(GateFn.NOT, a)

    def and_(self, a: int, b: int) -> int:
        return self.add(GateFn.AND, a, b)

    def or_(self, a: int, b: int) -> int:
        return self.add(GateFn.OR, a, b)

    def xor(self, a: int, b: int) -> int:
        return self.add(GateFn.XOR, a, b)

    def xnor(self, a: int, b: int) -> int:
        return self.add(GateFn.XNOR, a, b)

    def splice(self, sub: Netlist, input_refs: Sequence[int]) -> list[int]:
        """Append ``sub``'s gates, wiring its inputs to ``input_refs``.

        Returns the addresses now carrying ``sub``'s outputs.
        """
        if len(input_refs) != sub.input_count:
            raise ValidationError(
                f"{sub.name} expects {sub.input_count} inputs, got {len(input_refs)}"
            )

        def remap(ref: int, mapping: list[int]) -> int:
            return input_refs[ref] if ref < sub.input_count else mapping[ref - sub.input_count]

        gate_map: list[int] = []
        for gate in sub.gates:
            arity = ARITY[gate.fn]
            a = remap(gate.a, gate_map) if arity >= 1 else 0
            b = remap(gate.b, gate_map) if arity >= 2 else 0
            gate_map.append(self.add(gate.fn, a, b))
        return [remap(r, gate_map) for r in sub.outputs]

    def build(self, outputs: Sequence[int], name: str | None = None) -> Netlist:
        return Netlist(
            input_count=self.input_count,
            gates=tuple(self._gates),
            outputs=tuple(outputs),
            name=name if name is not None else self.name,
        )


def netlist_to_dict(netlist: Netlist) -> dict:
    return {
        "name": netlist.name,
        "inputs": netlist.input_count,
        "outputs": list(netlist.outputs),
        "gates": [{"fn": g.fn.name, "a": g.a, "b": g.b} for g in netlist.gates],
    }


def netlist_from_dict(raw: dict) -> Netlist:
    try:
        gates = tuple(
            Gate(fn=GateFn[g["fn"]], a=int(g.get("a", 0)), b=int(g.get("b", 0)))
            for g in raw["gates"]
        )
        return Netlist(
            input_count=int(raw["inputs"]),
            gates=gates,
            outputs=tuple(int(r) for r in raw["outputs"]),
            name=str(raw.get("name", "netlist")),
        )
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"malformed netlist record: {exc}") from None


def cone_prune(netlist: Netlist, keep_outputs: Sequence[int] | None = None) -> Netlist:
    """Drop every gate not in the fan-in cone of the kept outputs."""
    refs = netlist.outputs if keep_outputs is None else tuple(keep_outputs)
    n = netlist.input_count
    needed: set[int] = set()
    stack = [r for r in refs if r >= n]
    while stack:
        addr = stack.pop()
        if addr in needed:
            continue
        needed.add(addr)
        gate = netlist.gates[addr - n]
        arity = ARITY[gate.fn]
        if arity >= 1 and gate.a >= n:
            stack.append(gate.a)
        if arity >= 2 and gate.b >= n:
            stack.append(gate.b)
    keep = sorted(needed)
    remap = {old: n + rank for rank, old in enumerate(keep)}

    def ref_of(old: int) -> int:
        return old if old < n else remap[old]

    gates = []
    for old in keep:
        g = netlist.gates[old - n]
        arity = ARITY[g.fn]
        gates.append(
            Gate(
                fn=g.fn,
                a=ref_of(g.a) if arity >= 1 else 0,
                b=ref_of(g.b) if arity >= 2 else 0,
            )
        )
    return Netlist(
        input_count=n,
        gates=tuple(gates),
        outputs=tuple(ref_of(r) for r in refs),
        name=netlist.name,
    )
