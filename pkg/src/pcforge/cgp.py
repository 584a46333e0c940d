"""Integer-addressed genotypes for evolving gate-level circuits.

The genotype is a single-row grid: three genes per column (function,
operand a, operand b) followed by one gene per circuit output.  Genes
hold signal addresses in the same space netlists use, so a netlist
embeds verbatim into the leading columns and decoding is a reachability
walk.  Primary inputs are always legal operand sources; node-to-node
connections look back at most ``levels_back`` columns.
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .circuit import ARITY, Gate, GateFn, Netlist
from .exceptions import CapacityError, ValidationError

_FN_COUNT = len(GateFn)


@dataclass(frozen=True)
class CgpGenotype:
    input_count: int
    output_count: int
    columns: int
    levels_back: int
    genes: tuple[int, ...]

    def __post_init__(self):
        n, cols, lb = self.input_count, self.columns, self.levels_back
        if n < 1:
            raise ValidationError("genotype needs at least one primary input")
        if cols < 1:
            raise ValidationError("genotype needs at least one column")
        if not (1 <= lb <= cols):
            raise ValidationError("levels_back must lie in 1..columns")
        if self.output_count < 1:
            raise ValidationError("genotype needs at least one output")
        if len(self.genes) != 3 * cols + self.output_count:
            raise ValidationError(
                f"expected {3 * cols + self.output_count} genes, got {len(self.genes)}"
            )
        for c in range(cols):
            fn, a, b = self.genes[3 * c : 3 * c + 3]
            if not (0 <= fn < _FN_COUNT):
                raise ValidationError(f"column {c}: bad function code {fn}")
            lo = n + max(0, c - lb)
            hi = n + c
            for operand in (a, b):
                if not (0 <= operand < n or lo <= operand < hi):
                    raise ValidationError(
                        f"column {c}: operand {operand} outside inputs and window"
                    )
        top = n + cols
        for k, ref in enumerate(self.genes[3 * cols :]):
            if not (0 <= ref < top):
                raise ValidationError(f"output {k}: address {ref} out of range")

    @property
    def output_genes(self) -> tuple[int, ...]:
        return self.genes[3 * self.columns :]


def encode(netlist: Netlist, columns: int, levels_back: int | None = None) -> CgpGenotype:
    """Embed a netlist into the leading grid columns.

    Remaining columns become inert single-input buffers of input 0.
    Raises :class:`CapacityError` when the grid is too small, reporting
    how many columns the netlist needs.
    """
    if levels_back is None:
        levels_back = columns
    if netlist.input_count < 1:
        raise ValidationError("cannot encode a netlist without primary inputs")
    if len(netlist.gates) > columns:
        raise CapacityError(
            f"netlist needs {len(netlist.gates)} columns, grid has {columns}",
            required=len(netlist.gates),
            available=columns,
        )
    n = netlist.input_count
    genes: list[int] = []
    for i, gate in enumerate(netlist.gates):
        for operand in (gate.a, gate.b)[: ARITY[gate.fn]]:
            if operand >= n and i - (operand - n) > levels_back:
                raise ValidationError(
                    f"gate {i} reaches back {i - (operand - n)} columns, "
                    f"beyond levels_back={levels_back}"
                )
        genes.extend((int(gate.fn), gate.a, gate.b))
    for c in range(len(netlist.gates), columns):
        genes.extend((int(GateFn.BUF), 0, 0))
    genes.extend(netlist.outputs)
    return CgpGenotype(
        input_count=n,
        output_count=netlist.output_count,
        columns=columns,
        levels_back=levels_back,
        genes=tuple(genes),
    )


def active_columns(
    input_count: int, columns: int, genes: tuple[int, ...] | list[int], output_count: int
) -> list[int]:
    """Columns reachable from the output genes, ascending."""
    n = input_count
    marked = bytearray(columns)
    stack = [g - n for g in genes[3 * columns : 3 * columns + output_count] if g >= n]
    while stack:
        c = stack.pop()
        if marked[c]:
            continue
        marked[c] = 1
        base = 3 * c
        fn = genes[base]
        if fn >= GateFn.BUF:
            a = genes[base + 1]
            if a >= n:
                stack.append(a - n)
        if fn >= GateFn.AND:
            b = genes[base + 2]
            if b >= n:
                stack.append(b - n)
    return [c for c in range(columns) if marked[c]]


def decode(genotype: CgpGenotype, name: str = "evolved") -> Netlist:
    """Extract the active subgraph as a compact netlist."""
    n = genotype.input_count
    genes = genotype.genes
    active = active_columns(n, genotype.columns, genes, genotype.output_count)
    addr_map = {c + n: n + rank for rank, c in enumerate(active)}

    def remap(ref: int) -> int:
        return ref if ref < n else addr_map[ref]

    gates = []
    for c in active:
        fn = GateFn(genes[3 * c])
        arity = ARITY[fn]
        gates.append(
            Gate(
                fn=fn,
                a=remap(genes[3 * c + 1]) if arity >= 1 else 0,
                b=remap(genes[3 * c + 2]) if arity >= 2 else 0,
            )
        )
    outputs = tuple(remap(g) for g in genotype.output_genes)
    return Netlist(input_count=n, gates=tuple(gates), outputs=outputs, name=name)


def mutate_genes(
    genes: list[int],
    input_count: int,
    columns: int,
    levels_back: int,
    gene_mutations: int,
    rng: random.Random,
) -> None:
    """In-place point mutation used by the search hot loop.

    Exactly ``gene_mutations`` positions are redrawn uniformly; a redraw
    may land on the value already present.
    """
    n = input_count
    node_genes = 3 * columns
    total = len(genes)
    for _ in range(gene_mutations):
        idx = rng.randrange(total)
        if idx >= node_genes:
            genes[idx] = _draw_source(rng, n, 0, columns)
            continue
        c, slot = divmod(idx, 3)
        if slot == 0:
            genes[idx] = rng.randrange(_FN_COUNT)
        else:
            genes[idx] = _draw_source(rng, n, max(0, c - levels_back), c)


def _draw_source(rng: random.Random, n: int, col_lo: int, col_hi: int) -> int:
    """Uniform draw over inputs plus the node window [col_lo, col_hi)."""
    k = rng.randrange(n + (col_hi - col_lo))
    return k if k < n else n + col_lo + (k - n)


def mutate(genotype: CgpGenotype, gene_mutations: int, rng: random.Random) -> CgpGenotype:
    """Pure point mutation; validity is preserved by construction."""
    if gene_mutations < 0:
        raise ValidationError("gene_mutations must be nonnegative")
    genes = list(genotype.genes)
    mutate_genes(
        genes,
        genotype.input_count,
        genotype.columns,
        genotype.levels_back,
        gene_mutations,
        rng,
    )
    return CgpGenotype(
        input_count=genotype.input_count,
        output_count=genotype.output_count,
        columns=genotype.columns,
        levels_back=genotype.levels_back,
        genes=tuple(genes),
    )
