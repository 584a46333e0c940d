"""Popcount-compare circuits: assembly, candidate sweep, Pareto pruning.

A compare circuit answers popcount(pos inputs) >= popcount(neg inputs)
with one bit.  It is built from two popcount blocks, one per weight
polarity, feeding an unsigned comparator sized for the larger block.
Mixing approximate popcounts from a component library yields a family of
candidates traded off between estimated area and relational error; the
efficient ones graduate into a compare-circuit library.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bits
from .circuit import AreaTable, DEFAULT_AREA, Netlist, NetlistBuilder, area, simulate
from .errors import (
    DEFAULT_MC_SAMPLES,
    DistanceErrorReport,
    _relational_report,
    _weighted_vectors,
)
from .exceptions import ValidationError
from .library import PcLibraryEntry, PccLibraryEntry
from .util import derive_seed


def comparator_width(n_pos: int, n_neg: int) -> int:
    """Bits needed to carry either count, i.e. for values 0..max(n)."""
    if n_pos < 1 or n_neg < 1:
        raise ValidationError("both operand sides need at least one input")
    return max(n_pos, n_neg).bit_length()


def build_comparator(width: int) -> Netlist:
    """Unsigned >= over two little-endian operands of ``width`` bits.

    Inputs are x then z; the output is 1 when x >= z, so ties answer
    true.  Scans from the most significant bit: x wins outright on the
    first position where it has a 1 against a 0, and equality so far
    carries the decision downward.
    """
    if width < 1:
        raise ValidationError("comparator width must be positive")
    b = NetlistBuilder(2 * width, name=f"ge{width}")
    msb = width - 1
    gt = b.and_(msb, b.not_(width + msb))
    eq = b.xnor(msb, width + msb)
    for k in range(width - 2, -1, -1):
        gt = b.or_(gt, b.and_(eq, b.and_(k, b.not_(width + k))))
        eq = b.and_(eq, b.xnor(k, width + k))
    return b.build([b.or_(gt, eq)])


@dataclass(frozen=True)
class PccCircuit:
    """Assembled compare circuit plus its interface bookkeeping."""

    netlist: Netlist
    n_pos: int
    n_neg: int
    comparator_width: int


def assemble_pcc(pc_pos: Netlist, pc_neg: Netlist, name: str | None = None) -> PccCircuit:
    """Wire two popcount blocks into a compare circuit.

    Inputs are the positive block's inputs followed by the negative
    block's.  Narrower popcount outputs are zero-extended to the
    comparator width.
    """
    n_pos, n_neg = pc_pos.input_count, pc_neg.input_count
    width = comparator_width(n_pos, n_neg)
    if pc_pos.output_count > width or pc_neg.output_count > width:
        raise ValidationError("popcount block emits more bits than its count range")
    b = NetlistBuilder(n_pos + n_neg, name=name or f"pcc{n_pos}x{n_neg}")
    x = b.splice(pc_pos, list(range(n_pos)))
    z = b.splice(pc_neg, list(range(n_pos, n_pos + n_neg)))
    if len(x) < width or len(z) < width:
        zero = b.const(0)
        x = x + [zero] * (width - len(x))
        z = z + [zero] * (width - len(z))
    out = b.splice(build_comparator(width), x + z)
    return PccCircuit(
        netlist=b.build(out),
        n_pos=n_pos,
        n_neg=n_neg,
        comparator_width=width,
    )


@dataclass(frozen=True)
class PccCandidate:
    """A popcount pairing evaluated but not yet assembled."""

    pos_index: int
    neg_index: int
    estimated_area: float
    report: DistanceErrorReport

    @property
    def mde(self) -> float:
        return self.report.mde


def _draw_sample_matrix(
    n_pos: int, n_neg: int, samples: int, seed: int, sample_space: str
) -> np.ndarray:
    """Shared sample stream; must mirror the Monte-Carlo evaluator."""
    rng = np.random.default_rng(derive_seed(seed, "pcc-mc", sample_space))
    if sample_space == "VECTORS":
        return rng.integers(0, 2, size=(samples, n_pos + n_neg), dtype=np.uint8).astype(bool)
    xs = rng.integers(0, n_pos + 1, size=samples)
    zs = rng.integers(0, n_neg + 1, size=samples)
    return np.concatenate(
        [_weighted_vectors(rng, xs, n_pos), _weighted_vectors(rng, zs, n_neg)], axis=1
    )


def enumerate_pcc_candidates(
    pos_entries: list[PcLibraryEntry],
    neg_entries: list[PcLibraryEntry],
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    sample_space: str = "VECTORS",
) -> list[PccCandidate]:
    """Evaluate the full cross product of popcount pairings.

    Every pairing sees the identical sample stream the standalone
    Monte-Carlo evaluator would draw, and each popcount block is
    simulated once, so the sweep costs pairs-many comparisons rather
    than pairs-many circuit simulations.
    """
    if not pos_entries or not neg_entries:
        raise ValidationError("need at least one entry on each side")
    n_pos = pos_entries[0].size
    n_neg = neg_entries[0].size
    if any(e.size != n_pos for e in pos_entries) or any(
        e.size != n_neg for e in neg_entries
    ):
        raise ValidationError("library entries of mixed sizes in one slot")

    matrix = _draw_sample_matrix(n_pos, n_neg, samples, seed, sample_space)
    x = matrix[:, :n_pos].sum(axis=1, dtype=np.int64)
    z = matrix[:, n_pos:].sum(axis=1, dtype=np.int64)
    exact_rel = x >= z
    packed_pos = bits.BitMatrix.from_bool(matrix[:, :n_pos].T)
    packed_neg = bits.BitMatrix.from_bool(matrix[:, n_pos:].T)
    pos_values = [simulate(e.netlist, packed_pos).values() for e in pos_entries]
    neg_values = [simulate(e.netlist, packed_neg).values() for e in neg_entries]

    out: list[PccCandidate] = []
    for i, pe in enumerate(pos_entries):
        for j, ne in enumerate(neg_entries):
            report = _relational_report(
                x, z, exact_rel, pos_values[i] >= neg_values[j], "MC", seed
            )
            out.append(
                PccCandidate(
                    pos_index=i,
                    neg_index=j,
                    estimated_area=pe.area + ne.area,
                    report=report,
                )
            )
    return out


def pareto_filter(
    candidates: list[PccCandidate], max_per_size: int | None = None
) -> list[PccCandidate]:
    """Efficient pairings under (estimated_area, mde), both minimized.

    Sorted by area ascending.  Optional thinning keeps ``max_per_size``
    entries evenly spaced along the front; the minimum-area end and the
    most faithful (lowest-mde, largest-area) end always survive.
    """
    front = [
        c
        for c in candidates
        if not any(
            o.estimated_area <= c.estimated_area
            and o.mde <= c.mde
            and (o.estimated_area < c.estimated_area or o.mde < c.mde)
            for o in candidates
        )
    ]
    front.sort(key=lambda c: (c.estimated_area, c.mde, c.pos_index, c.neg_index))
    if max_per_size is not None and max_per_size >= 2 and len(front) > max_per_size:
        picks = np.round(np.linspace(0, len(front) - 1, max_per_size)).astype(int)
        front = [front[i] for i in sorted(set(int(p) for p in picks))]
    return front


def synthesize_and_annotate(
    candidates: list[PccCandidate],
    pos_entries: list[PcLibraryEntry],
    neg_entries: list[PcLibraryEntry],
    area_table: AreaTable = DEFAULT_AREA,
) -> list[PccLibraryEntry]:
    """Assemble surviving candidates and attach real gate-level areas.

    The assembled area includes the comparator and any padding, so it is
    never below the pre-synthesis estimate.
    """
    out = []
    for c in candidates:
        pe, ne = pos_entries[c.pos_index], neg_entries[c.neg_index]
        circuit = assemble_pcc(pe.netlist, ne.netlist)
        synthesized = area(circuit.netlist, area_table)
        entry = PccLibraryEntry(
            n_pos=circuit.n_pos,
            n_neg=circuit.n_neg,
            pos_index=c.pos_index,
            neg_index=c.neg_index,
            pos_provenance=pe.provenance,
            neg_provenance=ne.provenance,
            estimated_area=c.estimated_area,
            synthesized_area=synthesized,
            comparator_width=circuit.comparator_width,
            report=c.report,
            netlist=circuit.netlist,
        )
        out.append(entry)
    return out


def pcc_slot_options(
    candidates: list[PccCandidate],
    pos_entries: list[PcLibraryEntry],
    neg_entries: list[PcLibraryEntry],
    max_per_size: int | None = None,
    area_table: AreaTable = DEFAULT_AREA,
) -> list[PccLibraryEntry]:
    """Final library list for one (n_pos, n_neg) slot.

    Index 0 is always the exact/exact pairing, even if some approximate
    pairing happens to dominate it, so chromosome gene 0 stays the
    faithful choice.  The rest is the thinned Pareto front ordered from
    largest estimated area to smallest.
    """
    exact = [
        c
        for c in candidates
        if pos_entries[c.pos_index].provenance == "EXACT"
        and neg_entries[c.neg_index].provenance == "EXACT"
    ]
    if len(exact) != 1:
        raise ValidationError("candidate sweep must contain exactly one exact pairing")
    front = pareto_filter(candidates, max_per_size=max_per_size)
    rest = [c for c in front if (c.pos_index, c.neg_index) != (exact[0].pos_index, exact[0].neg_index)]
    rest.sort(key=lambda c: (-c.estimated_area, c.mde, c.pos_index, c.neg_index))
    return synthesize_and_annotate(exact + rest, pos_entries, neg_entries, area_table)
