"""Error evaluators for approximate circuits.

Two families live here.  Arithmetic error treats a circuit's outputs as
an unsigned value and measures mean and worst-case absolute deviation
from a reference circuit over *all* inputs: by direct enumeration up to
:data:`EXHAUSTIVE_INPUT_LIMIT` inputs, or through decision diagrams and
model counting above that.  Both paths reduce the absolute difference to
per-bit indicator functions, so the mean comes out as an exact integer
sum divided by a power of two and the two evaluators agree bit for bit.

Relational error serves popcount-compare circuits.  A miscompare is
weighted by how far apart the two true counts were; samples where the
approximate and exact comparisons agree contribute zero.  Estimation is
Monte-Carlo by default, with an exhaustive oracle for small widths.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bits
from .bdd import DEFAULT_NODE_LIMIT, BddManager, netlist_to_bdds
from .circuit import Netlist, simulate
from .exceptions import ResourceError, ValidationError
from .util import derive_seed

#: Widest input count the enumerating evaluator accepts.
EXHAUSTIVE_INPUT_LIMIT = 20

#: Default Monte-Carlo sample count for relational error.
DEFAULT_MC_SAMPLES = 1_000_000

#: How relational samples are drawn: independent uniform input bits, or
#: uniform count pairs realized by random vectors of that weight.
SAMPLE_SPACES = ("VECTORS", "VALUES")


@dataclass(frozen=True)
class ArithmeticErrorReport:
    """Value-domain error of an approximate circuit against a reference."""

    mae: float
    wcae: int
    error_sum: int
    vector_count: int
    input_count: int
    evaluator: str

    def to_dict(self) -> dict:
        return {
            "mae": self.mae,
            "wcae": self.wcae,
            "error_sum": self.error_sum,
            "vector_count": self.vector_count,
            "input_count": self.input_count,
            "evaluator": self.evaluator,
        }


def _check_pair(approx: Netlist, exact: Netlist) -> int:
    if approx.input_count != exact.input_count:
        raise ValidationError(
            f"input widths differ: {approx.input_count} vs {exact.input_count}"
        )
    return approx.input_count


def eval_exhaustive(approx: Netlist, exact: Netlist) -> ArithmeticErrorReport:
    """Enumerate every assignment; exact by construction.

    Raises :class:`ResourceError` beyond :data:`EXHAUSTIVE_INPUT_LIMIT`
    inputs instead of attempting a 2**n blowup.
    """
    n = _check_pair(approx, exact)
    if n > EXHAUSTIVE_INPUT_LIMIT:
        raise ResourceError(
            f"exhaustive evaluation over {n} inputs exceeds the "
            f"{EXHAUSTIVE_INPUT_LIMIT}-input limit; use the diagram evaluator"
        )
    matrix = bits.enumerate_inputs(n)
    rows_a = simulate(approx, matrix).rows
    rows_e = simulate(exact, matrix).rows
    diff = bits.packed_abs_diff(rows_a, rows_e, matrix.mask)
    error_sum = bits.weighted_popcount(diff)
    wcae = bits.greedy_max_value(diff, matrix.mask)
    return ArithmeticErrorReport(
        mae=error_sum / (1 << n),
        wcae=wcae,
        error_sum=error_sum,
        vector_count=1 << n,
        input_count=n,
        evaluator="EXHAUSTIVE",
    )


def _bdd_sub(mgr: BddManager, fa: list[int], fb: list[int]) -> tuple[list[int], int]:
    """Bitwise a-b over diagram functions; returns diff bits and borrow."""
    width = max(len(fa), len(fb))
    diff: list[int] = []
    borrow = mgr.ZERO
    for j in range(width):
        a = fa[j] if j < len(fa) else mgr.ZERO
        b = fb[j] if j < len(fb) else mgr.ZERO
        diff.append(mgr.xor(mgr.xor(a, b), borrow))
        na = mgr.not_(a)
        borrow = mgr.or_(mgr.and_(na, mgr.or_(b, borrow)), mgr.and_(b, borrow))
    return diff, borrow


def _bdd_abs_diff(mgr: BddManager, fa: list[int], fb: list[int]) -> list[int]:
    d_ab, borrow = _bdd_sub(mgr, fa, fb)
    d_ba, _ = _bdd_sub(mgr, fb, fa)
    keep = mgr.not_(borrow)
    return [
        mgr.or_(mgr.and_(borrow, ba), mgr.and_(keep, ab))
        for ab, ba in zip(d_ab, d_ba)
    ]


def eval_bdd(
    approx: Netlist,
    exact: Netlist,
    var_order=None,
    node_limit: int = DEFAULT_NODE_LIMIT,
) -> ArithmeticErrorReport:
    """Model-counting evaluator; no enumeration, any input width.

    Builds per-bit absolute-difference functions d_j and reads the mean
    error off their satisfying-assignment counts: sum_j 2**j * #sat(d_j)
    is exactly the total absolute error over all 2**n assignments.  The
    worst case walks from the top bit down, keeping the constraint
    satisfiable.
    """
    n = _check_pair(approx, exact)
    mgr = BddManager(n, node_limit=node_limit)
    fa = netlist_to_bdds(mgr, approx, var_order)
    fe = netlist_to_bdds(mgr, exact, var_order)
    diff = _bdd_abs_diff(mgr, fa, fe)

    error_sum = 0
    for j, d in enumerate(diff):
        error_sum += mgr.satcount(d) << j

    wcae = 0
    feasible = mgr.ONE
    for j in range(len(diff) - 1, -1, -1):
        attempt = mgr.and_(feasible, diff[j])
        if attempt != mgr.ZERO:
            wcae |= 1 << j
            feasible = attempt
        else:
            feasible = mgr.and_(feasible, mgr.not_(diff[j]))

    return ArithmeticErrorReport(
        mae=error_sum / (1 << n),
        wcae=wcae,
        error_sum=error_sum,
        vector_count=1 << n,
        input_count=n,
        evaluator="BDD",
    )


def eval_auto(approx: Netlist, exact: Netlist, **bdd_kwargs) -> ArithmeticErrorReport:
    """Enumerate when the input space is small, count models when not."""
    if approx.input_count <= EXHAUSTIVE_INPUT_LIMIT:
        return eval_exhaustive(approx, exact)
    return eval_bdd(approx, exact, **bdd_kwargs)


def distance(x: int, z: int, exact_rel: bool, approx_rel: bool) -> int:
    """Signed severity of one comparison: 0 on agreement, else x - z.

    A flipped comparison between equal counts scores 0; the decision was
    a coin toss the hardware was allowed to call either way.
    """
    return 0 if bool(exact_rel) == bool(approx_rel) else x - z


@dataclass(frozen=True)
class DistanceErrorReport:
    """Relational error of a popcount-compare circuit."""

    mde: float
    wcde: int
    error_free_fraction: float
    histogram: tuple[tuple[int, int], ...]
    sample_count: int
    mode: str
    seed: int | None = None

    def to_dict(self) -> dict:
        return {
            "mde": self.mde,
            "wcde": self.wcde,
            "error_free_fraction": self.error_free_fraction,
            "histogram": [[int(d), int(c)] for d, c in self.histogram],
            "sample_count": self.sample_count,
            "mode": self.mode,
            "seed": self.seed,
        }


def _relational_report(
    x: np.ndarray,
    z: np.ndarray,
    exact_rel: np.ndarray,
    approx_rel: np.ndarray,
    mode: str,
    seed: int | None,
) -> DistanceErrorReport:
    agree = exact_rel == approx_rel
    dev = np.where(agree, 0, x - z).astype(np.int64)
    total = int(np.abs(dev).sum())
    values, counts = np.unique(dev, return_counts=True)
    return DistanceErrorReport(
        mde=total / len(dev),
        wcde=int(np.abs(dev).max(initial=0)),
        error_free_fraction=float(np.count_nonzero(agree)) / len(dev),
        histogram=tuple((int(v), int(c)) for v, c in zip(values, counts)),
        sample_count=len(dev),
        mode=mode,
        seed=seed,
    )


def _weighted_vectors(
    rng: np.random.Generator, counts: np.ndarray, width: int
) -> np.ndarray:
    """Random 0/1 matrix whose row i has exactly counts[i] ones."""
    ranks = np.argsort(rng.random((len(counts), width)), axis=1).argsort(axis=1)
    return ranks < counts[:, None]


def eval_pcc_mc(
    netlist: Netlist,
    n_pos: int,
    n_neg: int,
    samples: int = DEFAULT_MC_SAMPLES,
    seed: int = 0,
    sample_space: str = "VECTORS",
) -> DistanceErrorReport:
    """Monte-Carlo relational error of a compare circuit.

    The circuit takes ``n_pos`` then ``n_neg`` input bits and outputs one
    bit approximating popcount(pos) >= popcount(neg).  ``sample_space``
    VECTORS draws every input bit independently; VALUES draws the two
    counts uniformly and realizes random vectors of those weights.
    """
    if netlist.input_count != n_pos + n_neg:
        raise ValidationError(
            f"netlist has {netlist.input_count} inputs, expected {n_pos + n_neg}"
        )
    if netlist.output_count != 1:
        raise ValidationError("compare circuit must have exactly one output")
    if samples < 1:
        raise ValidationError("need at least one sample")
    if sample_space not in SAMPLE_SPACES:
        raise ValidationError(f"sample_space must be one of {SAMPLE_SPACES}")

    rng = np.random.default_rng(derive_seed(seed, "pcc-mc", sample_space))
    if sample_space == "VECTORS":
        matrix = rng.integers(0, 2, size=(samples, n_pos + n_neg), dtype=np.uint8).astype(bool)
    else:
        xs = rng.integers(0, n_pos + 1, size=samples)
        zs = rng.integers(0, n_neg + 1, size=samples)
        matrix = np.concatenate(
            [
                _weighted_vectors(rng, xs, n_pos),
                _weighted_vectors(rng, zs, n_neg),
            ],
            axis=1,
        )
    x = matrix[:, :n_pos].sum(axis=1, dtype=np.int64)
    z = matrix[:, n_pos:].sum(axis=1, dtype=np.int64)
    packed = bits.BitMatrix.from_bool(matrix.T)
    approx_rel = bits.unpack_bool(simulate(netlist, packed).rows[0], samples)
    return _relational_report(x, z, x >= z, approx_rel, "MC", seed)


def eval_pcc_exhaustive(netlist: Netlist, n_pos: int, n_neg: int) -> DistanceErrorReport:
    """Relational error over every input assignment (small widths only)."""
    n = n_pos + n_neg
    if netlist.input_count != n:
        raise ValidationError(
            f"netlist has {netlist.input_count} inputs, expected {n}"
        )
    if n > EXHAUSTIVE_INPUT_LIMIT:
        raise ResourceError(
            f"exhaustive relational evaluation over {n} inputs exceeds the "
            f"{EXHAUSTIVE_INPUT_LIMIT}-input limit"
        )
    matrix = bits.enumerate_inputs(n)
    x = bits.popcount_rows(bits.BitMatrix(rows=matrix.rows[:n_pos], count=matrix.count))
    z = bits.popcount_rows(bits.BitMatrix(rows=matrix.rows[n_pos:], count=matrix.count))
    approx_rel = bits.unpack_bool(simulate(netlist, matrix).rows[0], matrix.count)
    return _relational_report(x, z, x >= z, approx_rel, "EXHAUSTIVE", None)
