"""Packed bit-vector kernels for word-parallel logic evaluation.

A *bit row* is a plain Python int carrying one bit per test vector, with
vector 0 at the least significant bit.  Arbitrary-precision ints make a
gate evaluation over every vector a single interpreter operation, and
``int.bit_count()`` delivers population counts at C speed, so the same
code path serves 8 vectors or 10**6.  numpy enters only at the edges,
where per-vector integer values are needed in bulk.

A :class:`BitMatrix` bundles several rows of equal vector count; it is
the currency of the netlist simulator.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from .exceptions import ValidationError


def mask_bits(count: int) -> int:
    """All-ones row for ``count`` vectors."""
    return (1 << count) - 1


def pack_bool(bits: np.ndarray | Sequence[int]) -> int:
    """Pack a 1-D array of 0/1 values into a row int (index 0 = LSB)."""
    arr = np.ascontiguousarray(np.asarray(bits, dtype=bool))
    packed = np.packbits(arr, bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def unpack_bool(row: int, count: int) -> np.ndarray:
    """Expand a row int into a bool array of length ``count``."""
    nbytes = (count + 7) // 8
    raw = np.frombuffer(row.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:count].astype(bool)


def rows_to_values(rows: Sequence[int], count: int) -> np.ndarray:
    """Per-vector unsigned values from little-endian bit rows.

    Row ``j`` holds bit ``j`` of every vector's value.  Returns int64.
    """
    out = np.zeros(count, dtype=np.int64)
    for j, row in enumerate(rows):
        if row:
            out += unpack_bool(row, count).astype(np.int64) << j
    return out


@dataclass(frozen=True)
class BitMatrix:
    """Immutable stack of bit rows with a shared vector count."""

    rows: tuple[int, ...]
    count: int

    def __post_init__(self):
        if self.count < 0:
            raise ValidationError("vector count must be nonnegative")
        limit = 1 << self.count
        for i, row in enumerate(self.rows):
            if row < 0 or row >= limit:
                raise ValidationError(f"row {i} has bits beyond vector count {self.count}")

    @property
    def row_count(self) -> int:
        return len(self.rows)

    @property
    def mask(self) -> int:
        return mask_bits(self.count)

    @classmethod
    def zeros(cls, row_count: int, count: int) -> "BitMatrix":
        return cls(rows=(0,) * row_count, count=count)

    @classmethod
    def from_bool(cls, array: np.ndarray) -> "BitMatrix":
        """Build from a (rows x vectors) 0/1 array."""
        arr = np.asarray(array)
        if arr.ndim != 2:
            raise ValidationError("expected a 2-D array of bits")
        return cls(rows=tuple(pack_bool(r) for r in arr), count=arr.shape[1])

    def to_bool(self) -> np.ndarray:
        return np.array([unpack_bool(r, self.count) for r in self.rows], dtype=bool)

    def values(self) -> np.ndarray:
        """Per-vector values, rows interpreted as little-endian bits."""
        return rows_to_values(self.rows, self.count)

    def column(self, i: int) -> tuple[int, ...]:
        """The bits of vector ``i`` across all rows."""
        return tuple((r >> i) & 1 for r in self.rows)


@lru_cache(maxsize=8)
def _enumeration_rows(n: int) -> tuple[int, ...]:
    rows = []
    total = 1 << n
    for j in range(n):
        # Bit j of vector index i follows a period-2**(j+1) square wave.
        width = 1 << (j + 1)
        pattern = ((1 << (1 << j)) - 1) << (1 << j)
        while width < total:
            pattern |= pattern << width
            width <<= 1
        rows.append(pattern)
    return tuple(rows)


def enumerate_inputs(n: int) -> BitMatrix:
    """All 2**n input assignments; vector i is the binary encoding of i."""
    if n < 0 or n > 26:
        raise ValidationError(f"refusing to enumerate 2**{n} vectors")
    return BitMatrix(rows=_enumeration_rows(n), count=1 << n)


def random_inputs(n_rows: int, count: int, rng: np.random.Generator) -> BitMatrix:
    """Uniform random bit matrix; each bit is an independent fair coin."""
    nbytes = (count + 7) // 8
    mask = mask_bits(count)
    rows = tuple(
        int.from_bytes(rng.bytes(nbytes), "little") & mask for _ in range(n_rows)
    )
    return BitMatrix(rows=rows, count=count)


def popcount_rows(matrix: BitMatrix) -> np.ndarray:
    """Per-vector count of set rows (column sums), as int64."""
    out = np.zeros(matrix.count, dtype=np.int64)
    for row in matrix.rows:
        if row:
            out += unpack_bool(row, matrix.count)
    return out


def packed_sub(
    rows_a: Sequence[int], rows_b: Sequence[int], mask: int
) -> tuple[list[int], int]:
    """Vector-parallel unsigned subtraction ``a - b`` with borrow chain.

    Returns the difference rows (width = max operand width) and the final
    borrow row, set where ``a < b``.
    """
    width = max(len(rows_a), len(rows_b))
    diff: list[int] = []
    borrow = 0
    for j in range(width):
        a = rows_a[j] if j < len(rows_a) else 0
        b = rows_b[j] if j < len(rows_b) else 0
        diff.append(a ^ b ^ borrow)
        na = a ^ mask
        borrow = (na & (b | borrow)) | (b & borrow)
    return diff, borrow


def packed_abs_diff(rows_a: Sequence[int], rows_b: Sequence[int], mask: int) -> list[int]:
    """Bit rows of |a - b| per vector, via two borrow chains and a select."""
    d_ab, borrow = packed_sub(rows_a, rows_b, mask)
    d_ba, _ = packed_sub(rows_b, rows_a, mask)
    keep = borrow ^ mask
    return [(borrow & ba) | (keep & ab) for ab, ba in zip(d_ab, d_ba)]


def packed_ge(rows_a: Sequence[int], rows_b: Sequence[int], mask: int) -> int:
    """Row with a 1 where value(a) >= value(b)."""
    _, borrow = packed_sub(rows_a, rows_b, mask)
    return borrow ^ mask


def weighted_popcount(rows: Iterable[int]) -> int:
    """Sum over vectors of the value encoded by the rows (exact int)."""
    return sum(row.bit_count() << j for j, row in enumerate(rows))


def greedy_max_value(rows: Sequence[int], select: int) -> int:
    """Largest per-vector value among vectors set in ``select``.

    Walks bits from the MSB down, keeping only vectors that can still
    reach the running maximum.  Returns 0 when ``select`` is empty.
    """
    if select == 0:
        return 0
    best = 0
    alive = select
    for j in range(len(rows) - 1, -1, -1):
        hit = alive & rows[j]
        if hit:
            best |= 1 << j
            alive = hit
    return best
