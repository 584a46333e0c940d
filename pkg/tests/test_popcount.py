"""Popcount constructors against software bit counting."""

import numpy as np
import pytest

from pcforge.bits import enumerate_inputs, random_inputs, popcount_rows
from pcforge.circuit import DEFAULT_AREA, GateFn, area, simulate
from pcforge.exceptions import ValidationError
from pcforge.popcount import build_exact_pc, build_truncated_pc

from .oracles import all_assignments, output_value


@pytest.mark.parametrize("n", list(range(1, 13)))
def test_exact_pc_counts_every_assignment(n):
    net = build_exact_pc(n)
    assert net.output_count == n.bit_length()
    got = simulate(net, enumerate_inputs(n)).values()
    want = popcount_rows(enumerate_inputs(n))
    assert np.array_equal(got, want)


def test_exact_pc_random_vectors_wide():
    # Too wide to enumerate; sample instead.
    rng = np.random.default_rng(42)
    for n in [21, 33]:
        net = build_exact_pc(n)
        m = random_inputs(n, 2048, rng)
        assert np.array_equal(simulate(net, m).values(), popcount_rows(m))


def test_exact_pc8_shape_and_cost():
    net = build_exact_pc(8)
    assert net.input_count == 8
    assert net.output_count == 4
    assert area(net) > 0
    assert len(net.gates) <= 40  # adder tree stays lean


def test_exact_pc_rejects_zero_inputs():
    with pytest.raises(ValidationError):
        build_exact_pc(0)


@pytest.mark.parametrize("n,cut", [(4, 1), (8, 1), (8, 2), (8, 3), (9, 2)])
def test_truncated_pc_zeroes_low_bits_only(n, cut):
    net = build_truncated_pc(n, cut)
    exact = build_exact_pc(n)
    assert net.output_count == exact.output_count
    got = simulate(net, enumerate_inputs(n))
    want = simulate(exact, enumerate_inputs(n))
    for j in range(net.output_count):
        if j < cut:
            assert got.rows[j] == 0
        else:
            assert got.rows[j] == want.rows[j]


def test_truncated_pc_sheds_area():
    exact_area = area(build_exact_pc(8))
    prev = exact_area
    for cut in [1, 2, 3]:
        a = area(build_truncated_pc(8, cut))
        assert a < prev
        prev = a


def test_truncated_pc_cut_zero_is_exact():
    assert build_truncated_pc(5, 0).gates == build_exact_pc(5).gates


def test_truncated_pc_cut_range():
    with pytest.raises(ValidationError):
        build_truncated_pc(8, 4)
    with pytest.raises(ValidationError):
        build_truncated_pc(8, -1)
