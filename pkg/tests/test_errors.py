"""Error evaluators against independent slow oracles."""

import random
from fractions import Fraction

import numpy as np
import pytest

from pcforge.circuit import GateFn, Netlist, NetlistBuilder, simulate
from pcforge.errors import (
    DEFAULT_MC_SAMPLES,
    distance,
    eval_auto,
    eval_bdd,
    eval_exhaustive,
    eval_pcc_exhaustive,
    eval_pcc_mc,
)
from pcforge.exceptions import ResourceError, ValidationError
from pcforge.popcount import build_exact_pc, build_truncated_pc

from .oracles import all_assignments, exhaustive_arith_error, signed_deviation
from .test_circuit import _random_netlist


def _random_pc_like(rng: random.Random, n: int) -> Netlist:
    """Random netlist with popcount-shaped interface for error tests."""
    width = n.bit_length()
    b = NetlistBuilder(n)
    for _ in range(rng.randrange(3, 18)):
        hi = b.next_address
        b.add(GateFn(rng.randrange(len(GateFn))), rng.randrange(hi), rng.randrange(hi))
    outs = [rng.randrange(b.next_address) for _ in range(width)]
    return b.build(outs)


def test_exhaustive_matches_oracle_on_random_pairs():
    rng = random.Random(2024)
    for _ in range(25):
        n = rng.randrange(2, 7)
        approx = _random_pc_like(rng, n)
        exact = build_exact_pc(n)
        report = eval_exhaustive(approx, exact)
        mean, worst = exhaustive_arith_error(approx, exact)
        assert Fraction(report.error_sum, report.vector_count) == mean
        assert report.mae == float(mean)
        assert report.wcae == worst


def test_bdd_equals_exhaustive_on_random_pairs():
    rng = random.Random(31)
    for _ in range(25):
        n = rng.randrange(2, 8)
        approx = _random_pc_like(rng, n)
        exact = build_exact_pc(n)
        a = eval_exhaustive(approx, exact)
        b = eval_bdd(approx, exact)
        assert (a.mae, a.wcae, a.error_sum) == (b.mae, b.wcae, b.error_sum)


def test_exact_circuit_has_zero_error_both_ways():
    net = build_exact_pc(6)
    for evaluate in (eval_exhaustive, eval_bdd):
        report = evaluate(net, net)
        assert report.mae == 0.0
        assert report.wcae == 0
        assert report.error_sum == 0


def test_truncated_pc8_cut1_mae_is_half():
    # Dropping the parity bit of an 8-input popcount costs exactly 1 on
    # every odd-count assignment, and those are half of all 256.
    report = eval_exhaustive(build_truncated_pc(8, 1), build_exact_pc(8))
    assert report.error_sum == 128
    assert report.mae == 0.5
    assert report.wcae == 1
    again = eval_bdd(build_truncated_pc(8, 1), build_exact_pc(8))
    assert (again.mae, again.wcae) == (0.5, 1)


def test_input_width_mismatch_rejected():
    with pytest.raises(ValidationError):
        eval_exhaustive(build_exact_pc(4), build_exact_pc(5))


def test_exhaustive_width_rail():
    wide = build_exact_pc(21)
    with pytest.raises(ResourceError):
        eval_exhaustive(wide, wide)


def test_eval_auto_dispatch():
    small = eval_auto(build_truncated_pc(6, 1), build_exact_pc(6))
    assert small.evaluator == "EXHAUSTIVE"
    wide = eval_auto(build_truncated_pc(21, 1), build_exact_pc(21))
    assert wide.evaluator == "BDD"
    assert wide.wcae == 1


def test_distance_unit_cases():
    # Same single-bit flip, very different severity.
    assert distance(0, 1, False, True) == -1
    assert distance(0, 4, False, True) == -4
    assert distance(3, 3, True, True) == 0
    assert distance(5, 2, True, True) == 0
    # Flip between equal counts is severity zero by definition.
    assert distance(2, 2, True, False) == 0


def test_distance_fuzz_against_oracle():
    rng = random.Random(8)
    for _ in range(500):
        x, z = rng.randrange(9), rng.randrange(9)
        er, ar = rng.random() < 0.5, rng.random() < 0.5
        assert distance(x, z, er, ar) == signed_deviation(x, z, er, ar)


def _ge_comparator_netlist(n_pos: int, n_neg: int) -> Netlist:
    """Exact x >= z circuit built straight from popcounts, for tests."""
    from pcforge.pcc import assemble_pcc

    return assemble_pcc(build_exact_pc(n_pos), build_exact_pc(n_neg)).netlist


def test_exhaustive_pcc_exact_is_error_free():
    net = _ge_comparator_netlist(4, 3)
    report = eval_pcc_exhaustive(net, 4, 3)
    assert report.mde == 0.0
    assert report.wcde == 0
    assert report.error_free_fraction == 1.0
    assert report.histogram == ((0, 1 << 7),)


def test_mc_pcc_exact_is_error_free():
    net = _ge_comparator_netlist(5, 5)
    report = eval_pcc_mc(net, 5, 5, samples=20_000, seed=3)
    assert report.mde == 0.0
    assert report.wcde == 0
    assert report.error_free_fraction == 1.0


def _inverted_pcc(n_pos: int, n_neg: int) -> Netlist:
    """Worst possible compare circuit: always answers the complement."""
    base = _ge_comparator_netlist(n_pos, n_neg)
    b = NetlistBuilder(base.input_count)
    out = b.splice(base, list(range(base.input_count)))[0]
    return b.build([b.not_(out)])


def test_exhaustive_pcc_matches_bruteforce_oracle():
    rng = random.Random(5)
    for n_pos, n_neg in [(3, 2), (2, 4), (4, 4)]:
        net = _inverted_pcc(n_pos, n_neg)
        report = eval_pcc_exhaustive(net, n_pos, n_neg)
        total = 0
        worst = 0
        agree = 0
        hist = {}
        for _, vec in all_assignments(n_pos + n_neg):
            x = sum(vec[:n_pos])
            z = sum(vec[n_pos:])
            d = signed_deviation(x, z, x >= z, not (x >= z))
            total += abs(d)
            worst = max(worst, abs(d))
            hist[d] = hist.get(d, 0) + 1
        count = 1 << (n_pos + n_neg)
        assert report.mde == total / count
        assert report.wcde == worst
        assert report.error_free_fraction == 0.0
        assert dict(report.histogram) == hist


def test_mc_pcc_tracks_exhaustive():
    net = _inverted_pcc(4, 4)
    exact = eval_pcc_exhaustive(net, 4, 4)
    mc = eval_pcc_mc(net, 4, 4, samples=200_000, seed=11)
    assert abs(mc.mde - exact.mde) < 0.02
    assert mc.wcde <= exact.wcde


def test_mc_pcc_determinism_and_seed_sensitivity():
    net = _inverted_pcc(3, 3)
    a = eval_pcc_mc(net, 3, 3, samples=5_000, seed=21)
    b = eval_pcc_mc(net, 3, 3, samples=5_000, seed=21)
    c = eval_pcc_mc(net, 3, 3, samples=5_000, seed=22)
    assert a == b
    assert a.histogram != c.histogram


def test_mc_pcc_values_sample_space():
    net = _ge_comparator_netlist(6, 3)
    report = eval_pcc_mc(net, 6, 3, samples=30_000, seed=5, sample_space="VALUES")
    assert report.mde == 0.0
    assert report.error_free_fraction == 1.0
    with pytest.raises(ValidationError):
        eval_pcc_mc(net, 6, 3, samples=100, seed=5, sample_space="COUNTS")


def test_values_sample_space_hits_extreme_counts():
    # Uniform count pairs must reach x = n_pos even when vectors rarely do.
    from pcforge.errors import _weighted_vectors

    rng = np.random.default_rng(7)
    counts = np.array([0, 3, 7, 2, 7, 0])
    got = _weighted_vectors(rng, counts, 7)
    assert np.array_equal(got.sum(axis=1), counts)


def test_pcc_interface_validation():
    net = _ge_comparator_netlist(3, 3)
    with pytest.raises(ValidationError):
        eval_pcc_mc(net, 4, 3, samples=10, seed=0)
    with pytest.raises(ResourceError):
        eval_pcc_exhaustive(_ge_comparator_netlist(11, 11), 11, 11)
