"""Hill-climber and popcount-library construction tests."""

import math

import pytest

from pcforge.bits import enumerate_inputs
from pcforge.circuit import area, netlist_to_dict, simulate
from pcforge.errors import eval_exhaustive
from pcforge.exceptions import ValidationError
from pcforge.library import load_pc_library, save_pc_library
from pcforge.popcount import build_exact_pc, build_truncated_pc
from pcforge.search import (
    CgpSearchConfig,
    build_pc_library,
    cgp_search,
    tau_schedule,
)

from . import oracles


def _short_config(**overrides):
    base = dict(metric="MAE", tau=0.5, max_iterations=400, seed=7)
    base.update(overrides)
    return CgpSearchConfig(**base)


def test_search_result_is_feasible_and_certified():
    exact = build_exact_pc(4)
    result = cgp_search(exact, _short_config())
    assert result.mae <= 0.5
    assert result.area <= area(exact)
    # Re-check the reported error against the slow oracle.
    mae, wcae = oracles.exhaustive_arith_error(result.netlist, exact)
    assert float(mae) == result.mae
    assert wcae == result.wcae
    assert result.iterations == 400
    assert result.evaluations == 1 + 4 * 400


def test_search_is_deterministic():
    exact = build_exact_pc(5)
    a = cgp_search(exact, _short_config(max_iterations=300))
    b = cgp_search(exact, _short_config(max_iterations=300))
    assert netlist_to_dict(a.netlist) == netlist_to_dict(b.netlist)
    assert (a.area, a.mae, a.wcae, a.evaluations) == (b.area, b.mae, b.wcae, b.evaluations)


def test_zero_tolerance_keeps_function_exact():
    exact = build_exact_pc(4)
    result = cgp_search(exact, _short_config(tau=0.0, max_iterations=600))
    assert result.mae == 0.0
    assert result.wcae == 0
    approx_rows = simulate(result.netlist, enumerate_inputs(4))
    exact_rows = simulate(exact, enumerate_inputs(4))
    assert approx_rows == exact_rows
    assert result.area <= area(exact)


def test_worst_case_metric_is_respected():
    exact = build_exact_pc(4)
    result = cgp_search(exact, _short_config(metric="WCAE", tau=1, max_iterations=500))
    _, wcae = oracles.exhaustive_arith_error(result.netlist, exact)
    assert wcae <= 1
    assert result.wcae == wcae


def test_mean_error_search_beats_exact_area():
    exact = build_exact_pc(8)
    result = cgp_search(exact, _short_config(max_iterations=4000, seed=1))
    assert result.mae <= 0.5
    assert result.area < area(exact)


def test_diagram_scorer_matches_enumeration():
    exact = build_exact_pc(3)
    fast = cgp_search(exact, _short_config(max_iterations=120, seed=3))
    slow = cgp_search(exact, _short_config(max_iterations=120, seed=3, evaluator="BDD"))
    assert netlist_to_dict(fast.netlist) == netlist_to_dict(slow.netlist)
    assert (fast.area, fast.mae, fast.wcae) == (slow.area, slow.mae, slow.wcae)


def test_time_budget_terminates():
    exact = build_exact_pc(4)
    config = CgpSearchConfig(
        metric="MAE", tau=0.5, max_iterations=None, time_limit_s=0.2, seed=9
    )
    result = cgp_search(exact, config)
    assert result.iterations >= 1
    assert result.mae <= 0.5


def test_config_validation():
    with pytest.raises(ValidationError):
        CgpSearchConfig(metric="RMSE")
    with pytest.raises(ValidationError):
        CgpSearchConfig(max_iterations=None, time_limit_s=None)
    with pytest.raises(ValidationError):
        CgpSearchConfig(tau=-0.1)
    with pytest.raises(ValidationError):
        CgpSearchConfig(offspring=0)
    with pytest.raises(ValidationError):
        cgp_search(build_exact_pc(21), _short_config(evaluator="EXHAUSTIVE"))


def test_tau_schedule_geometry():
    points = tau_schedule(8, 4, "MAE")
    assert len(points) == 4
    assert points[0] == pytest.approx(0.1)
    assert points[-1] == pytest.approx(4.0)
    for i, value in enumerate(points):
        assert value == pytest.approx(0.1 * (40.0 ** (i / 3)))
    ratios = [points[i + 1] / points[i] for i in range(3)]
    assert max(ratios) == pytest.approx(min(ratios))

    worst = tau_schedule(8, 3, "WCAE")
    assert worst[0] == pytest.approx(1.0)
    assert worst[-1] == pytest.approx(4.0)

    # Ceiling follows the rounded-up output range: 9 inputs count to 16.
    assert tau_schedule(9, 2, "MAE")[-1] == pytest.approx(8.0)

    with pytest.raises(ValidationError):
        tau_schedule(1, 4, "MAE")
    with pytest.raises(ValidationError):
        tau_schedule(8, 1, "MAE")
    with pytest.raises(ValidationError):
        tau_schedule(8, 4, "MSE")


def test_library_contents_and_feasibility():
    library = build_pc_library([3], points=2, budget_iterations=60, master_seed=5)
    entries = library[3]
    exact = build_exact_pc(3)
    by_provenance = {}
    for entry in entries:
        by_provenance.setdefault(entry.provenance, []).append(entry)
    assert len(by_provenance["EXACT"]) == 1
    assert by_provenance["EXACT"][0].area == area(exact)
    assert by_provenance["EXACT"][0].mae == 0.0
    # Width two yields a single truncation cut.
    assert len(by_provenance["TRUNCATED"]) == 1
    assert len(by_provenance["EVOLVED"]) == 4  # two metrics, two budgets each
    for entry in by_provenance["EVOLVED"]:
        measured = entry.mae if entry.constraint_metric == "MAE" else entry.wcae
        assert measured <= entry.constraint_tau
        assert entry.rng_seed is not None
        assert entry.iterations == 60
    assert any(entry.pareto for entry in entries)
    front = oracles.pareto_front([(e.area, e.mae) for e in entries])
    assert [i for i, e in enumerate(entries) if e.pareto] == sorted(front)


def test_library_truncation_metrics_match_direct_eval():
    library = build_pc_library([4], points=2, budget_iterations=20, master_seed=2)
    trunc_entries = [e for e in library[4] if e.provenance == "TRUNCATED"]
    assert len(trunc_entries) == 2
    exact = build_exact_pc(4)
    seen_cuts = set()
    for entry in trunc_entries:
        for cut in (1, 2):
            direct = build_truncated_pc(4, cut)
            if netlist_to_dict(direct) == netlist_to_dict(entry.netlist):
                report = eval_exhaustive(direct, exact)
                assert entry.mae == report.mae
                assert entry.wcae == report.wcae
                seen_cuts.add(cut)
    assert seen_cuts == {1, 2}


def test_library_round_trip_and_thread_invariance(tmp_path):
    kwargs = dict(points=2, budget_iterations=40, master_seed=11)
    library = build_pc_library([2, 3], **kwargs)
    threaded = build_pc_library([2, 3], threads=4, **kwargs)
    as_dicts = {n: [e.to_dict() for e in v] for n, v in library.items()}
    assert as_dicts == {n: [e.to_dict() for e in v] for n, v in threaded.items()}

    save_pc_library(library, str(tmp_path), fingerprint="abc")
    loaded, fingerprint = load_pc_library(str(tmp_path))
    assert fingerprint == "abc"
    assert {n: [e.to_dict() for e in v] for n, v in loaded.items()} == as_dicts


def test_single_input_size_has_no_schedules():
    library = build_pc_library([1], points=3, budget_iterations=10)
    assert [e.provenance for e in library[1]] == ["EXACT"]
    assert library[1][0].pareto


def test_infinite_parent_fitness_is_reported():
    # A tau no circuit can miss still certifies: exact seed is feasible.
    exact = build_exact_pc(2)
    result = cgp_search(exact, _short_config(max_iterations=50, tau=0.0))
    assert result.area <= area(exact)
    assert math.isfinite(result.area)
