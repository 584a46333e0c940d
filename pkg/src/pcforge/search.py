"""Evolutionary search for approximate popcount circuits.

A (1 + lambda) hill climber over the grid genotype: each iteration
mutates the parent lambda times, scores every child, and promotes the
best child when it is no worse than the parent.  Accepting equal-cost
children lets the search drift across fitness plateaus, which is where
most of the area reduction is found.

Fitness is the active area when the error constraint holds and infinity
otherwise, so the constraint is hard and the objective is pure area.
The error of every candidate is measured against the seed circuit's own
function over all inputs: enumerated in packed form where feasible, by
model counting beyond that.
"""

from __future__ import annotations

import logging
import math
import random
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import bits
from .cgp import CgpGenotype, decode, encode, mutate_genes
from .circuit import DEFAULT_AREA, AreaTable, GateFn, Netlist, area, simulate
from .errors import (
    EXHAUSTIVE_INPUT_LIMIT,
    ArithmeticErrorReport,
    eval_bdd,
    eval_exhaustive,
)
from .exceptions import ValidationError
from .library import PcLibraryEntry, mark_pareto
from .popcount import build_exact_pc, build_truncated_pc
from .util import derive_seed

logger = logging.getLogger(__name__)

METRICS = ("MAE", "WCAE")
EVALUATORS = ("AUTO", "EXHAUSTIVE", "BDD")

#: Grid sizing: this many columns per seed gate, but never fewer than 100.
COLUMNS_PER_SEED_GATE = 4
MIN_COLUMNS = 100


@dataclass(frozen=True)
class CgpSearchConfig:
    """Knobs for one search run; exactly what determinism is keyed on."""

    metric: str = "MAE"
    tau: float = 0.5
    max_iterations: int | None = 100_000
    time_limit_s: float | None = None
    offspring: int = 4
    gene_mutations: int = 5
    columns: int | None = None
    levels_back: int | None = None
    seed: int = 0
    evaluator: str = "AUTO"
    area_table: AreaTable = DEFAULT_AREA

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValidationError(f"metric must be one of {METRICS}")
        if self.evaluator not in EVALUATORS:
            raise ValidationError(f"evaluator must be one of {EVALUATORS}")
        if self.tau < 0:
            raise ValidationError("tau must be nonnegative")
        if self.max_iterations is None and self.time_limit_s is None:
            raise ValidationError("need an iteration budget or a time budget")
        if self.max_iterations is not None and self.max_iterations < 0:
            raise ValidationError("max_iterations must be nonnegative")
        if self.offspring < 1:
            raise ValidationError("offspring count must be positive")
        if self.gene_mutations < 1:
            raise ValidationError("gene_mutations must be positive")


@dataclass(frozen=True)
class CgpSearchResult:
    netlist: Netlist
    area: float
    mae: float
    wcae: int
    iterations: int
    evaluations: int
    seed: int
    metric: str
    tau: float
    evaluator: str


def _resolve_grid(seed_netlist: Netlist, config: CgpSearchConfig) -> tuple[int, int]:
    columns = config.columns
    if columns is None:
        columns = max(MIN_COLUMNS, COLUMNS_PER_SEED_GATE * len(seed_netlist.gates))
    levels_back = config.levels_back if config.levels_back is not None else columns
    return columns, levels_back


class _PackedScorer:
    """Scores raw gene lists by enumeration; the search hot path."""

    def __init__(self, seed_netlist: Netlist, columns: int, config: CgpSearchConfig):
        n = seed_netlist.input_count
        matrix = bits.enumerate_inputs(n)
        self.n = n
        self.columns = columns
        self.mask = matrix.mask
        self.total = matrix.count
        self.exact_rows = simulate(seed_netlist, matrix).rows
        self.base_vals = list(matrix.rows) + [0] * columns
        self.costs = [config.area_table.cost(fn) for fn in GateFn]
        self.is_mae = config.metric == "MAE"
        self.tau = config.tau

    def score(self, genes: list[int]) -> float:
        """Active area if the candidate meets the constraint, else inf."""
        n, columns = self.n, self.columns
        marked = bytearray(columns)
        out_genes = genes[3 * columns :]
        stack = [g - n for g in out_genes if g >= n]
        active: list[int] = []
        while stack:
            c = stack.pop()
            if marked[c]:
                continue
            marked[c] = 1
            active.append(c)
            base = 3 * c
            fn = genes[base]
            if fn >= 2:  # BUF and up read operand a
                a = genes[base + 1]
                if a >= n:
                    stack.append(a - n)
            if fn >= 4:  # binary gates read operand b
                b = genes[base + 2]
                if b >= n:
                    stack.append(b - n)
        active.sort()

        vals = self.base_vals.copy()
        mask = self.mask
        costs = self.costs
        total_area = 0.0
        for c in active:
            base = 3 * c
            fn = genes[base]
            if fn >= 4:
                a = vals[genes[base + 1]]
                b = vals[genes[base + 2]]
                if fn == 4:
                    v = a & b
                elif fn == 5:
                    v = a | b
                elif fn == 6:
                    v = a ^ b
                elif fn == 7:
                    v = (a & b) ^ mask
                elif fn == 8:
                    v = (a | b) ^ mask
                else:
                    v = (a ^ b) ^ mask
            elif fn == 3:
                v = vals[genes[base + 1]] ^ mask
            elif fn == 2:
                v = vals[genes[base + 1]]
            elif fn == 1:
                v = mask
            else:
                v = 0
            vals[n + c] = v
            total_area += costs[fn]

        out_rows = [vals[g] for g in out_genes]
        diff = bits.packed_abs_diff(out_rows, self.exact_rows, mask)
        if self.is_mae:
            err = bits.weighted_popcount(diff) / self.total
        else:
            err = bits.greedy_max_value(diff, mask)
        return total_area if err <= self.tau else math.inf


class _DiagramScorer:
    """Model-counting fallback for widths beyond enumeration."""

    def __init__(self, seed_netlist: Netlist, geometry: dict, config: CgpSearchConfig):
        self.seed_netlist = seed_netlist
        self.geometry = geometry
        self.config = config

    def score(self, genes: list[int]) -> float:
        genotype = CgpGenotype(genes=tuple(genes), **self.geometry)
        candidate = decode(genotype)
        report = eval_bdd(candidate, self.seed_netlist)
        err = report.mae if self.config.metric == "MAE" else report.wcae
        if err > self.config.tau:
            return math.inf
        return area(candidate, self.config.area_table)


def cgp_search(seed_netlist: Netlist, config: CgpSearchConfig) -> CgpSearchResult:
    """Evolve an approximation of the seed circuit's function.

    Deterministic for a given (seed netlist, config): every offspring
    draws from its own stream derived from (config.seed, iteration,
    child index).  The returned metrics are re-certified with the public
    evaluator on the decoded result, never taken from the hot loop.
    """
    columns, levels_back = _resolve_grid(seed_netlist, config)
    parent_genotype = encode(seed_netlist, columns, levels_back)
    geometry = {
        "input_count": parent_genotype.input_count,
        "output_count": parent_genotype.output_count,
        "columns": columns,
        "levels_back": levels_back,
    }
    n = seed_netlist.input_count
    exhaustive = config.evaluator == "EXHAUSTIVE" or (
        config.evaluator == "AUTO" and n <= EXHAUSTIVE_INPUT_LIMIT
    )
    if config.evaluator == "EXHAUSTIVE" and n > EXHAUSTIVE_INPUT_LIMIT:
        raise ValidationError(
            f"exhaustive scoring is limited to {EXHAUSTIVE_INPUT_LIMIT} inputs"
        )
    scorer = (
        _PackedScorer(seed_netlist, columns, config)
        if exhaustive
        else _DiagramScorer(seed_netlist, geometry, config)
    )

    parent = list(parent_genotype.genes)
    parent_fit = scorer.score(parent)
    evaluations = 1
    iterations = 0
    deadline = (
        time.monotonic() + config.time_limit_s if config.time_limit_s is not None else None
    )

    while True:
        if config.max_iterations is not None and iterations >= config.max_iterations:
            break
        if deadline is not None and time.monotonic() >= deadline:
            break
        iterations += 1
        best_child: list[int] | None = None
        best_fit = math.inf
        for k in range(config.offspring):
            child = parent.copy()
            rng = random.Random(derive_seed(config.seed, "offspring", iterations, k))
            mutate_genes(child, n, columns, levels_back, config.gene_mutations, rng)
            fit = scorer.score(child)
            evaluations += 1
            if fit < best_fit:
                best_child, best_fit = child, fit
        # Equal fitness promotes the child: neutral drift.
        if best_child is not None and best_fit <= parent_fit:
            parent, parent_fit = best_child, best_fit

    final_genotype = CgpGenotype(genes=tuple(parent), **geometry)
    netlist = decode(final_genotype, name=f"{seed_netlist.name}_approx")
    report = (
        eval_exhaustive(netlist, seed_netlist)
        if exhaustive
        else eval_bdd(netlist, seed_netlist)
    )
    final_area = area(netlist, config.area_table)
    err = report.mae if config.metric == "MAE" else report.wcae
    if err > config.tau:
        raise AssertionError(
            "search returned an infeasible circuit; scorer and evaluator disagree"
        )
    if parent_fit != math.inf and final_area != parent_fit:
        raise AssertionError("area bookkeeping diverged between scorer and decode")
    logger.debug(
        "search n=%d metric=%s tau=%g: area %.1f after %d iterations",
        n,
        config.metric,
        config.tau,
        final_area,
        iterations,
    )
    return CgpSearchResult(
        netlist=netlist,
        area=final_area,
        mae=report.mae,
        wcae=report.wcae,
        iterations=iterations,
        evaluations=evaluations,
        seed=config.seed,
        metric=config.metric,
        tau=config.tau,
        evaluator=report.evaluator,
    )


def tau_schedule(n: int, points: int, metric: str) -> list[float]:
    """Geometric ladder of error budgets for one popcount size.

    Mean-error budgets sweep 0.1 to half the output range; worst-case
    budgets sweep 1 to the same ceiling.  Endpoints are included.
    """
    if metric not in METRICS:
        raise ValidationError(f"metric must be one of {METRICS}")
    if n < 2:
        raise ValidationError("schedules start at two inputs")
    if points < 2:
        raise ValidationError("a schedule needs at least two points")
    exponent = (n - 1).bit_length()  # ceil(log2(n))
    hi = 0.5 * (1 << exponent)
    lo = 0.1 if metric == "MAE" else 1.0
    return [float(v) for v in np.geomspace(lo, hi, points)]


def build_pc_library(
    sizes: list[int],
    points: int = 10,
    budget_iterations: int | None = 100_000,
    budget_seconds: float | None = None,
    master_seed: int = 0,
    offspring: int = 4,
    gene_mutations: int = 5,
    area_table: AreaTable = DEFAULT_AREA,
    evaluator: str = "AUTO",
    threads: int = 1,
) -> dict[int, list[PcLibraryEntry]]:
    """Exact, truncated, and evolved popcounts for every requested size.

    Every evolved entry runs under its own derived seed, so the library
    is reproducible from (sizes, schedule, budgets, master_seed) alone
    and independent of thread count.
    """
    sizes = sorted(set(int(s) for s in sizes))
    if not sizes or sizes[0] < 1:
        raise ValidationError("sizes must be positive")

    def run_search(n: int, exact: Netlist, metric: str, idx: int, tau: float) -> PcLibraryEntry:
        seed = derive_seed(master_seed, "pc", n, metric, idx)
        config = CgpSearchConfig(
            metric=metric,
            tau=tau,
            max_iterations=budget_iterations,
            time_limit_s=budget_seconds,
            offspring=offspring,
            gene_mutations=gene_mutations,
            seed=seed,
            evaluator=evaluator,
            area_table=area_table,
        )
        result = cgp_search(exact, config)
        return PcLibraryEntry(
            size=n,
            provenance="EVOLVED",
            netlist=result.netlist,
            area=result.area,
            mae=result.mae,
            wcae=result.wcae,
            constraint_metric=metric,
            constraint_tau=tau,
            rng_seed=seed,
            iterations=result.iterations,
        )

    library: dict[int, list[PcLibraryEntry]] = {}
    for n in sizes:
        exact = build_exact_pc(n)
        entries = [
            PcLibraryEntry(
                size=n,
                provenance="EXACT",
                netlist=exact,
                area=area(exact, area_table),
                mae=0.0,
                wcae=0,
            )
        ]
        width = exact.output_count
        for cut in range(1, width):
            trunc = build_truncated_pc(n, cut)
            report = _certify(trunc, exact)
            entries.append(
                PcLibraryEntry(
                    size=n,
                    provenance="TRUNCATED",
                    netlist=trunc,
                    area=area(trunc, area_table),
                    mae=report.mae,
                    wcae=report.wcae,
                )
            )
        jobs = []
        if n >= 2:
            for metric in METRICS:
                for idx, tau in enumerate(tau_schedule(n, points, metric)):
                    jobs.append((metric, idx, tau))
        if threads > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(run_search, n, exact, metric, idx, tau)
                    for metric, idx, tau in jobs
                ]
                entries.extend(f.result() for f in futures)
        else:
            entries.extend(run_search(n, exact, metric, idx, tau) for metric, idx, tau in jobs)
        library[n] = mark_pareto(entries)
        logger.info("library size %d: %d entries", n, len(entries))
    return library


def _certify(approx: Netlist, exact: Netlist) -> ArithmeticErrorReport:
    if exact.input_count <= EXHAUSTIVE_INPUT_LIMIT:
        return eval_exhaustive(approx, exact)
    return eval_bdd(approx, exact)
