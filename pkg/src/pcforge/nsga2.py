"""Integer-chromosome NSGA-II over per-neuron component choices.

A chromosome assigns one library entry to every neuron slot: hidden
compare circuits first, then one counter per class.  Gene 0 always means
the exact component.  The two objectives are the summed component area
(minimized) and classifier accuracy on the fitness split (maximized).

The algorithm is the standard elitist scheme: fast non-dominated
sorting, crowding distance, binary tournaments, uniform crossover,
random-reset mutation, and mu+lambda environmental selection.  All ties
break deterministically, so a run is a pure function of its seed.
"""

from __future__ import annotations

import logging
import math
import random
from dataclasses import dataclass, replace

from .circuit import DEFAULT_AREA, AreaTable, Netlist, area
from .exceptions import ValidationError
from .library import PccLibraryEntry, PcLibraryEntry, pc_slot_options
from .tnn import Dataset, TnnModel, accuracy, generate_netlist, netlist_predict, neuron_requirements
from .util import derive_seed

logger = logging.getLogger(__name__)

FITNESS_SPLITS = ("TRAIN", "TEST")


@dataclass(frozen=True)
class Nsga2Config:
    population_size: int = 100
    generations: int = 200
    crossover_rate: float = 0.9
    mutation_rate: float | None = None  # None: one expected reset per chromosome
    rng_seed: int = 0
    accuracy_split_for_fitness: str = "TRAIN"

    def __post_init__(self):
        if self.population_size < 2 or self.population_size % 2:
            raise ValidationError("population_size must be even and at least 2")
        if self.generations < 1:
            raise ValidationError("generations must be at least 1")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise ValidationError("crossover_rate must lie in [0, 1]")
        if self.mutation_rate is not None and not 0.0 <= self.mutation_rate <= 1.0:
            raise ValidationError("mutation_rate must lie in [0, 1]")
        if self.accuracy_split_for_fitness not in FITNESS_SPLITS:
            raise ValidationError(f"fitness split must be one of {FITNESS_SPLITS}")


@dataclass(frozen=True)
class FrontEntry:
    chromosome: tuple[int, ...]
    area_proxy: float
    synthesized_area: float
    accuracy_train: float
    accuracy_test: float | None
    rank: int = -1
    crowding: float = 0.0

    def to_dict(self) -> dict:
        return {
            "chromosome": list(self.chromosome),
            "area_proxy": self.area_proxy,
            "synthesized_area": self.synthesized_area,
            "accuracy_train": self.accuracy_train,
            "accuracy_test": self.accuracy_test,
            "rank": self.rank,
            "crowding": self.crowding,
        }


@dataclass(frozen=True)
class TracePoint:
    generation: int
    evaluations: int
    best_accuracy: float
    min_area_proxy: float
    hypervolume: float

    def to_dict(self) -> dict:
        return {
            "generation": self.generation,
            "evaluations": self.evaluations,
            "best_accuracy": self.best_accuracy,
            "min_area_proxy": self.min_area_proxy,
            "hypervolume": self.hypervolume,
        }


class IntegrationContext:
    """Slot options, dataset, and the memoized chromosome evaluator."""

    def __init__(
        self,
        model: TnnModel,
        hidden_options: list[list[PccLibraryEntry]],
        class_options: list[list[PcLibraryEntry]],
        dataset: Dataset,
        area_table: AreaTable = DEFAULT_AREA,
    ):
        reqs = neuron_requirements(model)
        if len(hidden_options) != model.hidden_count:
            raise ValidationError("one option list per hidden neuron required")
        if len(class_options) != model.class_count:
            raise ValidationError("one option list per class required")
        for j, options in enumerate(hidden_options):
            if not options:
                raise ValidationError(f"hidden slot {j} has no options")
            head = options[0]
            if head.pos_provenance != "EXACT" or head.neg_provenance != "EXACT":
                raise ValidationError(f"hidden slot {j}: option 0 must be the exact pairing")
            if (head.n_pos, head.n_neg) != reqs.hidden_pairs[j]:
                raise ValidationError(f"hidden slot {j}: options sized for the wrong neuron")
        for c, options in enumerate(class_options):
            if not options:
                raise ValidationError(f"class slot {c} has no options")
            if options[0].provenance != "EXACT":
                raise ValidationError(f"class slot {c}: option 0 must be exact")
            if options[0].size != reqs.class_width:
                raise ValidationError(f"class slot {c}: options sized for the wrong width")
        self.model = model
        self.dataset = dataset
        self.hidden_options = hidden_options
        self.class_options = class_options
        self.area_table = area_table
        self.builds = 0
        self._memo: dict[tuple[int, ...], FrontEntry] = {}

    @property
    def slot_bounds(self) -> list[int]:
        return [len(o) for o in self.hidden_options] + [len(o) for o in self.class_options]

    @property
    def slot_count(self) -> int:
        return len(self.hidden_options) + len(self.class_options)

    def design_space(self) -> int:
        total = 1
        for bound in self.slot_bounds:
            total *= bound
        return total

    def exact_chromosome(self) -> tuple[int, ...]:
        return (0,) * self.slot_count

    def _components(
        self, chromosome: tuple[int, ...]
    ) -> tuple[list[PccLibraryEntry], list[PcLibraryEntry]]:
        bounds = self.slot_bounds
        if len(chromosome) != len(bounds):
            raise ValidationError("chromosome length must match the slot count")
        for i, (gene, bound) in enumerate(zip(chromosome, bounds)):
            if not 0 <= gene < bound:
                raise ValidationError(f"gene {i} = {gene} outside its {bound} options")
        h = len(self.hidden_options)
        hidden = [self.hidden_options[j][g] for j, g in enumerate(chromosome[:h])]
        classes = [self.class_options[c][g] for c, g in enumerate(chromosome[h:])]
        return hidden, classes

    def realize(self, chromosome: tuple[int, ...]) -> Netlist:
        """Build the full netlist for one chromosome."""
        hidden, classes = self._components(tuple(chromosome))
        tag = "-".join(str(g) for g in chromosome)
        return generate_netlist(
            self.model,
            [e.netlist for e in hidden],
            [e.netlist for e in classes],
            name=f"{self.model.name}_{tag}",
        )

    def evaluate(self, chromosome: tuple[int, ...]) -> FrontEntry:
        key = tuple(int(g) for g in chromosome)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        hidden, classes = self._components(key)
        netlist = self.realize(key)
        self.builds += 1
        proxy = sum(e.synthesized_area for e in hidden) + sum(e.area for e in classes)
        synthesized = area(netlist, self.area_table)
        train_bits, train_labels = self.dataset.split("TRAIN")
        acc_train = accuracy(netlist_predict(netlist, train_bits), train_labels)
        if len(self.dataset.test_indices):
            test_bits, test_labels = self.dataset.split("TEST")
            acc_test = accuracy(netlist_predict(netlist, test_bits), test_labels)
        else:
            acc_test = None
        entry = FrontEntry(
            chromosome=key,
            area_proxy=proxy,
            synthesized_area=synthesized,
            accuracy_train=acc_train,
            accuracy_test=acc_test,
        )
        self._memo[key] = entry
        return entry


def build_context(
    model: TnnModel,
    pc_library: dict[int, list[PcLibraryEntry]],
    pcc_options: dict[tuple[int, int], list[PccLibraryEntry]],
    dataset: Dataset,
    area_table: AreaTable = DEFAULT_AREA,
) -> IntegrationContext:
    """Wire saved libraries to the model's neuron slots.

    ``pcc_options`` values must already be slot-ordered (exact pairing
    first); the class counter options are derived here from the raw
    size-keyed popcount library.
    """
    reqs = neuron_requirements(model)
    hidden_options = []
    for pair in reqs.hidden_pairs:
        if pair not in pcc_options:
            raise ValidationError(f"compare library missing the {pair} slot")
        hidden_options.append(pcc_options[pair])
    if reqs.class_width not in pc_library:
        raise ValidationError(
            f"popcount library missing width {reqs.class_width} for class counters"
        )
    class_opts = pc_slot_options(pc_library[reqs.class_width])
    return IntegrationContext(
        model,
        hidden_options,
        [class_opts] * model.class_count,
        dataset,
        area_table=area_table,
    )


def evaluate_individual(context: IntegrationContext, chromosome) -> FrontEntry:
    return context.evaluate(tuple(chromosome))


def fitness_accuracy(entry: FrontEntry, split: str) -> float:
    if split == "TRAIN":
        return entry.accuracy_train
    if entry.accuracy_test is None:
        raise ValidationError("no test split available for fitness")
    return entry.accuracy_test


def _dominates(a: tuple[float, float], b: tuple[float, float]) -> bool:
    """Objectives are (area, accuracy): minimize the first, maximize the second."""
    return (
        a[0] <= b[0]
        and a[1] >= b[1]
        and (a[0] < b[0] or a[1] > b[1])
    )


def nondominated_sort(objectives: list[tuple[float, float]]) -> list[list[int]]:
    """Fast non-dominated sorting; returns fronts of indices, rank order."""
    n = len(objectives)
    dominated: list[list[int]] = [[] for _ in range(n)]
    counts = [0] * n
    fronts: list[list[int]] = [[]]
    for i in range(n):
        for j in range(i + 1, n):
            if _dominates(objectives[i], objectives[j]):
                dominated[i].append(j)
                counts[j] += 1
            elif _dominates(objectives[j], objectives[i]):
                dominated[j].append(i)
                counts[i] += 1
    for i in range(n):
        if counts[i] == 0:
            fronts[0].append(i)
    while fronts[-1]:
        nxt = []
        for i in fronts[-1]:
            for j in dominated[i]:
                counts[j] -= 1
                if counts[j] == 0:
                    nxt.append(j)
        fronts.append(nxt)
    fronts.pop()
    if not fronts or not fronts[0]:
        raise ValidationError("cannot sort an empty set")
    return fronts


def crowding_distance(objectives: list[tuple[float, float]]) -> list[float]:
    """Per-point crowding within one front; boundaries get infinity."""
    n = len(objectives)
    if n <= 2:
        return [math.inf] * n
    distance = [0.0] * n
    for axis in range(2):
        order = sorted(range(n), key=lambda i: objectives[i][axis])
        lo = objectives[order[0]][axis]
        hi = objectives[order[-1]][axis]
        distance[order[0]] = math.inf
        distance[order[-1]] = math.inf
        if hi == lo:
            continue
        for k in range(1, n - 1):
            i = order[k]
            if distance[i] != math.inf:
                gap = objectives[order[k + 1]][axis] - objectives[order[k - 1]][axis]
                distance[i] += gap / (hi - lo)
    return distance


def crossover(
    parent_a: tuple[int, ...],
    parent_b: tuple[int, ...],
    rng: random.Random,
    rate: float = 0.9,
) -> tuple[tuple[int, ...], tuple[int, ...]]:
    """Uniform crossover: each gene swaps with probability one half."""
    if len(parent_a) != len(parent_b):
        raise ValidationError("parents must have equal length")
    if rng.random() >= rate:
        return parent_a, parent_b
    a, b = list(parent_a), list(parent_b)
    for i in range(len(a)):
        if rng.random() < 0.5:
            a[i], b[i] = b[i], a[i]
    return tuple(a), tuple(b)


def mutate_chromosome(
    chromosome: tuple[int, ...],
    bounds: list[int],
    rng: random.Random,
    rate: float | None = None,
) -> tuple[int, ...]:
    """Per-gene random reset within the slot's option count."""
    if len(chromosome) != len(bounds):
        raise ValidationError("chromosome length must match the slot count")
    if rate is None:
        rate = 1.0 / len(chromosome)
    genes = list(chromosome)
    for i, bound in enumerate(bounds):
        if rng.random() < rate:
            genes[i] = rng.randrange(bound)
    return tuple(genes)


def hypervolume_2d(points: list[tuple[float, float]], ref_area: float) -> float:
    """Dominated area/accuracy rectangle volume against (ref_area, 0)."""
    best_acc = -math.inf
    front = []
    for a, c in sorted(set(points), key=lambda p: (p[0], -p[1])):
        if c > best_acc:
            front.append((a, c))
            best_acc = c
    volume = 0.0
    prev = 0.0
    for a, c in front:
        if a < ref_area and c > prev:
            volume += (ref_area - a) * (c - prev)
            prev = c
    return volume


@dataclass(frozen=True)
class Nsga2Result:
    front: tuple[FrontEntry, ...]
    trace: tuple[TracePoint, ...]
    evaluations: int
    exact_entry: FrontEntry


def _selection_key(entry: FrontEntry) -> tuple:
    # Deterministic total order: rank, then crowded spread, then the
    # documented tie-breaks (smaller synthesized area, then genes).
    return (entry.rank, -entry.crowding, entry.synthesized_area, entry.chromosome)


def _rank_population(
    entries: list[FrontEntry], split: str
) -> list[FrontEntry]:
    objectives = [(e.area_proxy, fitness_accuracy(e, split)) for e in entries]
    fronts = nondominated_sort(objectives)
    ranked: list[FrontEntry] = []
    for rank, front in enumerate(fronts):
        dist = crowding_distance([objectives[i] for i in front])
        members = [
            replace(entries[i], rank=rank, crowding=d) for i, d in zip(front, dist)
        ]
        members.sort(key=_selection_key)
        ranked.extend(members)
    return ranked


def nsga2_run(context: IntegrationContext, config: Nsga2Config) -> Nsga2Result:
    """Full optimization loop; returns the final rank-0 front and trace.

    The initial population is the all-exact individual plus random
    chromosomes.  Selection is elitist, so the exact individual's
    accuracy can only be displaced by entries that dominate it.
    """
    split = config.accuracy_split_for_fitness
    bounds = context.slot_bounds
    exact_entry = context.evaluate(context.exact_chromosome())
    ref_area = exact_entry.area_proxy * 1.1

    init_rng = random.Random(derive_seed(config.rng_seed, "init"))
    chromosomes = [context.exact_chromosome()]
    while len(chromosomes) < config.population_size:
        chromosomes.append(tuple(init_rng.randrange(b) for b in bounds))
    evaluations = len(chromosomes)
    population = _rank_population([context.evaluate(c) for c in chromosomes], split)

    def trace_point(generation: int) -> TracePoint:
        points = [
            (e.area_proxy, fitness_accuracy(e, split))
            for e in population
            if e.rank == 0
        ]
        return TracePoint(
            generation=generation,
            evaluations=evaluations,
            best_accuracy=max(fitness_accuracy(e, split) for e in population),
            min_area_proxy=min(e.area_proxy for e in population),
            hypervolume=hypervolume_2d(points, ref_area),
        )

    trace = [trace_point(0)]
    mutation_rate = (
        config.mutation_rate if config.mutation_rate is not None else 1.0 / len(bounds)
    )

    for generation in range(1, config.generations + 1):
        rng = random.Random(derive_seed(config.rng_seed, "gen", generation))

        def tournament() -> FrontEntry:
            a = population[rng.randrange(len(population))]
            b = population[rng.randrange(len(population))]
            return a if _selection_key(a) <= _selection_key(b) else b

        children: list[FrontEntry] = []
        for _ in range(config.population_size // 2):
            pa, pb = tournament().chromosome, tournament().chromosome
            ca, cb = crossover(pa, pb, rng, config.crossover_rate)
            for child in (
                mutate_chromosome(ca, bounds, rng, mutation_rate),
                mutate_chromosome(cb, bounds, rng, mutation_rate),
            ):
                children.append(context.evaluate(child))
                evaluations += 1
        combined = _rank_population(list(population) + children, split)
        population = combined[: config.population_size]
        # The cut can split a front; re-rank so stored ranks and
        # crowding describe the surviving population, not the union.
        population = _rank_population(population, split)
        trace.append(trace_point(generation))

    final_front: dict[tuple[int, ...], FrontEntry] = {}
    for entry in population:
        if entry.rank == 0 and entry.chromosome not in final_front:
            final_front[entry.chromosome] = entry
    front = sorted(
        final_front.values(),
        key=lambda e: (e.area_proxy, -fitness_accuracy(e, split), e.chromosome),
    )
    logger.info(
        "search finished: %d evaluations, %d unique designs, front size %d",
        evaluations,
        context.builds,
        len(front),
    )
    return Nsga2Result(
        front=tuple(front),
        trace=tuple(trace),
        evaluations=evaluations,
        exact_entry=exact_entry,
    )


def exhaustive_front(context: IntegrationContext, split: str = "TRAIN") -> list[FrontEntry]:
    """Brute-force Pareto set over the whole design space.

    Only sensible for small spaces; guards at one hundred thousand.
    """
    total = context.design_space()
    if total > 100_000:
        raise ValidationError(f"design space of {total} is too large to enumerate")
    bounds = context.slot_bounds
    chromosomes = [()]
    for bound in bounds:
        chromosomes = [c + (g,) for c in chromosomes for g in range(bound)]
    entries = [context.evaluate(c) for c in chromosomes]
    objectives = [(e.area_proxy, fitness_accuracy(e, split)) for e in entries]
    fronts = nondominated_sort(objectives)
    dist = crowding_distance([objectives[i] for i in fronts[0]])
    front = [replace(entries[i], rank=0, crowding=d) for i, d in zip(fronts[0], dist)]
    front.sort(key=lambda e: (e.area_proxy, -fitness_accuracy(e, split), e.chromosome))
    return front
