"""End-to-end pipeline: counter library, compare library, integration.

A single JSON config drives all three phases.  Every stage writes a
content-addressed checkpoint keyed by a fingerprint of everything that
feeds it (parameters, derived stage seed, upstream fingerprints, input
digests), so interrupted runs resume and finished stages are reused.
Rerunning with the same config and seed reproduces every artifact byte
for byte; nothing in the outputs depends on wall-clock time, absolute
paths, or thread count.
"""

from __future__ import annotations

import logging
import os
from concurrent.futures import ThreadPoolExecutor
from contextlib import contextmanager
from dataclasses import dataclass

from .circuit import DEFAULT_AREA
from .exceptions import ConfigError, ForgeError
from .library import (
    PccLibraryEntry,
    PcLibraryEntry,
    load_pc_library,
    load_pcc_library,
    save_pc_library,
    save_pcc_library,
)
from .nsga2 import (
    FrontEntry,
    IntegrationContext,
    Nsga2Config,
    TracePoint,
    build_context,
    nsga2_run,
)
from .pcc import enumerate_pcc_candidates, pcc_slot_options
from .search import build_pc_library
from .tnn import TnnModel, ingest, neuron_requirements, validate_model
from .util import canonical_dumps, derive_seed, read_json, sha256_hex, write_json_atomic, write_text_atomic
from .verilog import to_verilog

logger = logging.getLogger(__name__)

REPORT_VERSION = 1
FRONT_FILE = "front.json"
TRACE_FILE = "trace.csv"
REPORT_FILE = "report.json"


def _require_keys(raw: dict, allowed: dict, where: str) -> dict:
    unknown = set(raw) - set(allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {sorted(unknown)}")
    merged = dict(allowed)
    merged.update(raw)
    missing = [k for k, v in merged.items() if v is _REQUIRED]
    if missing:
        raise ConfigError(f"missing {where} keys: {sorted(missing)}")
    return merged


_REQUIRED = object()


@dataclass(frozen=True)
class PipelineConfig:
    """Parsed pipeline configuration.

    Path fields keep the strings from the config file; they resolve
    against ``base_dir`` (the config file's directory) at use so that
    reports and fingerprints never embed machine-specific paths.
    """

    dataset_path: str
    label_column: str
    split_fraction: float
    dataset_seed: int
    model_path: str
    pc_tau_points: int
    pc_budget_iterations: int
    pc_offspring: int
    pc_gene_mutations: int
    pcc_samples: int
    pcc_sample_space: str
    pcc_max_options: int | None
    nsga_population: int
    nsga_generations: int
    nsga_crossover_rate: float
    nsga_mutation_rate: float | None
    nsga_fitness_split: str
    seed: int
    output_dir: str
    base_dir: str = "."

    @classmethod
    def from_dict(cls, raw: dict, base_dir: str = ".") -> "PipelineConfig":
        if not isinstance(raw, dict):
            raise ConfigError("pipeline config must be a JSON object")
        top = _require_keys(
            raw,
            {
                "dataset": _REQUIRED,
                "model_path": _REQUIRED,
                "pc": {},
                "pcc": {},
                "nsga": {},
                "seed": 0,
                "output_dir": _REQUIRED,
            },
            "config",
        )
        dataset = _require_keys(
            top["dataset"],
            {"path": _REQUIRED, "label_column": _REQUIRED, "split_fraction": 0.7, "seed": 0},
            "dataset",
        )
        pc = _require_keys(
            top["pc"],
            {"tau_points": 10, "budget_iterations": 100_000, "offspring": 4, "gene_mutations": 5},
            "pc",
        )
        pcc = _require_keys(
            top["pcc"],
            {"samples": 1_000_000, "sample_space": "VECTORS", "max_options": None},
            "pcc",
        )
        nsga = _require_keys(
            top["nsga"],
            {
                "population": 100,
                "generations": 200,
                "crossover_rate": 0.9,
                "mutation_rate": None,
                "fitness_split": "TRAIN",
            },
            "nsga",
        )
        return cls(
            dataset_path=str(dataset["path"]),
            label_column=str(dataset["label_column"]),
            split_fraction=float(dataset["split_fraction"]),
            dataset_seed=int(dataset["seed"]),
            model_path=str(top["model_path"]),
            pc_tau_points=int(pc["tau_points"]),
            pc_budget_iterations=int(pc["budget_iterations"]),
            pc_offspring=int(pc["offspring"]),
            pc_gene_mutations=int(pc["gene_mutations"]),
            pcc_samples=int(pcc["samples"]),
            pcc_sample_space=str(pcc["sample_space"]),
            pcc_max_options=None if pcc["max_options"] is None else int(pcc["max_options"]),
            nsga_population=int(nsga["population"]),
            nsga_generations=int(nsga["generations"]),
            nsga_crossover_rate=float(nsga["crossover_rate"]),
            nsga_mutation_rate=None if nsga["mutation_rate"] is None else float(nsga["mutation_rate"]),
            nsga_fitness_split=str(nsga["fitness_split"]),
            seed=int(top["seed"]),
            output_dir=str(top["output_dir"]),
            base_dir=base_dir,
        )

    @classmethod
    def load(cls, path: str) -> "PipelineConfig":
        return cls.from_dict(read_json(path), base_dir=os.path.dirname(os.path.abspath(path)))

    def to_dict(self) -> dict:
        """Nested schema with the original (unresolved) path strings."""
        return {
            "dataset": {
                "path": self.dataset_path,
                "label_column": self.label_column,
                "split_fraction": self.split_fraction,
                "seed": self.dataset_seed,
            },
            "model_path": self.model_path,
            "pc": {
                "tau_points": self.pc_tau_points,
                "budget_iterations": self.pc_budget_iterations,
                "offspring": self.pc_offspring,
                "gene_mutations": self.pc_gene_mutations,
            },
            "pcc": {
                "samples": self.pcc_samples,
                "sample_space": self.pcc_sample_space,
                "max_options": self.pcc_max_options,
            },
            "nsga": {
                "population": self.nsga_population,
                "generations": self.nsga_generations,
                "crossover_rate": self.nsga_crossover_rate,
                "mutation_rate": self.nsga_mutation_rate,
                "fitness_split": self.nsga_fitness_split,
            },
            "seed": self.seed,
            "output_dir": self.output_dir,
        }

    def resolve(self, path: str) -> str:
        return os.path.normpath(os.path.join(self.base_dir, path))


@contextmanager
def _stage(name: str):
    """Re-raise stage failures with the stage named, same error class."""
    try:
        yield
    except ForgeError as exc:
        raise type(exc)(f"stage {name!r}: {exc}") from exc


def _fingerprint(payload: dict) -> str:
    return sha256_hex(canonical_dumps(payload))


def build_pcc_options(
    model: TnnModel,
    pc_library: dict[int, list[PcLibraryEntry]],
    samples: int,
    sample_space: str = "VECTORS",
    max_options: int | None = None,
    master_seed: int = 0,
    threads: int = 1,
    area_table=DEFAULT_AREA,
) -> dict[tuple[int, int], list[PccLibraryEntry]]:
    """Phase 2 for every distinct hidden (n_pos, n_neg) pair."""
    pairs = sorted(set(neuron_requirements(model).hidden_pairs))

    def one(pair: tuple[int, int]) -> tuple[tuple[int, int], list[PccLibraryEntry]]:
        p, q = pair
        if p not in pc_library or q not in pc_library:
            raise ConfigError(f"counter library lacks sizes for hidden pair {pair}")
        pos, neg = pc_library[p], pc_library[q]
        candidates = enumerate_pcc_candidates(
            pos,
            neg,
            samples=samples,
            seed=derive_seed(master_seed, "pair", p, q),
            sample_space=sample_space,
        )
        options = pcc_slot_options(
            candidates, pos, neg, max_per_size=max_options, area_table=area_table
        )
        return pair, options

    if threads > 1 and len(pairs) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return dict(pool.map(one, pairs))
    return dict(one(pair) for pair in pairs)


def _load_checkpoint(loader, directory: str, fingerprint: str, what: str):
    if not os.path.isdir(directory):
        return None
    try:
        payload, stored = loader(directory)
    except (ForgeError, OSError, KeyError, ValueError) as exc:
        logger.warning("ignoring unreadable %s checkpoint in %s: %s", what, directory, exc)
        return None
    if stored != fingerprint:
        logger.info("%s checkpoint in %s is stale; rebuilding", what, directory)
        return None
    logger.info("reusing %s checkpoint from %s", what, directory)
    return payload


def _front_to_json(
    fingerprint: str,
    exact: FrontEntry,
    front: tuple[FrontEntry, ...],
    trace: tuple[TracePoint, ...],
    evaluations: int,
) -> dict:
    records = []
    for i, entry in enumerate(front):
        record = entry.to_dict()
        record["netlist_file"] = f"netlists/entry_{i:03d}.v"
        records.append(record)
    return {
        "version": REPORT_VERSION,
        "fingerprint": fingerprint,
        "exact": exact.to_dict(),
        "entries": records,
        "trace": [t.to_dict() for t in trace],
        "evaluations": evaluations,
    }


def _front_from_json(raw: dict):
    def entry(rec: dict) -> FrontEntry:
        return FrontEntry(
            chromosome=tuple(rec["chromosome"]),
            area_proxy=float(rec["area_proxy"]),
            synthesized_area=float(rec["synthesized_area"]),
            accuracy_train=float(rec["accuracy_train"]),
            accuracy_test=None if rec["accuracy_test"] is None else float(rec["accuracy_test"]),
            rank=int(rec["rank"]),
            crowding=float(rec["crowding"]),
        )

    exact = entry(raw["exact"])
    front = tuple(entry(rec) for rec in raw["entries"])
    trace = tuple(
        TracePoint(
            generation=int(t["generation"]),
            evaluations=int(t["evaluations"]),
            best_accuracy=float(t["best_accuracy"]),
            min_area_proxy=float(t["min_area_proxy"]),
            hypervolume=float(t["hypervolume"]),
        )
        for t in raw["trace"]
    )
    return exact, front, trace, int(raw["evaluations"])


def _trace_csv(trace) -> str:
    lines = ["generation,evaluations,best_accuracy,min_area_proxy,hypervolume"]
    for t in trace:
        lines.append(
            f"{t.generation},{t.evaluations},{t.best_accuracy!r},"
            f"{t.min_area_proxy!r},{t.hypervolume!r}"
        )
    return "\n".join(lines) + "\n"


def write_front_artifacts(
    out_dir: str,
    context: IntegrationContext,
    fingerprint: str,
    exact: FrontEntry,
    front: tuple[FrontEntry, ...],
    trace: tuple[TracePoint, ...],
    evaluations: int,
) -> dict:
    """Persist front JSON, trace CSV, and per-entry Verilog; returns the JSON."""
    os.makedirs(os.path.join(out_dir, "netlists"), exist_ok=True)
    payload = _front_to_json(fingerprint, exact, front, trace, evaluations)
    write_json_atomic(os.path.join(out_dir, FRONT_FILE), payload)
    write_text_atomic(os.path.join(out_dir, TRACE_FILE), _trace_csv(trace))
    for record, entry in zip(payload["entries"], front):
        netlist = context.realize(entry.chromosome)
        write_text_atomic(
            os.path.join(out_dir, record["netlist_file"]), to_verilog(netlist)
        )
    return payload


def report_summary(front, exact) -> dict:
    """Area reductions at iso-accuracy and at a five-point drop.

    Accepts FrontEntry objects or their JSON dict form, so the summary
    can be recomputed offline from a persisted front file.
    """
    def record(e) -> dict:
        return e.to_dict() if isinstance(e, FrontEntry) else dict(e)

    def accuracy_of(rec: dict) -> float:
        if rec.get("accuracy_test") is not None:
            return rec["accuracy_test"]
        return rec["accuracy_train"]

    records = [record(e) for e in front]
    if not records:
        raise ConfigError("cannot summarize an empty front")
    baseline = record(exact)
    exact_area = float(baseline["synthesized_area"])
    exact_accuracy = accuracy_of(baseline)

    def best(min_accuracy: float) -> dict | None:
        pool = [r for r in records if accuracy_of(r) >= min_accuracy]
        if not pool:
            return None
        chosen = min(
            pool,
            key=lambda r: (r["synthesized_area"], r["area_proxy"], tuple(r["chromosome"])),
        )
        reduction = 0.0
        if exact_area > 0:
            reduction = max(0.0, 1.0 - chosen["synthesized_area"] / exact_area)
        return {
            "chromosome": list(chosen["chromosome"]),
            "synthesized_area": chosen["synthesized_area"],
            "accuracy": accuracy_of(chosen),
            "area_reduction": reduction,
        }

    return {
        "exact_synthesized_area": exact_area,
        "exact_accuracy": exact_accuracy,
        "iso_accuracy": best(exact_accuracy),
        "five_point_drop": best(exact_accuracy - 0.05),
    }


def run_pipeline(config: PipelineConfig, threads: int = 1) -> dict:
    """Execute all phases; returns the written report as a dict.

    Inputs are loaded and validated before any output path is touched,
    so a bad config leaves no partial artifact tree behind.
    """
    with _stage("load"):
        model_raw = read_json(config.resolve(config.model_path))
        model = TnnModel.from_dict(model_raw)
        validate_model(model, strict=True)
        csv_path = config.resolve(config.dataset_path)
        with open(csv_path, "rb") as fh:
            dataset_digest = sha256_hex(fh.read())
        dataset = ingest(
            csv_path,
            config.label_column,
            split_fraction=config.split_fraction,
            seed=config.dataset_seed,
        )
    model_digest = _fingerprint(model.to_dict())
    reqs = neuron_requirements(model)
    sizes = sorted({n for pair in reqs.hidden_pairs for n in pair} | {reqs.class_width})

    out_dir = config.resolve(config.output_dir)
    pc_dir = os.path.join(out_dir, "pc_lib")
    pcc_dir = os.path.join(out_dir, "pcc_lib")
    front_dir = os.path.join(out_dir, "front")
    os.makedirs(out_dir, exist_ok=True)

    pc_seed = derive_seed(config.seed, "pc")
    pc_fp = _fingerprint(
        {
            "stage": "pc",
            "sizes": sizes,
            "tau_points": config.pc_tau_points,
            "budget_iterations": config.pc_budget_iterations,
            "offspring": config.pc_offspring,
            "gene_mutations": config.pc_gene_mutations,
            "seed": pc_seed,
            "area": DEFAULT_AREA.to_dict(),
        }
    )
    with _stage("pc-library"):
        pc_library = _load_checkpoint(load_pc_library, pc_dir, pc_fp, "counter library")
        if pc_library is None:
            logger.info("phase 1: evolving counter libraries for widths %s", sizes)
            pc_library = build_pc_library(
                sizes,
                points=config.pc_tau_points,
                budget_iterations=config.pc_budget_iterations,
                master_seed=pc_seed,
                offspring=config.pc_offspring,
                gene_mutations=config.pc_gene_mutations,
                threads=threads,
            )
            save_pc_library(pc_library, pc_dir, fingerprint=pc_fp)

    pcc_seed = derive_seed(config.seed, "pcc")
    pcc_fp = _fingerprint(
        {
            "stage": "pcc",
            "upstream": pc_fp,
            "pairs": sorted(set(reqs.hidden_pairs)),
            "samples": config.pcc_samples,
            "sample_space": config.pcc_sample_space,
            "max_options": config.pcc_max_options,
            "seed": pcc_seed,
        }
    )
    with _stage("pcc-library"):
        pcc_options = _load_checkpoint(load_pcc_library, pcc_dir, pcc_fp, "compare library")
        if pcc_options is None:
            logger.info("phase 2: pairing counters for %d hidden slots", model.hidden_count)
            pcc_options = build_pcc_options(
                model,
                pc_library,
                samples=config.pcc_samples,
                sample_space=config.pcc_sample_space,
                max_options=config.pcc_max_options,
                master_seed=pcc_seed,
                threads=threads,
            )
            save_pcc_library(pcc_options, pcc_dir, fingerprint=pcc_fp)

    nsga_seed = derive_seed(config.seed, "nsga")
    front_fp = _fingerprint(
        {
            "stage": "front",
            "upstream": pcc_fp,
            "model": model_digest,
            "dataset": dataset_digest,
            "ingest": {
                "label_column": config.label_column,
                "split_fraction": config.split_fraction,
                "seed": config.dataset_seed,
            },
            "population": config.nsga_population,
            "generations": config.nsga_generations,
            "crossover_rate": config.nsga_crossover_rate,
            "mutation_rate": config.nsga_mutation_rate,
            "fitness_split": config.nsga_fitness_split,
            "seed": nsga_seed,
        }
    )
    with _stage("integrate"):
        context = build_context(model, pc_library, pcc_options, dataset)
        nsga_config = Nsga2Config(
            population_size=config.nsga_population,
            generations=config.nsga_generations,
            crossover_rate=config.nsga_crossover_rate,
            mutation_rate=config.nsga_mutation_rate,
            rng_seed=nsga_seed,
            accuracy_split_for_fitness=config.nsga_fitness_split,
        )
        front_payload = None
        if os.path.isfile(os.path.join(front_dir, FRONT_FILE)):
            try:
                raw = read_json(os.path.join(front_dir, FRONT_FILE))
            except (ForgeError, OSError, ValueError) as exc:
                logger.warning("ignoring unreadable front checkpoint: %s", exc)
                raw = None
            if raw is not None and raw.get("fingerprint") == front_fp:
                logger.info("reusing front checkpoint from %s", front_dir)
                exact, front, trace, evaluations = _front_from_json(raw)
                front_payload = raw
        if front_payload is None:
            logger.info(
                "phase 3: searching %d-slot design space of %d",
                context.slot_count,
                context.design_space(),
            )
            result = nsga2_run(context, nsga_config)
            exact, front, trace, evaluations = (
                result.exact_entry,
                result.front,
                result.trace,
                result.evaluations,
            )
        # (Re)write artifacts either way: resuming must repair missing
        # or superseded files and still end byte-identical.
        front_payload = write_front_artifacts(
            front_dir, context, front_fp, exact, front, trace, evaluations
        )

    with _stage("report"):
        summary = report_summary(front_payload["entries"], front_payload["exact"])
        report = {
            "version": REPORT_VERSION,
            "config": config.to_dict(),
            "model": {
                "name": model.name,
                "inputs": model.input_count,
                "hidden": model.hidden_count,
                "classes": model.class_count,
                "digest": model_digest,
            },
            "dataset": {
                "path": config.dataset_path,
                "digest": dataset_digest,
                "rows": len(dataset.labels),
                "train_rows": len(dataset.train_indices),
                "test_rows": len(dataset.test_indices),
                "classes": list(dataset.classes),
            },
            "library": {
                "pc_sizes": sizes,
                "pc_fingerprint": pc_fp,
                "pcc_fingerprint": pcc_fp,
                "slot_bounds": context.slot_bounds,
                "design_space": context.design_space(),
            },
            "exact": front_payload["exact"],
            "front": front_payload["entries"],
            "search": {
                "fingerprint": front_fp,
                "evaluations": front_payload["evaluations"],
                "generations": config.nsga_generations,
                "population": config.nsga_population,
            },
            "summary": summary,
        }
        write_json_atomic(os.path.join(out_dir, REPORT_FILE), report)
    return report
