"""Component library records and their on-disk layout.

A popcount (PC) library maps input size to a list of entries: the exact
tree, its output-truncated variants, and evolved approximations, each
carrying the metrics it was certified with.  A popcount-compare (PCC)
library maps an (n_pos, n_neg) pair to assembled compare circuits.

Libraries persist as one JSON file per size plus an ``index.json`` with
content hashes and a configuration fingerprint, so an interrupted
pipeline can trust and reuse what it finds on disk.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, replace

from .circuit import Netlist, netlist_from_dict, netlist_to_dict
from .errors import DistanceErrorReport
from .exceptions import ValidationError
from .util import read_json, sha256_hex, write_json_atomic

PROVENANCES = ("EXACT", "TRUNCATED", "EVOLVED")


@dataclass(frozen=True)
class PcLibraryEntry:
    """One popcount implementation plus its certification record."""

    size: int
    provenance: str
    netlist: Netlist
    area: float
    mae: float
    wcae: int
    constraint_metric: str | None = None
    constraint_tau: float | None = None
    rng_seed: int | None = None
    iterations: int | None = None
    pareto: bool = False

    def __post_init__(self):
        if self.provenance not in PROVENANCES:
            raise ValidationError(f"unknown provenance {self.provenance!r}")

    def to_dict(self) -> dict:
        return {
            "size": self.size,
            "provenance": self.provenance,
            "netlist": netlist_to_dict(self.netlist),
            "area": self.area,
            "mae": self.mae,
            "wcae": self.wcae,
            "constraint_metric": self.constraint_metric,
            "constraint_tau": self.constraint_tau,
            "rng_seed": self.rng_seed,
            "iterations": self.iterations,
            "pareto": self.pareto,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PcLibraryEntry":
        return cls(
            size=int(raw["size"]),
            provenance=str(raw["provenance"]),
            netlist=netlist_from_dict(raw["netlist"]),
            area=float(raw["area"]),
            mae=float(raw["mae"]),
            wcae=int(raw["wcae"]),
            constraint_metric=raw.get("constraint_metric"),
            constraint_tau=raw.get("constraint_tau"),
            rng_seed=raw.get("rng_seed"),
            iterations=raw.get("iterations"),
            pareto=bool(raw.get("pareto", False)),
        )


@dataclass(frozen=True)
class PccLibraryEntry:
    """One assembled popcount-compare circuit with relational metrics."""

    n_pos: int
    n_neg: int
    pos_index: int
    neg_index: int
    pos_provenance: str
    neg_provenance: str
    estimated_area: float
    synthesized_area: float
    comparator_width: int
    report: DistanceErrorReport
    netlist: Netlist

    @property
    def mde(self) -> float:
        return self.report.mde

    @property
    def wcde(self) -> int:
        return self.report.wcde

    def to_dict(self) -> dict:
        return {
            "n_pos": self.n_pos,
            "n_neg": self.n_neg,
            "pos_index": self.pos_index,
            "neg_index": self.neg_index,
            "pos_provenance": self.pos_provenance,
            "neg_provenance": self.neg_provenance,
            "estimated_area": self.estimated_area,
            "synthesized_area": self.synthesized_area,
            "comparator_width": self.comparator_width,
            "report": self.report.to_dict(),
            "netlist": netlist_to_dict(self.netlist),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "PccLibraryEntry":
        rep = raw["report"]
        report = DistanceErrorReport(
            mde=float(rep["mde"]),
            wcde=int(rep["wcde"]),
            error_free_fraction=float(rep["error_free_fraction"]),
            histogram=tuple((int(d), int(c)) for d, c in rep["histogram"]),
            sample_count=int(rep["sample_count"]),
            mode=str(rep["mode"]),
            seed=rep.get("seed"),
        )
        return cls(
            n_pos=int(raw["n_pos"]),
            n_neg=int(raw["n_neg"]),
            pos_index=int(raw["pos_index"]),
            neg_index=int(raw["neg_index"]),
            pos_provenance=str(raw["pos_provenance"]),
            neg_provenance=str(raw["neg_provenance"]),
            estimated_area=float(raw["estimated_area"]),
            synthesized_area=float(raw["synthesized_area"]),
            comparator_width=int(raw["comparator_width"]),
            report=report,
            netlist=netlist_from_dict(raw["netlist"]),
        )


def pc_slot_options(entries: list[PcLibraryEntry]) -> list[PcLibraryEntry]:
    """Selectable variants for one popcount slot, exact anchor first.

    After the anchor come the Pareto-efficient entries ordered from
    largest area (most faithful) to smallest, so growing gene values
    trade area for error monotonically.
    """
    exact = [e for e in entries if e.provenance == "EXACT"]
    if len(exact) != 1:
        raise ValidationError("library slot needs exactly one exact entry")
    rest = [e for e in entries if e.provenance != "EXACT" and e.pareto]
    rest.sort(key=lambda e: (-e.area, e.mae, e.provenance, e.wcae))
    return exact + rest


def mark_pareto(entries: list[PcLibraryEntry]) -> list[PcLibraryEntry]:
    """Flag entries on the (area, mae) efficiency frontier."""
    out = []
    for e in entries:
        dominated = any(
            o.area <= e.area
            and o.mae <= e.mae
            and (o.area < e.area or o.mae < e.mae)
            for o in entries
        )
        out.append(replace(e, pareto=not dominated))
    return out


def _save_keyed(
    directory: str,
    kind: str,
    fingerprint: str,
    files: dict[str, list[dict]],
) -> None:
    os.makedirs(directory, exist_ok=True)
    index: dict = {"version": 1, "kind": kind, "fingerprint": fingerprint, "files": {}}
    for key, records in sorted(files.items()):
        fname = f"{kind}_{key}.json"
        digest = write_json_atomic(os.path.join(directory, fname), records)
        index["files"][key] = {"file": fname, "sha256": digest}
    write_json_atomic(os.path.join(directory, "index.json"), index)


def _load_keyed(directory: str, kind: str) -> tuple[str, dict[str, list[dict]]]:
    index = read_json(os.path.join(directory, "index.json"))
    if index.get("kind") != kind:
        raise ValidationError(f"{directory} does not hold a {kind} library")
    out: dict[str, list[dict]] = {}
    for key, meta in index["files"].items():
        path = os.path.join(directory, meta["file"])
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
        if sha256_hex(text) != meta["sha256"]:
            raise ValidationError(f"checksum mismatch in {path}")
        out[key] = json.loads(text)
    return index.get("fingerprint", ""), out


def save_pc_library(
    library: dict[int, list[PcLibraryEntry]], directory: str, fingerprint: str = ""
) -> None:
    files = {
        f"{size:03d}": [e.to_dict() for e in entries]
        for size, entries in library.items()
    }
    _save_keyed(directory, "pc", fingerprint, files)


def load_pc_library(directory: str) -> tuple[dict[int, list[PcLibraryEntry]], str]:
    fingerprint, files = _load_keyed(directory, "pc")
    library = {
        int(key): [PcLibraryEntry.from_dict(r) for r in records]
        for key, records in files.items()
    }
    return library, fingerprint


def save_pcc_library(
    library: dict[tuple[int, int], list[PccLibraryEntry]],
    directory: str,
    fingerprint: str = "",
) -> None:
    files = {
        f"{np_:03d}x{nn:03d}": [e.to_dict() for e in entries]
        for (np_, nn), entries in library.items()
    }
    _save_keyed(directory, "pcc", fingerprint, files)


def load_pcc_library(
    directory: str,
) -> tuple[dict[tuple[int, int], list[PccLibraryEntry]], str]:
    fingerprint, files = _load_keyed(directory, "pcc")
    library: dict[tuple[int, int], list[PccLibraryEntry]] = {}
    for key, records in files.items():
        np_, nn = key.split("x")
        library[(int(np_), int(nn))] = [PccLibraryEntry.from_dict(r) for r in records]
    return library, fingerprint
