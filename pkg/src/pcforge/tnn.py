"""Ternary two-layer classifier: reference inference and netlist emission.

The model keeps weights only, all in {-1, 0, +1}.  A hidden neuron fires
when the count of active positively weighted inputs is at least the
count of active negatively weighted ones, which maps one-to-one onto a
popcount-compare circuit.  Class scores count agreements between hidden
activations (read as +/-1) and the class's nonzero weights, so when all
classes share one zero-weight count the winner is decided by comparing
raw counts, and the whole argmax lowers to popcounts, one comparator
chain, and muxes.

``infer_exact`` is the semantic reference.  ``generate_netlist`` must
agree with it bit for bit on every input when built from exact blocks;
approximate blocks change the counts but not the interface.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .bits import BitMatrix
from .circuit import Netlist, NetlistBuilder, simulate
from .exceptions import ValidationError
from .pcc import assemble_pcc, build_comparator
from .popcount import build_exact_pc
from .util import derive_seed

logger = logging.getLogger(__name__)

TERNARY = (-1, 0, 1)
SPLITS = ("TRAIN", "TEST", "ALL")
MODEL_SCHEMA_VERSION = 1


@dataclass(frozen=True)
class TnnModel:
    """Weights of a two-layer ternary network.

    ``hidden`` is hidden_count x input_count, ``output`` is
    class_count x hidden_count, both row-major and ternary.
    ``thresholds`` records the per-feature binarization points the model
    was fit against; omitted thresholds default to 0.5 everywhere.
    """

    name: str
    hidden: tuple[tuple[int, ...], ...]
    output: tuple[tuple[int, ...], ...]
    thresholds: tuple[float, ...] | None = None

    def __post_init__(self):
        if not self.hidden or not self.hidden[0]:
            raise ValidationError("model needs at least one hidden neuron and input")
        if not self.output:
            raise ValidationError("model needs at least one class")
        n = len(self.hidden[0])
        for row in self.hidden:
            if len(row) != n:
                raise ValidationError("ragged hidden weight matrix")
        h = len(self.hidden)
        for row in self.output:
            if len(row) != h:
                raise ValidationError("output rows must match the hidden count")
        for matrix in (self.hidden, self.output):
            for row in matrix:
                for w in row:
                    if w not in TERNARY:
                        raise ValidationError(f"weight {w!r} is not ternary")
        if self.thresholds is None:
            object.__setattr__(self, "thresholds", (0.5,) * n)
        elif len(self.thresholds) != n:
            raise ValidationError("thresholds must cover every feature")

    @property
    def input_count(self) -> int:
        return len(self.hidden[0])

    @property
    def hidden_count(self) -> int:
        return len(self.hidden)

    @property
    def class_count(self) -> int:
        return len(self.output)

    @property
    def zero_count(self) -> int:
        """Zero weights in the first class row; equal across rows when valid."""
        return sum(1 for w in self.output[0] if w == 0)

    def to_dict(self) -> dict:
        return {
            "version": MODEL_SCHEMA_VERSION,
            "name": self.name,
            "topology": [self.input_count, self.hidden_count, self.class_count],
            "hidden": [list(r) for r in self.hidden],
            "output": [list(r) for r in self.output],
            "thresholds": list(self.thresholds),
            "zero_count": self.zero_count,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "TnnModel":
        version = int(raw.get("version", 1))
        if version > MODEL_SCHEMA_VERSION:
            raise ValidationError(f"model schema version {version} is not supported")
        thresholds = raw.get("thresholds")
        return cls(
            name=str(raw["name"]),
            hidden=tuple(tuple(int(w) for w in r) for r in raw["hidden"]),
            output=tuple(tuple(int(w) for w in r) for r in raw["output"]),
            thresholds=None if thresholds is None else tuple(float(t) for t in thresholds),
        )


@dataclass(frozen=True)
class ModelReport:
    """Outcome of hardware-readiness validation."""

    hardware_ready: bool
    issues: tuple[str, ...]
    class_zero_counts: tuple[int, ...]
    class_offsets: tuple[float, ...]


def validate_model(model: TnnModel, strict: bool = True) -> ModelReport:
    """Check the constraints the netlist backend relies on.

    Hardware needs every hidden neuron to carry at least one positive
    and one negative weight, and every class to drop the same number of
    hidden neurons.  ``strict`` turns violations into errors; otherwise
    they are reported, per-class score offsets (half the zero count) are
    recorded, and the model stays software-only.
    """
    issues = []
    for j, row in enumerate(model.hidden):
        pos = sum(1 for w in row if w == 1)
        neg = sum(1 for w in row if w == -1)
        if pos == 0 or neg == 0:
            issues.append(
                f"hidden neuron {j} needs both signs, has {pos} positive and {neg} negative"
            )
    zero_counts = tuple(sum(1 for w in row if w == 0) for row in model.output)
    if len(set(zero_counts)) > 1:
        issues.append(f"classes drop unequal hidden counts {zero_counts}")
    if any(z == model.hidden_count for z in zero_counts):
        issues.append("a class has no nonzero weights")
    if any(not 0.0 <= t <= 1.0 for t in model.thresholds):
        issues.append("thresholds must lie in [0, 1]")
    report = ModelReport(
        hardware_ready=not issues,
        issues=tuple(issues),
        class_zero_counts=zero_counts,
        class_offsets=tuple(z / 2 for z in zero_counts),
    )
    if strict and issues:
        raise ValidationError("model is not synthesizable: " + "; ".join(issues))
    return report


def infer_exact(model: TnnModel, bit_rows: np.ndarray) -> np.ndarray:
    """Reference forward pass over a (samples x features) bit array.

    Hidden ties activate.  Class ties go to the lowest index, matching
    the comparator chain in the generated netlist.
    """
    x = np.asarray(bit_rows)
    if x.ndim != 2 or x.shape[1] != model.input_count:
        raise ValidationError(
            f"expected samples x {model.input_count} bits, got shape {x.shape}"
        )
    x = x.astype(np.int32)
    hw = np.array(model.hidden, dtype=np.int32)
    pos = x @ (hw == 1).T.astype(np.int32)
    neg = x @ (hw == -1).T.astype(np.int32)
    h = (pos >= neg).astype(np.int32)
    ow = np.array(model.output, dtype=np.int32)
    counts = h @ (ow == 1).T.astype(np.int32) + (1 - h) @ (ow == -1).T.astype(np.int32)
    zeros = np.array([sum(1 for w in row if w == 0) for row in model.output], np.int32)
    decision = 2 * counts + zeros
    return np.argmax(decision, axis=1)


@dataclass(frozen=True)
class NeuronRequirements:
    """Component shapes one model demands from the libraries."""

    hidden_pairs: tuple[tuple[int, int], ...]  # per neuron, (n_pos, n_neg)
    class_width: int  # nonzero weights per class, equal across classes
    distinct_pairs: tuple[tuple[int, int], ...]


def neuron_requirements(model: TnnModel) -> NeuronRequirements:
    validate_model(model, strict=True)
    pairs = []
    for row in model.hidden:
        pos = sum(1 for w in row if w == 1)
        neg = sum(1 for w in row if w == -1)
        pairs.append((pos, neg))
    width = sum(1 for w in model.output[0] if w != 0)
    return NeuronRequirements(
        hidden_pairs=tuple(pairs),
        class_width=width,
        distinct_pairs=tuple(sorted(set(pairs))),
    )


def generate_netlist(
    model: TnnModel,
    hidden_choices: list[Netlist],
    class_choices: list[Netlist],
    name: str | None = None,
) -> Netlist:
    """Wire chosen compare and count blocks into one classifier netlist.

    ``hidden_choices[j]`` must take that neuron's positive-then-negative
    inputs and emit a single activation bit; ``class_choices[c]`` must
    count that class's wires.  Outputs are a one-hot class indicator
    with ties already resolved toward lower indices.
    """
    validate_model(model, strict=True)
    if len(hidden_choices) != model.hidden_count:
        raise ValidationError(
            f"need {model.hidden_count} hidden circuits, got {len(hidden_choices)}"
        )
    if len(class_choices) != model.class_count:
        raise ValidationError(
            f"need {model.class_count} class counters, got {len(class_choices)}"
        )

    b = NetlistBuilder(model.input_count, name=name or f"{model.name}_net")
    hidden_bits: list[int] = []
    for j, row in enumerate(model.hidden):
        pos_refs = [b.input_ref(i) for i, w in enumerate(row) if w == 1]
        neg_refs = [b.input_ref(i) for i, w in enumerate(row) if w == -1]
        sub = hidden_choices[j]
        if sub.input_count != len(pos_refs) + len(neg_refs):
            raise ValidationError(
                f"hidden {j}: circuit takes {sub.input_count} inputs, "
                f"neuron feeds {len(pos_refs)}+{len(neg_refs)}"
            )
        if sub.output_count != 1:
            raise ValidationError(f"hidden {j}: activation circuit must emit one bit")
        (wire,) = b.splice(sub, pos_refs + neg_refs)
        hidden_bits.append(wire)

    inverted: dict[int, int] = {}

    def inv(j: int) -> int:
        if j not in inverted:
            inverted[j] = b.not_(hidden_bits[j])
        return inverted[j]

    counts: list[list[int]] = []
    width: int | None = None
    for c, row in enumerate(model.output):
        wires = [hidden_bits[j] for j, w in enumerate(row) if w == 1]
        wires += [inv(j) for j, w in enumerate(row) if w == -1]
        sub = class_choices[c]
        if sub.input_count != len(wires):
            raise ValidationError(
                f"class {c}: counter takes {sub.input_count} inputs, has {len(wires)} wires"
            )
        outs = b.splice(sub, wires)
        if width is None:
            width = len(outs)
        elif len(outs) != width:
            raise ValidationError("class counters must emit equal widths")
        counts.append(outs)

    # Running-winner chain.  ge keeps the incumbent on ties, so the
    # lowest index among equal counts survives to the end.
    best = counts[0]
    wins: list[int] = []
    if len(counts) > 1:
        comparator = build_comparator(width)
        for challenger in counts[1:]:
            (ge,) = b.splice(comparator, best + challenger)
            win = b.not_(ge)
            wins.append(win)
            best = [
                b.or_(b.and_(win, cb), b.and_(ge, bb))
                for cb, bb in zip(challenger, best)
            ]

    # One-hot flags: the *last* stage that won owns the decision.
    flags = [0] * len(counts)
    suffix: int | None = None
    for c in range(len(counts) - 1, 0, -1):
        win = wins[c - 1]
        flags[c] = win if suffix is None else b.and_(win, b.not_(suffix))
        suffix = win if suffix is None else b.or_(suffix, win)
    flags[0] = b.const(1) if suffix is None else b.not_(suffix)
    return b.build(flags)


def exact_netlist(model: TnnModel, name: str | None = None) -> Netlist:
    """Classifier built entirely from exact blocks; the truth baseline."""
    reqs = neuron_requirements(model)
    hidden = [
        assemble_pcc(build_exact_pc(p), build_exact_pc(q)).netlist
        for p, q in reqs.hidden_pairs
    ]
    classes = [build_exact_pc(reqs.class_width) for _ in range(model.class_count)]
    return generate_netlist(model, hidden, classes, name=name)


def netlist_predict(netlist: Netlist, bit_rows: np.ndarray) -> np.ndarray:
    """Run the classifier netlist; outputs are one-hot, argmax decodes."""
    x = np.asarray(bit_rows, dtype=bool)
    if x.ndim != 2 or x.shape[1] != netlist.input_count:
        raise ValidationError(
            f"expected samples x {netlist.input_count} bits, got shape {x.shape}"
        )
    matrix = BitMatrix.from_bool(x.T)
    out = simulate(netlist, matrix)
    onehot = out.to_bool().T
    return np.argmax(onehot, axis=1)


@dataclass(eq=False)
class Dataset:
    """Binarized samples plus the train/test split that defined them."""

    feature_names: tuple[str, ...]
    label_name: str
    classes: tuple[str, ...]
    mins: np.ndarray
    maxs: np.ndarray
    thresholds: np.ndarray  # per feature, in normalized units
    constant_mask: np.ndarray
    bits: np.ndarray  # (rows x features) bool
    labels: np.ndarray  # (rows,) class indices
    train_indices: np.ndarray
    test_indices: np.ndarray
    split_seed: int = field(default=0)

    @property
    def row_count(self) -> int:
        return len(self.labels)

    @property
    def feature_count(self) -> int:
        return len(self.feature_names)

    def split(self, which: str = "TEST") -> tuple[np.ndarray, np.ndarray]:
        if which not in SPLITS:
            raise ValidationError(f"split must be one of {SPLITS}")
        if which == "ALL":
            return self.bits, self.labels
        idx = self.train_indices if which == "TRAIN" else self.test_indices
        if len(idx) == 0:
            raise ValidationError(f"{which} split is empty")
        return self.bits[idx], self.labels[idx]

    def summary(self) -> dict:
        return {
            "rows": int(self.row_count),
            "features": int(self.feature_count),
            "classes": list(self.classes),
            "train_rows": int(len(self.train_indices)),
            "test_rows": int(len(self.test_indices)),
            "constant_features": [
                self.feature_names[i] for i in np.flatnonzero(self.constant_mask)
            ],
        }


def apply_thresholds(
    features: np.ndarray,
    mins: np.ndarray,
    maxs: np.ndarray,
    thresholds: np.ndarray,
) -> np.ndarray:
    """Min-max scale then threshold; the whole binarization in one place.

    Constant features (min equal to max) cannot be scaled and read as 0.
    Binarizing already-binary data against a 0.5 threshold is a no-op.
    """
    features = np.asarray(features, dtype=np.float64)
    mins = np.asarray(mins, dtype=np.float64)
    maxs = np.asarray(maxs, dtype=np.float64)
    constant = maxs == mins
    span = np.where(constant, 1.0, maxs - mins)
    bits = (features - mins) / span >= np.asarray(thresholds)
    bits[:, constant] = False
    return bits


def ingest(
    csv_path: str,
    label_column: str,
    split_fraction: float = 0.7,
    seed: int = 0,
) -> Dataset:
    """Load a CSV of real-valued features and binarize per feature.

    The split is drawn first so every statistic below comes from the
    training rows alone: min-max scaling, then a one-bit threshold at
    the training median of each scaled feature.
    """
    if not 0.0 < split_fraction <= 1.0:
        raise ValidationError("split_fraction must be in (0, 1]")
    with open(csv_path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValidationError("dataset file is empty")
        rows = [r for r in reader if r]
    if label_column not in header:
        raise ValidationError(f"no column named {label_column!r} in {header}")
    label_idx = header.index(label_column)
    feature_names = tuple(h for i, h in enumerate(header) if i != label_idx)
    if not feature_names:
        raise ValidationError("dataset has no feature columns")
    if len(rows) < 2:
        raise ValidationError("dataset needs at least two rows")

    raw_labels: list[str] = []
    features = np.empty((len(rows), len(feature_names)), dtype=np.float64)
    for r, row in enumerate(rows):
        if len(row) != len(header):
            raise ValidationError(f"row {r + 2}: expected {len(header)} fields, got {len(row)}")
        raw_labels.append(row[label_idx])
        k = 0
        for i, cell in enumerate(row):
            if i == label_idx:
                continue
            try:
                features[r, k] = float(cell)
            except ValueError:
                raise ValidationError(f"row {r + 2}: non-numeric value {cell!r}") from None
            k += 1

    classes = tuple(sorted(set(raw_labels)))
    if len(classes) < 2:
        raise ValidationError("dataset must contain at least two classes")
    class_index = {c: i for i, c in enumerate(classes)}
    labels = np.array([class_index[c] for c in raw_labels], dtype=np.int64)

    rng = np.random.default_rng(derive_seed(seed, "split"))
    perm = rng.permutation(len(rows))
    n_train = int(round(split_fraction * len(rows)))
    n_train = min(max(n_train, 1), len(rows))
    train_idx = np.sort(perm[:n_train])
    test_idx = np.sort(perm[n_train:])

    train = features[train_idx]
    mins = train.min(axis=0)
    maxs = train.max(axis=0)
    constant = maxs == mins
    for i in np.flatnonzero(constant):
        logger.warning(
            "feature %r is constant on the training split; it reads as 0",
            feature_names[i],
        )
    safe_span = np.where(constant, 1.0, maxs - mins)
    thresholds = np.median((train - mins) / safe_span, axis=0)
    bits = apply_thresholds(features, mins, maxs, thresholds)

    return Dataset(
        feature_names=feature_names,
        label_name=label_column,
        classes=classes,
        mins=mins,
        maxs=maxs,
        thresholds=thresholds,
        constant_mask=constant,
        bits=bits,
        labels=labels,
        train_indices=train_idx,
        test_indices=test_idx,
        split_seed=seed,
    )


def dataset_from_bits(
    bits: np.ndarray,
    labels: np.ndarray,
    classes: tuple[str, ...] | None = None,
    split_fraction: float = 0.7,
    seed: int = 0,
) -> Dataset:
    """In-memory dataset over already-binary samples; mainly for tests.

    Splitting matches ``ingest`` exactly: same seed, same permutation.
    """
    bits = np.asarray(bits, dtype=bool)
    labels = np.asarray(labels, dtype=np.int64)
    if bits.ndim != 2 or len(labels) != len(bits):
        raise ValidationError("bits and labels must align")
    if classes is None:
        classes = tuple(f"c{i}" for i in range(int(labels.max()) + 1 if len(labels) else 0))
    if len(labels) and (labels.min() < 0 or labels.max() >= len(classes)):
        raise ValidationError("labels must index the class list")
    n = bits.shape[1]
    rng = np.random.default_rng(derive_seed(seed, "split"))
    perm = rng.permutation(len(bits))
    n_train = min(max(int(round(split_fraction * len(bits))), 1), len(bits))
    return Dataset(
        feature_names=tuple(f"f{i}" for i in range(n)),
        label_name="label",
        classes=classes,
        mins=np.zeros(n),
        maxs=np.ones(n),
        thresholds=np.full(n, 0.5),
        constant_mask=np.zeros(n, dtype=bool),
        bits=bits,
        labels=labels,
        train_indices=np.sort(perm[:n_train]),
        test_indices=np.sort(perm[n_train:]),
        split_seed=seed,
    )


def accuracy(predictions: np.ndarray, labels: np.ndarray) -> float:
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ValidationError("predictions and labels must align")
    if len(labels) == 0:
        raise ValidationError("cannot score an empty sample")
    return float(np.mean(predictions == labels))


def model_accuracy(model: TnnModel, dataset: Dataset, split: str = "TEST") -> float:
    bits, labels = dataset.split(split)
    return accuracy(infer_exact(model, bits), labels)


def netlist_accuracy(netlist: Netlist, dataset: Dataset, split: str = "TEST") -> float:
    bits, labels = dataset.split(split)
    return accuracy(netlist_predict(netlist, bits), labels)
