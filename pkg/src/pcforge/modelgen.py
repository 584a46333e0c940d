"""Example model and dataset generation; test scaffolding, not training.

The bundled assets under ``pcforge/data`` are produced by
``make_demo_assets`` with fixed seeds and committed, so the test suite
and the demo pipeline exercise stable inputs.  The greedy hill climber
here is deliberately primitive: it exists so a model can be fit to a
dataset without any external tooling, and every move preserves the
hardware constraints (per-row sign counts, per-class zero count).
"""

from __future__ import annotations

import os
import random
import sys
from importlib import resources
from itertools import product

import numpy as np

from .exceptions import ValidationError
from .tnn import TnnModel, accuracy, infer_exact, ingest
from .util import canonical_dumps, derive_seed, write_text_atomic

DATA_PACKAGE = "pcforge.data"

#: Seeds behind the committed assets; changing them regenerates a
#: different (still valid) bundle.
DEMO_SEED = 20
DEMO_INGEST_SEED = 0
DEMO_ROWS = 420


def asset_path(name: str) -> str:
    """Filesystem path of a bundled data file."""
    path = resources.files(DATA_PACKAGE) / name
    return os.fspath(path)


def tiny_model() -> TnnModel:
    """Three-feature, two-hidden, two-class worked example."""
    return TnnModel(
        name="tiny",
        hidden=((0, 1, -1), (-1, -1, 1)),
        output=((1, -1), (1, 1)),
    )


def random_valid_model(
    name: str,
    input_count: int,
    hidden_pairs: list[tuple[int, int]],
    class_count: int,
    zero_count: int,
    seed: int,
) -> TnnModel:
    """Draw a synthesizable model with fixed per-neuron sign counts."""
    rng = random.Random(derive_seed(seed, "model"))
    hidden = []
    for p, q in hidden_pairs:
        if p < 1 or q < 1 or p + q > input_count:
            raise ValidationError(f"cannot place {p}+{q} signed weights on {input_count} inputs")
        idx = rng.sample(range(input_count), p + q)
        row = [0] * input_count
        for i in idx[:p]:
            row[i] = 1
        for i in idx[p:]:
            row[i] = -1
        hidden.append(tuple(row))
    h = len(hidden_pairs)
    if not 0 <= zero_count < h:
        raise ValidationError("zero_count must leave every class some nonzero weight")
    output = []
    for _ in range(class_count):
        row = [rng.choice((-1, 1)) for _ in range(h)]
        for i in rng.sample(range(h), zero_count):
            row[i] = 0
        output.append(tuple(row))
    return TnnModel(name=name, hidden=tuple(hidden), output=tuple(output))


def train_greedy(
    model: TnnModel,
    bits: np.ndarray,
    labels: np.ndarray,
    iterations: int = 2000,
    seed: int = 0,
) -> TnnModel:
    """Constraint-preserving hill climb on training accuracy.

    Moves are swaps within a row (all layers) and sign flips of nonzero
    output weights, so sign counts and zero counts never change.  Equal
    accuracy is accepted a quarter of the time to cross plateaus.
    """
    rng = random.Random(derive_seed(seed, "train"))
    hidden = [list(r) for r in model.hidden]
    output = [list(r) for r in model.output]

    def build(h, o) -> TnnModel:
        return TnnModel(
            name=model.name,
            hidden=tuple(tuple(r) for r in h),
            output=tuple(tuple(r) for r in o),
            thresholds=model.thresholds,
        )

    current = build(hidden, output)
    current_acc = accuracy(infer_exact(current, bits), labels)
    def swap_two(row: list[int]) -> None:
        if len(row) > 1:
            i, j = rng.sample(range(len(row)), 2)
            row[i], row[j] = row[j], row[i]

    for _ in range(iterations):
        h = [list(r) for r in hidden]
        o = [list(r) for r in output]
        if rng.random() < 0.6:
            swap_two(h[rng.randrange(len(h))])
        else:
            row = o[rng.randrange(len(o))]
            nonzero = [i for i, w in enumerate(row) if w != 0]
            if rng.random() < 0.5 and nonzero:
                i = rng.choice(nonzero)
                row[i] = -row[i]
            else:
                swap_two(row)
        candidate = build(h, o)
        cand_acc = accuracy(infer_exact(candidate, bits), labels)
        if cand_acc > current_acc or (cand_acc == current_acc and rng.random() < 0.25):
            hidden, output = h, o
            current, current_acc = candidate, cand_acc
    return current


#: Four input archetypes over eight features; every feature is on in
#: exactly two of them, so with balanced sampling each feature's median
#: lands in the gap between its two value bands and binarization
#: recovers the designed bit.
_DEMO_PROTOTYPES = (
    (1, 1, 1, 0, 0, 0, 1, 0),
    (1, 0, 0, 1, 1, 0, 1, 0),
    (0, 1, 0, 1, 0, 1, 0, 1),
    (0, 0, 1, 0, 1, 1, 0, 1),
)
_SEPARATORS_PER_CLASS = 3
_DEMO_NOISE = 0.03
_DEMO_LOW_BAND = (0.02, 0.38)
_DEMO_HIGH_BAND = (0.62, 0.98)


def _separator_rows(klass: int) -> list[tuple[tuple[int, ...], tuple[int, ...]]]:
    """Weight rows that tell one archetype apart from the other three.

    A row qualifies when its count difference keeps at least two gates
    of slack on every archetype (so one flipped input bit can never
    change the neuron) and its sign isolates exactly ``klass``, firing
    either for it alone or for everything but it.  Returns (weights,
    fire signs per class) pairs.
    """
    protos = np.asarray(_DEMO_PROTOTYPES)
    n = protos.shape[1]
    rows = []
    for weights in product((-1, 0, 1), repeat=n):
        w = np.asarray(weights)
        if not (np.any(w > 0) and np.any(w < 0)):
            continue
        pre = protos @ w
        if np.min(np.abs(pre)) < 2:
            continue
        signs = tuple(1 if v > 0 else -1 for v in pre)
        fires = sum(s > 0 for s in signs)
        if fires in (1, len(signs) - 1):
            odd = signs.index(1) if fires == 1 else signs.index(-1)
            if odd == klass:
                rows.append((weights, signs))
    return rows


def _demo_teacher(seed: int) -> TnnModel:
    """Archetype-separator model: margins survive small approximations.

    Each class gets three hidden neurons that isolate its archetype, so
    class codewords sit at pairwise Hamming distance six; one flipped
    hidden bit still leaves a decision margin of eight.
    """
    rng = random.Random(derive_seed(seed, "teacher"))
    hidden: list[tuple[int, ...]] = []
    columns: list[tuple[int, ...]] = []
    for klass in range(len(_DEMO_PROTOTYPES)):
        pool = _separator_rows(klass)
        for weights, signs in sorted(rng.sample(pool, _SEPARATORS_PER_CLASS)):
            hidden.append(weights)
            columns.append(signs)
    output = tuple(
        tuple(col[c] for col in columns) for c in range(len(_DEMO_PROTOTYPES))
    )
    return TnnModel(name="demo", hidden=tuple(hidden), output=output)


def _demo_features(seed: int, rows: int) -> np.ndarray:
    """Balanced archetype mixture with band-coded continuous values."""
    rng = np.random.default_rng(derive_seed(seed, "features"))
    protos = np.asarray(_DEMO_PROTOTYPES, dtype=np.uint8)
    per_class, extra = divmod(rows, len(protos))
    if extra:
        raise ValidationError("row count must divide evenly across archetypes")
    assignment = np.repeat(np.arange(len(protos)), per_class)
    rng.shuffle(assignment)
    bits = protos[assignment]
    bits = bits ^ (rng.random(bits.shape) < _DEMO_NOISE)
    lo = rng.uniform(*_DEMO_LOW_BAND, size=bits.shape)
    hi = rng.uniform(*_DEMO_HIGH_BAND, size=bits.shape)
    return np.round(np.where(bits == 1, hi, lo), 4)


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines += [",".join(str(v) for v in row) for row in rows]
    write_text_atomic(path, "\n".join(lines) + "\n")


def demo_pipeline_config(output_dir: str = "demo-out") -> dict:
    """The pipeline configuration the bundled assets are tuned for."""
    return {
        "dataset": {
            "path": "demo.csv",
            "label_column": "label",
            "split_fraction": 0.7,
            "seed": DEMO_INGEST_SEED,
        },
        "model_path": "demo_model.json",
        "pc": {
            "tau_points": 6,
            "budget_iterations": 30000,
            "offspring": 4,
            "gene_mutations": 5,
        },
        "pcc": {
            "samples": 100000,
            "sample_space": "VECTORS",
            "max_options": 8,
        },
        "nsga": {
            "population": 100,
            "generations": 60,
            "crossover_rate": 0.9,
            "mutation_rate": None,
            "fitness_split": "TRAIN",
        },
        "seed": 11,
        "output_dir": output_dir,
    }


def make_demo_assets(out_dir: str, seed: int = DEMO_SEED) -> dict[str, str]:
    """Generate and write the bundled example files.

    The labels come from a drawn teacher model applied to the exact bit
    matrix ingestion will produce, so the committed model fits the
    committed dataset perfectly and deterministically.  Label column
    contents never influence binarization, which is what makes the
    two-pass trick below sound.
    """
    os.makedirs(out_dir, exist_ok=True)
    paths = {}

    tiny = tiny_model()
    paths["tiny_model"] = os.path.join(out_dir, "tiny_model.json")
    write_text_atomic(paths["tiny_model"], canonical_dumps(tiny.to_dict()))

    teacher = _demo_teacher(seed)
    features = _demo_features(seed, DEMO_ROWS)
    header = [f"f{i}" for i in range(teacher.input_count)] + ["label"]

    csv_path = os.path.join(out_dir, "demo.csv")
    provisional = [list(row) + [f"c{i % 2}"] for i, row in enumerate(features)]
    _write_csv(csv_path, header, provisional)
    ds = ingest(csv_path, "label", split_fraction=0.7, seed=DEMO_INGEST_SEED)
    predicted = infer_exact(teacher, ds.bits)
    final_rows = [list(row) + [f"c{c}"] for row, c in zip(features, predicted)]
    _write_csv(csv_path, header, final_rows)
    paths["demo_csv"] = csv_path

    model = TnnModel(
        name="demo",
        hidden=teacher.hidden,
        output=teacher.output,
        thresholds=tuple(round(float(t), 6) for t in ds.thresholds),
    )
    paths["demo_model"] = os.path.join(out_dir, "demo_model.json")
    write_text_atomic(paths["demo_model"], canonical_dumps(model.to_dict()))

    paths["demo_config"] = os.path.join(out_dir, "demo_config.json")
    write_text_atomic(paths["demo_config"], canonical_dumps(demo_pipeline_config()))
    return paths


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else asset_path("")
    written = make_demo_assets(target)
    for key, value in sorted(written.items()):
        print(f"{key}: {value}")
