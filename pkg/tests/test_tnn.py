"""Model semantics, netlist equivalence, and dataset ingestion tests."""

import random

import numpy as np
import pytest

from pcforge.bits import enumerate_inputs
from pcforge.exceptions import ValidationError
from pcforge.popcount import build_exact_pc, build_truncated_pc
from pcforge.tnn import (
    Dataset,
    TnnModel,
    accuracy,
    exact_netlist,
    generate_netlist,
    infer_exact,
    ingest,
    model_accuracy,
    netlist_accuracy,
    netlist_predict,
    neuron_requirements,
    validate_model,
)

from . import oracles


def _random_model(rng: random.Random, inputs: int, hidden: int, classes: int) -> TnnModel:
    """Draw a model that satisfies the hardware constraints."""
    hw = []
    for _ in range(hidden):
        row = [rng.choice((-1, 0, 1)) for _ in range(inputs)]
        i, j = rng.sample(range(inputs), 2) if inputs > 1 else (0, 0)
        row[i], row[j] = 1, -1
        if inputs == 1:
            row[0] = 1  # cannot satisfy both signs with one input
        hw.append(tuple(row))
    zeros = rng.randrange(hidden)  # strictly fewer zeros than neurons
    ow = []
    for _ in range(classes):
        signs = [rng.choice((-1, 1)) for _ in range(hidden)]
        for pos in rng.sample(range(hidden), zeros):
            signs[pos] = 0
        ow.append(tuple(signs))
    return TnnModel(name="fuzz", hidden=tuple(hw), output=tuple(ow))


def _enumerated_bits(n: int) -> np.ndarray:
    return enumerate_inputs(n).to_bool().T


def test_model_shape_validation():
    with pytest.raises(ValidationError):
        TnnModel(name="x", hidden=(), output=((1,),))
    with pytest.raises(ValidationError):
        TnnModel(name="x", hidden=((1, -1), (1,)), output=((1, 1),))
    with pytest.raises(ValidationError):
        TnnModel(name="x", hidden=((1, -1),), output=((1, 0, 1),))
    with pytest.raises(ValidationError):
        TnnModel(name="x", hidden=((2, -1),), output=((1,),))


def test_model_dict_round_trip():
    model = TnnModel(
        name="m",
        hidden=((1, 0, -1), (-1, 1, 0)),
        output=((1, -1), (0, 1)),
        thresholds=(0.25, 0.5, 0.75),
    )
    raw = model.to_dict()
    assert raw["version"] == 1
    assert raw["topology"] == [3, 2, 2]
    assert raw["zero_count"] == 0
    assert TnnModel.from_dict(raw) == model
    # Default thresholds materialize to 0.5 per feature.
    bare = TnnModel(name="m", hidden=((1, -1),), output=((1,),))
    assert bare.thresholds == (0.5, 0.5)
    with pytest.raises(ValidationError):
        TnnModel.from_dict({**raw, "version": 99})
    with pytest.raises(ValidationError):
        TnnModel(name="m", hidden=((1, -1),), output=((1,),), thresholds=(0.5,))


def test_validate_model_reports():
    good = TnnModel(name="g", hidden=((1, -1), (-1, 1)), output=((1, -1), (-1, 1)))
    report = validate_model(good)
    assert report.hardware_ready
    assert report.class_zero_counts == (0, 0)

    one_sided = TnnModel(name="b", hidden=((1, 0), (1, -1)), output=((1, -1), (-1, 1)))
    with pytest.raises(ValidationError):
        validate_model(one_sided)
    lenient = validate_model(one_sided, strict=False)
    assert not lenient.hardware_ready
    assert "hidden neuron 0" in lenient.issues[0]

    lopsided = TnnModel(name="b2", hidden=((1, -1), (-1, 1)), output=((1, 0), (1, 1)))
    report = validate_model(lopsided, strict=False)
    assert not report.hardware_ready
    assert report.class_zero_counts == (1, 0)
    assert report.class_offsets == (0.5, 0.0)

    shifted = TnnModel(
        name="b3", hidden=((1, -1),), output=((1,), (-1,)), thresholds=(1.5, 0.5)
    )
    report = validate_model(shifted, strict=False)
    assert any("thresholds" in issue for issue in report.issues)


def test_all_zero_class_row_is_rejected():
    model = TnnModel(name="z", hidden=((1, -1),), output=((0,),))
    with pytest.raises(ValidationError):
        validate_model(model)


def test_infer_matches_reference_oracle():
    rng = random.Random(11)
    for _ in range(25):
        inputs = rng.randrange(2, 7)
        hidden = rng.randrange(1, 5)
        classes = rng.randrange(1, 5)
        model = _random_model(rng, inputs, hidden, classes)
        samples = np.array(
            [[rng.randrange(2) for _ in range(inputs)] for _ in range(32)], dtype=bool
        )
        got = infer_exact(model, samples)
        for row, pred in zip(samples, got):
            assert pred == oracles.ternary_infer(model.hidden, model.output, list(row))


def test_hidden_tie_activates():
    # One positive, one negative input: 00 and 11 both tie and fire.
    model = TnnModel(name="t", hidden=((1, -1),), output=((1,), (-1,)))
    bits = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=bool)
    preds = infer_exact(model, bits)
    # Activation 1 agrees with class 0's +1 weight except on input 10^T.
    assert list(preds) == [0, 0, 0, 1]


def test_class_tie_prefers_lower_index():
    # Identical class rows always tie; class 0 must win everywhere.
    model = TnnModel(name="tie", hidden=((1, -1), (-1, 1)), output=((1, 1), (1, 1)))
    bits = _enumerated_bits(2)
    assert set(infer_exact(model, bits)) == {0}
    assert set(netlist_predict(exact_netlist(model), bits)) == {0}


def test_neuron_requirements():
    model = TnnModel(
        name="req",
        hidden=((1, -1, 1, 0), (0, 1, -1, -1), (1, -1, 1, 0)),
        output=((1, -1, 0), (0, 1, 1)),
    )
    reqs = neuron_requirements(model)
    assert reqs.hidden_pairs == ((2, 1), (1, 2), (2, 1))
    assert reqs.class_width == 2
    assert reqs.distinct_pairs == ((1, 2), (2, 1))


def test_exact_netlist_matches_inference_enumerated():
    rng = random.Random(23)
    for inputs, hidden, classes in ((3, 2, 2), (4, 3, 3), (5, 2, 4), (6, 4, 2)):
        model = _random_model(rng, inputs, hidden, classes)
        bits = _enumerated_bits(inputs)
        netlist = exact_netlist(model)
        assert netlist.input_count == inputs
        assert netlist.output_count == classes
        got = netlist_predict(netlist, bits)
        want = infer_exact(model, bits)
        assert np.array_equal(got, want)


def test_netlist_outputs_are_one_hot():
    rng = random.Random(5)
    model = _random_model(rng, 5, 3, 4)
    netlist = exact_netlist(model)
    matrix = enumerate_inputs(5)
    from pcforge.circuit import simulate

    out = simulate(netlist, matrix).to_bool()
    assert np.array_equal(out.sum(axis=0), np.ones(32, dtype=np.int64))


def test_single_class_model():
    model = TnnModel(name="one", hidden=((1, -1),), output=((1,),))
    bits = _enumerated_bits(2)
    assert set(infer_exact(model, bits)) == {0}
    netlist = exact_netlist(model)
    assert np.array_equal(netlist_predict(netlist, bits), np.zeros(4, dtype=np.int64))


def test_generate_netlist_interface_checks():
    model = TnnModel(name="g", hidden=((1, -1), (-1, 1)), output=((1, -1), (-1, 1)))
    reqs = neuron_requirements(model)
    from pcforge.pcc import assemble_pcc

    good_hidden = [
        assemble_pcc(build_exact_pc(p), build_exact_pc(q)).netlist
        for p, q in reqs.hidden_pairs
    ]
    good_classes = [build_exact_pc(reqs.class_width) for _ in range(2)]
    with pytest.raises(ValidationError):
        generate_netlist(model, good_hidden[:1], good_classes)
    with pytest.raises(ValidationError):
        generate_netlist(model, good_hidden, good_classes[:1])
    bad_hidden = [build_exact_pc(3)] + good_hidden[1:]
    with pytest.raises(ValidationError):
        generate_netlist(model, bad_hidden, good_classes)
    bad_classes = [build_exact_pc(3), good_classes[1]]
    with pytest.raises(ValidationError):
        generate_netlist(model, good_hidden, bad_classes)


def test_approximate_class_counters_keep_interface():
    rng = random.Random(31)
    model = _random_model(rng, 6, 4, 2)
    reqs = neuron_requirements(model)
    from pcforge.pcc import assemble_pcc

    hidden = [
        assemble_pcc(build_exact_pc(p), build_exact_pc(q)).netlist
        for p, q in reqs.hidden_pairs
    ]
    classes = [build_truncated_pc(reqs.class_width, 1) for _ in range(2)]
    netlist = generate_netlist(model, hidden, classes)
    bits = _enumerated_bits(6)
    preds = netlist_predict(netlist, bits)
    assert preds.shape == (64,)
    assert set(preds) <= {0, 1}


def _write_csv(path, rows):
    with open(path, "w") as fh:
        fh.write("\n".join(",".join(str(v) for v in row) for row in rows) + "\n")


def test_ingest_basic(tmp_path):
    rows = [["f0", "f1", "label"]]
    rng = random.Random(2)
    for i in range(20):
        rows.append([rng.uniform(0, 10), rng.uniform(-5, 5), "b" if i % 3 else "a"])
    path = tmp_path / "d.csv"
    _write_csv(path, rows)
    ds = ingest(str(path), "label", seed=4)
    assert ds.classes == ("a", "b")
    assert ds.feature_names == ("f0", "f1")
    assert ds.row_count == 20
    assert len(ds.train_indices) == 14  # round(0.7 * 20)
    assert len(ds.test_indices) == 6
    assert sorted(set(ds.train_indices) | set(ds.test_indices)) == list(range(20))
    assert ds.bits.shape == (20, 2)
    # Thresholds are medians of scaled training values.
    again = ingest(str(path), "label", seed=4)
    assert np.array_equal(again.bits, ds.bits)
    assert np.array_equal(again.train_indices, ds.train_indices)
    other = ingest(str(path), "label", seed=5)
    assert not np.array_equal(other.train_indices, ds.train_indices)


def test_ingest_thresholds_come_from_train_split(tmp_path):
    rows = [["x", "y"]]
    for i in range(10):
        rows.append([float(i), "p" if i < 5 else "q"])
    path = tmp_path / "d.csv"
    _write_csv(path, rows)
    ds = ingest(str(path), "y", seed=0)
    train_vals = np.arange(10.0)[ds.train_indices]
    lo, hi = train_vals.min(), train_vals.max()
    scaled = (np.arange(10.0) - lo) / (hi - lo)
    want = scaled >= np.median((train_vals - lo) / (hi - lo))
    assert np.array_equal(ds.bits[:, 0], want)


def test_ingest_constant_feature_reads_zero(tmp_path, caplog):
    rows = [["c", "v", "label"]]
    for i in range(12):
        rows.append([3.5, float(i), "a" if i % 2 else "b"])
    path = tmp_path / "d.csv"
    _write_csv(path, rows)
    with caplog.at_level("WARNING", logger="pcforge.tnn"):
        ds = ingest(str(path), "label")
    assert list(ds.constant_mask) == [True, False]
    assert not ds.bits[:, 0].any()
    assert "c" in ds.summary()["constant_features"]
    assert any("constant" in rec.message for rec in caplog.records)


def test_binarizing_binary_data_is_identity():
    rng = np.random.default_rng(3)
    raw = rng.integers(0, 2, size=(40, 6)).astype(np.float64)
    from pcforge.tnn import apply_thresholds

    bits = apply_thresholds(raw, np.zeros(6), np.ones(6), np.full(6, 0.5))
    assert np.array_equal(bits, raw.astype(bool))


def test_zero_weight_pruning_is_sound():
    # Scores computed with explicit zero terms must agree with the
    # pruned inference path on every sample.
    rng = random.Random(17)
    for _ in range(10):
        model = _random_model(rng, 5, 3, 3)
        bits = _enumerated_bits(5)
        pruned = infer_exact(model, bits)
        hw = np.array(model.hidden)
        ow = np.array(model.output)
        for row, want in zip(bits, pruned):
            signed = row.astype(np.int64)
            h = np.where(hw @ signed >= 0, 1, -1)
            scores = ow @ h  # zero weights contribute exactly 0
            assert int(np.argmax(scores)) == want


def test_ingest_rejects_bad_input(tmp_path):
    path = tmp_path / "d.csv"
    _write_csv(path, [["a", "label"], [1.0, "x"], [2.0, "y"]])
    with pytest.raises(ValidationError):
        ingest(str(path), "missing")
    _write_csv(path, [["a", "label"], ["oops", "x"], [2.0, "y"]])
    with pytest.raises(ValidationError):
        ingest(str(path), "label")
    _write_csv(path, [["a", "label"]])
    with pytest.raises(ValidationError):
        ingest(str(path), "label")
    _write_csv(path, [["a", "label"], [1.0, "x", 3.0], [2.0, "y", 4.0]])
    with pytest.raises(ValidationError):
        ingest(str(path), "label")
    _write_csv(path, [["a", "label"], [1.0, "same"], [2.0, "same"]])
    with pytest.raises(ValidationError):
        ingest(str(path), "label")


def test_accuracy_and_split_scoring(tmp_path):
    rows = [["f0", "f1", "cls"]]
    rng = random.Random(9)
    # Separable by f0: high values one class, low values the other.
    for _ in range(30):
        lo = rng.random() < 0.5
        f0 = rng.uniform(0, 0.4) if lo else rng.uniform(0.6, 1.0)
        rows.append([f0, rng.random(), "low" if lo else "high"])
    path = tmp_path / "d.csv"
    _write_csv(path, rows)
    ds = ingest(str(path), "cls", seed=1)

    assert accuracy(np.array([1, 0, 1]), np.array([1, 1, 1])) == pytest.approx(2 / 3)
    with pytest.raises(ValidationError):
        accuracy(np.array([1]), np.array([1, 2]))

    # classes sorted -> "high" is 0; f0 high must vote for it.
    model = TnnModel(name="s", hidden=((1, -1),), output=((1,), (-1,)))
    train_bits, train_labels = ds.split("TRAIN")
    manual = accuracy(infer_exact(model, train_bits), train_labels)
    assert model_accuracy(model, ds, "TRAIN") == manual
    assert netlist_accuracy(exact_netlist(model), ds, "TRAIN") == manual
    for split in ("TRAIN", "TEST", "ALL"):
        assert 0.0 <= model_accuracy(model, ds, split) <= 1.0
    with pytest.raises(ValidationError):
        ds.split("VALID")
