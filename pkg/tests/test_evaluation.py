import io

import numpy as np
import pytest
from hypothesis import given, strategies as st

from chordgen import synthetic
from chordgen.evaluation import (AccuracyReport, accuracy, confusion, matrix_to_pgm,
                                 predict_segmented, read_pgm, read_report_csv, run_experiment,
                                 write_matrix_csv, write_report_csv)
from chordgen.harmonizers import BlstmModel, generate
from chordgen.hmm import HmmParams, fit_hmm
from chordgen.neural import Network, blstm_spec, dnn_spec
from chordgen.preprocess import BarSequence, segments


def test_accuracy_basic():
    assert accuracy([1, 2, 3, 4], [1, 2, 0, 4]) == 0.75
    with pytest.raises(ValueError):
        accuracy([1], [1, 2])
    with pytest.raises(ValueError):
        accuracy([], [])


@given(st.lists(st.tuples(st.integers(0, 23), st.integers(0, 23)), min_size=1, max_size=60))
def test_confusion_properties(pairs):
    true, pred = map(list, zip(*pairs))
    m = confusion(true, pred)
    assert m.counts.sum() == len(pairs)
    assert np.trace(m.counts) == sum(t == p for t, p in pairs)
    rows = m.normalized.sum(axis=1)
    for c in range(24):
        assert rows[c] == pytest.approx(1.0 if c in true else 0.0)


def test_column_mass():
    m = confusion([0, 1, 2, 3], [0, 0, 5, 7])
    assert m.column_mass([0, 5]) == 0.75


@pytest.mark.parametrize("n, T, spans", [
    (10, 4, [(0, 4), (4, 8), (8, 10)]), (8, 4, [(0, 4), (4, 8)]), (3, 8, [(0, 3)]),
])
def test_segments(n, T, spans):
    assert [(s.start, s.stop) for s in segments(n, T)] == spans


def test_predict_segmented_hmm_restarts_per_segment():
    seqs = synthetic.long_range_corpus(30, T=8, seed=0)
    params = fit_hmm(seqs)
    seq = seqs[0]
    got = predict_segmented("hmm", params, seq, 4)
    expected = np.concatenate([generate("hmm", params, seq.features[:4]),
                               generate("hmm", params, seq.features[4:])])
    assert np.array_equal(got, expected)


def test_run_experiment_report_and_matrices():
    seqs = synthetic.long_range_corpus(20, T=8, seed=1)
    params = fit_hmm(seqs)
    blstm = {T: BlstmModel(Network(blstm_spec(hidden=3, depth=1), seed=T), T) for T in (4, 8)}
    report, mats = run_experiment(
        {"HMM": ("hmm", params), "DNN": ("dnn_only", Network(dnn_spec(hidden=4, depth=1))),
         "BLSTM": ("blstm", blstm)},
        seqs, lengths=(4, 8))
    assert report.models() == ["HMM", "DNN", "BLSTM"]
    assert len(report.rows) == 6 and all(r[3] == 160 for r in report.rows)
    # the HMM accuracy recomputed by hand at 4 bars
    pred = np.concatenate([predict_segmented("hmm", params, s, 4) for s in seqs])
    true = np.concatenate([s.labels for s in seqs])
    assert report.accuracy("HMM", 4) == pytest.approx(100 * np.mean(pred == true))
    assert set(mats) == {"HMM", "DNN", "BLSTM"}
    assert all(m.counts.sum() == 160 for m in mats.values())
    assert "average" in report.table()


def test_run_experiment_empty():
    with pytest.raises(ValueError):
        run_experiment({}, [])


def test_report_csv_round_trip():
    report = AccuracyReport([("HMM", 4, 40.33, 10), ("BLSTM", 4, 50.5512345, 10)])
    buf = io.StringIO()
    write_report_csv(report, buf)
    assert buf.getvalue().splitlines()[0] == "model,bars,accuracy_percent"
    back = read_report_csv(io.StringIO(buf.getvalue()))
    assert back.accuracy("HMM", 4) == 40.33 and back.accuracy("BLSTM", 4) == 50.5512
    assert back.average("HMM") == 40.33


def test_matrix_csv():
    m = confusion([0, 0, 1], [0, 1, 1])
    buf = io.StringIO()
    write_matrix_csv(m, buf)
    rows = buf.getvalue().splitlines()
    assert len(rows) == 24 and rows[0].split(",")[:2] == ["0.5", "0.5"]
    buf = io.StringIO()
    write_matrix_csv(m, buf, normalized=False)
    assert buf.getvalue().splitlines()[0].split(",")[:2] == ["1", "1"]


def test_pgm_round_trip():
    m = confusion([0, 0, 1, 2], [0, 1, 1, 2])
    data = matrix_to_pgm(m)
    assert data.startswith(b"P5\n24 24\n255\n")
    pixels = read_pgm(data)
    assert pixels[0, 0] == 128 and pixels[1, 1] == 255 and pixels[3, 3] == 0
    big = read_pgm(matrix_to_pgm(m, scale=3))
    assert big.shape == (72, 72) and np.array_equal(big[::3, ::3], pixels)


def test_read_pgm_rejects_other_formats():
    with pytest.raises(ValueError):
        read_pgm(b"P2\n1 1\n255\n0")


def test_perfect_model_scores_100_everywhere():
    # each bar sounds only the root of its (major) chord and the HMM emits exactly that
    rng = np.random.default_rng(0)
    seqs = []
    for i in range(5):
        labels = rng.integers(0, 12, size=int(rng.integers(3, 20)))
        seqs.append(BarSequence(f"s{i}", np.eye(12)[labels], labels))
    emission = np.full((24, 12), 0.0)
    emission[:12] = np.eye(12)
    emission[12:] = 1 / 12
    oracle = HmmParams(np.full(24, 1 / 24), np.full((24, 24), 1 / 24), emission, 0.0)
    report, _ = run_experiment({"oracle": ("hmm", oracle)}, seqs)
    assert [r[2] for r in report.rows] == [100.0] * 4
