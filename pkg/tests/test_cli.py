import csv

import numpy as np
import pytest

from chordgen import synthetic
from chordgen.cli import main
from chordgen.evaluation import read_report_csv
from chordgen.leadsheet import load_csv, save_csv

FAST = """[run]
seed = 3
train_fraction = 0.75

[train]
batch_size = 16
max_epochs = 3
patience = 2

[model]
dnn_hidden = 6
dnn_depth = 1
blstm_hidden = 4
blstm_depth = 1
"""


def _corpus(directory, n_major=6, n_minor=0, corrupt=False):
    directory.mkdir()
    for i in range(n_major):
        song = synthetic.random_song(np.random.default_rng(i), n_bars=6, key_fifths=i % 3 - 1,
                                     song_id=f"maj{i}")
        (directory / f"maj{i}.xml").write_text(synthetic.to_musicxml(song))
    for i in range(n_minor):
        song = synthetic.random_song(np.random.default_rng(100 + i), n_bars=4, mode="minor")
        (directory / f"min{i}.xml").write_text(synthetic.to_musicxml(song))
    if corrupt:
        (directory / "broken.xml").write_text("<score-partwise><part>")
    return directory


def _manifest(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_ingest_accepts_and_rejects(tmp_path, capsys):
    corpus = _corpus(tmp_path / "xml", n_major=3, n_minor=1, corrupt=True)
    assert main(["ingest", str(corpus), "--out", str(tmp_path / "ds")]) == 0
    csvs = sorted(p.name for p in (tmp_path / "ds").glob("*.csv") if p.name != "manifest.csv")
    assert csvs == ["maj0.csv", "maj1.csv", "maj2.csv"]
    rows = {r["file"]: r for r in _manifest(tmp_path / "ds" / "manifest.csv")}
    assert rows["min0.xml"]["status"] == "rejected" and "minor" in rows["min0.xml"]["reason"]
    assert rows["broken.xml"]["status"] == "rejected" and "malformed" in rows["broken.xml"]["reason"]
    assert sum(r["status"] == "accepted" for r in rows.values()) == 3


def test_ingest_empty_directory(tmp_path):
    (tmp_path / "xml").mkdir()
    assert main(["ingest", str(tmp_path / "xml"), "--out", str(tmp_path / "ds")]) == 0
    assert _manifest(tmp_path / "ds" / "manifest.csv") == []


def test_ingest_missing_directory(tmp_path):
    assert main(["ingest", str(tmp_path / "nope"), "--out", str(tmp_path / "ds")]) == 2


def test_usage_errors(tmp_path, capsys):
    assert main([]) == 1
    with pytest.raises(SystemExit) as exc:
        main(["train", "x", "--model", "svm"])
    assert exc.value.code == 1
    assert main(["ingest", str(tmp_path), "--config", str(tmp_path / "missing.ini")]) == 1
    assert main(["ingest", str(tmp_path), "--bars", "0"]) == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[train]\nbatch_size = lots\n")
    assert main(["ingest", str(tmp_path), "--config", str(bad)]) == 1
    bad.write_text("[chord_quality]\nm7b9 = sideways\n")
    assert main(["ingest", str(tmp_path), "--config", str(bad)]) == 1


def _pipeline(root, corpus):
    cfg = root / "fast.ini"
    cfg.write_text(FAST)
    c = ["--config", str(cfg)]
    assert main(["ingest", str(corpus), "--out", str(root / "ds")] + c) == 0
    assert main(["preprocess", str(root / "ds"), "--out", str(root / "prep")] + c) == 0
    for model in ("hmm", "dnn-hmm", "dnn", "blstm"):
        assert main(["train", str(root / "prep"), "--model", model, "--out", str(root / "models")] + c) == 0
    models = sorted(str(p) for p in (root / "models").glob("*.model"))
    assert main(["evaluate", str(root / "prep"), *models, "--lengths", "4", "8",
                 "--out", str(root / "reports")] + c) == 0
    return models


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    root = tmp_path_factory.mktemp("run")
    corpus = _corpus(root / "xml", n_major=8)
    return root, corpus, _pipeline(root, corpus)


def test_pipeline_outputs(pipeline):
    root, _, models = pipeline
    names = sorted(p.name for p in (root / "models").iterdir())
    assert names == ["blstm_T4.log", "blstm_T4.model", "dnn_hmm.log", "dnn_hmm.model",
                     "dnn_only.log", "dnn_only.model", "hmm.log", "hmm.model"]
    log_lines = (root / "models" / "blstm_T4.log").read_text().splitlines()
    assert log_lines[0] == "epoch,train_loss,val_loss" and len(log_lines) >= 2
    split = _manifest(root / "prep" / "split.csv")
    assert sum(r["split"] == "train" for r in split) == 6 and len(split) == 8
    with open(root / "reports" / "accuracy.csv") as fh:
        report = read_report_csv(fh)
    assert len(report.rows) == 4 * 2
    for name in ("hmm", "dnn_hmm", "dnn_only", "blstm"):
        assert (root / "reports" / f"confusion_{name}.pgm").read_bytes().startswith(b"P5\n24 24\n")
        assert len((root / "reports" / f"confusion_{name}.csv").read_text().splitlines()) == 24
    assert (root / "models" / "dnn_hmm.model").read_text().count("\nnet ") == 1


def test_pipeline_is_deterministic(pipeline, tmp_path):
    root, corpus, models = pipeline
    _pipeline(tmp_path, corpus)
    for path in models:
        name = path.rsplit("/", 1)[-1]
        assert (tmp_path / "models" / name).read_bytes() == (root / "models" / name).read_bytes()
    for p in (root / "reports").iterdir():
        assert (tmp_path / "reports" / p.name).read_bytes() == p.read_bytes()


def test_evaluate_twice_identical(pipeline, tmp_path):
    root, _, models = pipeline
    assert main(["evaluate", str(root / "prep"), *models, "--lengths", "4", "8",
                 "--out", str(tmp_path / "again")]) == 0
    assert (tmp_path / "again" / "accuracy.csv").read_bytes() == \
        (root / "reports" / "accuracy.csv").read_bytes()


@pytest.mark.parametrize("suffix", [".xml", ".csv"])
def test_generate_from_musicxml_and_csv(pipeline, tmp_path, capsys, suffix):
    root, corpus, models = pipeline
    melody = corpus / "maj0.xml" if suffix == ".xml" else root / "ds" / "maj0.csv"
    outputs = []
    for model in models:
        out = tmp_path / "prog.txt"
        assert main(["generate", model, str(melody), "--out", str(out)]) == 0
        outputs.append(out.read_text())
        assert main(["generate", model, str(melody), "--out", str(out)]) == 0
        assert out.read_text() == outputs[-1]
    for text in outputs:
        lines = text.splitlines()
        assert [l.split(",")[0] for l in lines] == [str(i) for i in range(1, 7)]
        assert all(l.split(",")[1][-4:] in (":maj", ":min") for l in lines)
    assert main(["generate", models[0], str(melody)]) == 0
    assert capsys.readouterr().out.startswith("1,")


def test_generate_melody_without_chords(pipeline, tmp_path, capsys):
    root, _, models = pipeline
    song = synthetic.random_song(np.random.default_rng(9), n_bars=4)
    xml = synthetic.to_musicxml(song)
    while "<harmony>" in xml:
        start = xml.index("<harmony>")
        xml = xml[:start] + xml[xml.index("</harmony>") + len("</harmony>"):]
    (tmp_path / "bare.xml").write_text(xml)
    assert main(["generate", models[0], str(tmp_path / "bare.xml")]) == 0
    assert len(capsys.readouterr().out.splitlines()) == 4


def test_generate_errors(pipeline, tmp_path):
    root, _, models = pipeline
    empty = tmp_path / "empty.csv"
    song = load_csv(root / "ds" / "maj0.csv")
    song.events.clear()
    save_csv(song, empty)
    assert main(["generate", models[0], str(empty)]) == 1
    assert main(["generate", str(tmp_path / "none.model"), str(empty)]) == 2
    bogus = tmp_path / "bogus.model"
    bogus.write_text("not a model\n")
    assert main(["generate", str(bogus), str(root / "ds" / "maj0.csv")]) == 2


def test_evaluate_missing_model(pipeline, tmp_path):
    root, _, _ = pipeline
    assert main(["evaluate", str(root / "prep"), str(tmp_path / "gone.model")]) == 2


def test_train_without_preprocess(tmp_path):
    assert main(["train", str(tmp_path), "--model", "hmm"]) == 2
    assert main(["train", str(tmp_path)]) == 1


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_training_failure_exit_code(tmp_path):
    # a learning rate this large overflows the weights, so the loss turns non-finite
    root = tmp_path
    _corpus(root / "xml", n_major=6)
    cfg = root / "bad.ini"
    cfg.write_text(FAST.replace("[train]", "[train]\nlr = 1e308"))
    c = ["--config", str(cfg)]
    assert main(["ingest", str(root / "xml"), "--out", str(root / "ds")] + c) == 0
    assert main(["preprocess", str(root / "ds"), "--out", str(root / "prep")] + c) == 0
    assert main(["train", str(root / "prep"), "--model", "dnn", "--out", str(root / "m")] + c) == 3
