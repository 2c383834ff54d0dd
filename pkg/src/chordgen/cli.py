"""Command-line pipeline: ingest, preprocess, train, generate, evaluate.

Exit codes: 0 success, 1 usage error, 2 data error, 3 training failure.

The optional ``--config`` file is INI-style (``key = value`` under section
headers); command-line flags override it::

    [run]
    seed = 0
    bars = 4
    train_fraction = 0.8

    [train]
    batch_size = 512
    patience = 10
    max_epochs = 200
    validation_fraction = 0.1
    lr = 0.001

    [model]
    dnn_hidden = 128
    dnn_depth = 3
    blstm_hidden = 128
    blstm_depth = 2
    dropout = 0.2
    smoothing_alpha = 0.01
    scaled_likelihood = false

    [chord_quality]
    # extra chord-type -> major/minor entries
    m7b9 = minor
"""
from __future__ import annotations

import argparse
import configparser
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from . import evaluation, harmonizers, hmm, leadsheet, preprocess, seeds
from .neural import TrainConfig, TrainingError

log = logging.getLogger("chordgen")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_TRAIN = 0, 1, 2, 3

MODEL_FLAGS = {"hmm": "hmm", "dnn-hmm": "dnn_hmm", "dnn": "dnn_only", "blstm": "blstm"}
MELODY_SUFFIXES = (".xml", ".musicxml")

DEFAULTS = {
    "run": {"seed": "0", "bars": "4", "train_fraction": "0.8"},
    "train": {"batch_size": "512", "patience": "10", "max_epochs": "200",
              "validation_fraction": "0.1", "lr": "0.001"},
    "model": {"dnn_hidden": "128", "dnn_depth": "3", "blstm_hidden": "128", "blstm_depth": "2",
              "dropout": "0.2", "smoothing_alpha": "0.01", "scaled_likelihood": "false"},
    "chord_quality": {},
}


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class RunConfig:
    """Config file values with flag overrides applied."""

    def __init__(self, path=None, seed=None, bars=None):
        self.parser = configparser.ConfigParser()
        self.parser.read_dict(DEFAULTS)
        if path is not None:
            if not Path(path).is_file():
                raise UsageError(f"config file {path} not found")
            self.parser.read(path, encoding="utf-8")
        run = self.parser["run"]
        self.seed = int(run["seed"]) if seed is None else seed
        self.bars = int(run["bars"]) if bars is None else bars
        self.train_fraction = float(run["train_fraction"])
        m = self.parser["model"]
        self.dnn_hidden, self.dnn_depth = int(m["dnn_hidden"]), int(m["dnn_depth"])
        self.blstm_hidden, self.blstm_depth = int(m["blstm_hidden"]), int(m["blstm_depth"])
        self.dropout = float(m["dropout"])
        self.smoothing_alpha = float(m["smoothing_alpha"])
        self.scaled_likelihood = m.getboolean("scaled_likelihood")
        self.quality_table = dict(preprocess.QUALITY_TABLE)
        for k, v in self.parser["chord_quality"].items():
            if v not in (preprocess.MAJOR, preprocess.MINOR):
                raise UsageError(f"chord quality for {k!r} must be major or minor")
            self.quality_table[k.lower()] = v
        self.train_config()

    def train_config(self) -> TrainConfig:
        t = self.parser["train"]
        return TrainConfig(batch_size=int(t["batch_size"]), patience=int(t["patience"]),
                           max_epochs=int(t["max_epochs"]),
                           validation_fraction=float(t["validation_fraction"]),
                           seed=self.seed, lr=float(t["lr"]))


# ---------------------------------------------------------------------------
# commands

def cmd_ingest(args, cfg: RunConfig) -> int:
    corpus = Path(args.corpus)
    if not corpus.is_dir():
        raise DataError(f"cannot read corpus directory {corpus}")
    out = Path(args.out or "dataset")
    out.mkdir(parents=True, exist_ok=True)
    files = sorted(p for p in corpus.iterdir() if p.suffix.lower() in MELODY_SUFFIXES)
    manifest = []
    chord_ok = lambda t: preprocess.is_mappable(t, cfg.quality_table)  # noqa: E731
    for path in files:
        try:
            song = leadsheet.parse_musicxml(path.read_bytes(), song_id=path.stem)
        except leadsheet.LeadSheetError as exc:
            manifest.append((path.name, "rejected", str(exc)))
            log.warning("%s: %s", path.name, exc)
            continue
        reason = leadsheet.rejection_reason(song, chord_ok)
        if reason is not None:
            manifest.append((path.name, "rejected", reason))
            continue
        leadsheet.save_csv(song, out / f"{song.id}.csv")
        manifest.append((path.name, "accepted", ""))
    with open(out / "manifest.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["file", "status", "reason"])
        w.writerows(manifest)
    accepted = sum(1 for m in manifest if m[1] == "accepted")
    print(f"ingested {accepted} of {len(manifest)} files into {out}")
    return EXIT_OK


def _load_dataset(directory: Path):
    if not directory.is_dir():
        raise DataError(f"dataset directory {directory} not found")
    songs = []
    for path in sorted(directory.glob("*.csv")):
        if path.name == "manifest.csv":
            continue
        try:
            songs.append(leadsheet.load_csv(path))
        except leadsheet.LeadSheetError as exc:
            raise DataError(f"{path.name}: {exc}") from exc
    return songs


def _write_sequences(path, sequences):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        preprocess.dump_sequences(sequences, fh)


def _read_sequences(path):
    if not Path(path).is_file():
        raise DataError(f"{path} not found; run `chordgen preprocess` first")
    with open(path, encoding="utf-8", newline="") as fh:
        return preprocess.load_sequences(fh)


def cmd_preprocess(args, cfg: RunConfig) -> int:
    songs = leadsheet.filter_songs(_load_dataset(Path(args.dataset)),
                                   lambda t: preprocess.is_mappable(t, cfg.quality_table))
    if len(songs) < 2:
        raise DataError("need at least two usable songs")
    split_seed = int(seeds.rng(cfg.seed, "split").integers(2 ** 31))
    split = leadsheet.split_dataset(songs, cfg.train_fraction, split_seed)
    out = Path(args.out or "prepared")
    out.mkdir(parents=True, exist_ok=True)
    to_seq = lambda s: preprocess.song_to_sequence(s, cfg.quality_table)  # noqa: E731
    _write_sequences(out / "train_sequences.csv", [to_seq(s) for s in split.train])
    _write_sequences(out / "test_sequences.csv", [to_seq(s) for s in split.test])
    with open(out / "split.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["song_id", "split"])
        w.writerows([(s.id, "train") for s in split.train] + [(s.id, "test") for s in split.test])
    print(f"{len(split.train)} training and {len(split.test)} test songs in {out}")
    return EXIT_OK


def _model_name(kind, bars):
    return f"blstm_T{bars}" if kind == "blstm" else kind


def cmd_train(args, cfg: RunConfig) -> int:
    if args.model is None:
        raise UsageError("--model is required")
    kind = MODEL_FLAGS[args.model]
    sequences = _read_sequences(Path(args.prepared) / "train_sequences.csv")
    if not sequences:
        raise DataError("empty training set")
    out = Path(args.out or "models")
    out.mkdir(parents=True, exist_ok=True)
    name = _model_name(kind, cfg.bars)
    epochs = []
    record = lambda r: epochs.append(r)  # noqa: E731
    tc = cfg.train_config()
    if kind == "hmm":
        model = hmm.fit_hmm(sequences, cfg.smoothing_alpha)
    elif kind == "dnn_hmm":
        model, _ = harmonizers.train_dnn_hmm(
            sequences, tc, cfg.smoothing_alpha, cfg.scaled_likelihood, hidden=cfg.dnn_hidden,
            depth=cfg.dnn_depth, dropout=cfg.dropout, on_epoch=record)
    elif kind == "dnn_only":
        feats = np.concatenate([s.features for s in sequences])
        labels = np.concatenate([s.labels for s in sequences])
        groups = np.concatenate([[s.song_id] * len(s) for s in sequences])
        model, _ = harmonizers.train_dnn(feats, labels, tc, cfg.dnn_hidden, cfg.dnn_depth,
                                         cfg.dropout, groups=groups, on_epoch=record)
    else:
        windows = [w for s in sequences for w in preprocess.make_windows(s, cfg.bars)]
        if not windows:
            raise DataError(f"no training song has {cfg.bars} bars")
        X, y, groups = preprocess.stack_windows(windows)
        model, _ = harmonizers.train_blstm(X, y, tc, cfg.blstm_hidden, cfg.blstm_depth,
                                           cfg.dropout, groups=groups, on_epoch=record)
    harmonizers.save_model(kind, model, out / f"{name}.model")
    with open(out / f"{name}.log", "w", encoding="utf-8", newline="") as fh:
        fh.write("epoch,train_loss,val_loss\n")
        for r in epochs:
            fh.write(f"{r.epoch},{r.train_loss!r},{r.val_loss!r}\n")
    print(f"wrote {out / (name + '.model')}")
    return EXIT_OK


def _read_melody(path: Path):
    if not path.is_file():
        raise DataError(f"melody file {path} not found")
    try:
        if path.suffix.lower() in MELODY_SUFFIXES:
            song = leadsheet.parse_musicxml(path.read_bytes(), song_id=path.stem,
                                            require_harmony=False)
        else:
            song = leadsheet.load_csv(path)
    except leadsheet.LeadSheetError as exc:
        raise DataError(str(exc)) from exc
    return preprocess.melody_features(song)


def cmd_generate(args, cfg: RunConfig) -> int:
    model_path = Path(args.model_file)
    if not model_path.is_file():
        raise DataError(f"model file {model_path} not found")
    try:
        kind, model = harmonizers.load_model(model_path)
    except (ValueError, IndexError) as exc:
        raise DataError(f"{model_path}: {exc}") from exc
    xs = _read_melody(Path(args.melody))
    if len(xs) == 0:
        raise UsageError("melody has no bars")
    T = args.bars if args.bars is not None else (model.T if kind == "blstm" else cfg.bars)
    text = harmonizers.format_progression(harmonizers.generate(kind, model, xs, T))
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_evaluate(args, cfg: RunConfig) -> int:
    sequences = _read_sequences(Path(args.prepared) / "test_sequences.csv")
    if not sequences:
        raise DataError("empty test set")
    models = {}
    for path in map(Path, args.models):
        if not path.is_file():
            raise DataError(f"model file {path} not found")
        kind, model = harmonizers.load_model(path)
        if kind == "blstm":
            models.setdefault("blstm", ("blstm", {}))[1][model.T] = model
        else:
            models[kind] = (kind, model)
    lengths = args.lengths or list(evaluation.DEFAULT_LENGTHS)
    for name, (kind, model) in models.items():
        if isinstance(model, dict):
            # lengths without a dedicated BLSTM use the closest trained window
            for T in lengths:
                if T not in model:
                    model[T] = model[min(model, key=lambda k: (abs(k - T), k))]
    report, matrices = evaluation.run_experiment(models, sequences, lengths,
                                                 confusion_length=lengths[0])
    out = Path(args.out or "reports")
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "accuracy.csv", "w", encoding="utf-8", newline="") as fh:
        evaluation.write_report_csv(report, fh)
    for name, matrix in matrices.items():
        with open(out / f"confusion_{name}.csv", "w", encoding="utf-8", newline="") as fh:
            evaluation.write_matrix_csv(matrix, fh)
        (out / f"confusion_{name}.pgm").write_bytes(evaluation.matrix_to_pgm(matrix))
    print(report.table())
    return EXIT_OK


# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI-style config file")
    common.add_argument("--seed", type=int, help="master seed (overrides the config)")
    common.add_argument("--bars", type=int, help="window / segment length T in bars")
    common.add_argument("--out", help="output directory (file for generate)")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="chordgen", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    p = sub.add_parser("ingest", parents=[common], help="MusicXML directory -> dataset CSVs")
    p.add_argument("corpus")
    p.set_defaults(func=cmd_ingest)
    p = sub.add_parser("preprocess", parents=[common], help="dataset CSVs -> split feature sequences")
    p.add_argument("dataset")
    p.set_defaults(func=cmd_preprocess)
    p = sub.add_parser("train", parents=[common], help="train one harmonizer")
    p.add_argument("prepared")
    p.add_argument("--model", choices=sorted(MODEL_FLAGS))
    p.set_defaults(func=cmd_train)
    p = sub.add_parser("generate", parents=[common], help="harmonize a melody")
    p.add_argument("model_file")
    p.add_argument("melody", help="MusicXML or dataset CSV")
    p.set_defaults(func=cmd_generate)
    p = sub.add_parser("evaluate", parents=[common], help="accuracy table and confusion matrices")
    p.add_argument("prepared")
    p.add_argument("models", nargs="+")
    p.add_argument("--lengths", type=int, nargs="+", help="melody lengths (default 4 8 12 16)")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        try:
            cfg = RunConfig(args.config, args.seed, args.bars)
        except (ValueError, configparser.Error) as exc:
            raise UsageError(f"bad configuration: {exc}") from exc
        if cfg.bars < 1:
            raise UsageError("--bars must be at least 1")
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"chordgen: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, preprocess.PreprocessError, leadsheet.LeadSheetError,
            harmonizers.HarmonizerError, hmm.HmmError) as exc:
        print(f"chordgen: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingError as exc:
        print(f"chordgen: training failed: {exc}", file=sys.stderr)
        return EXIT_TRAIN


if __name__ == "__main__":
    sys.exit(main())
