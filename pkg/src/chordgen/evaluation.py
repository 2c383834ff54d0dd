"""Accuracy per melody length, normalized confusion matrices and report files."""
from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from . import harmonizers
from .preprocess import N_CHORDS, segments

DEFAULT_LENGTHS = (4, 8, 12, 16)


def accuracy(true, pred) -> float:
    true = np.asarray(true)
    pred = np.asarray(pred)
    if true.shape != pred.shape:
        raise ValueError(f"length mismatch: {true.shape} vs {pred.shape}")
    if true.size == 0:
        raise ValueError("accuracy of an empty sample is undefined")
    return float(np.mean(true == pred))


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (24, 24) ints, rows true, columns predicted

    @property
    def normalized(self) -> np.ndarray:
        totals = self.counts.sum(axis=1, keepdims=True)
        return np.divide(self.counts, totals, out=np.zeros(self.counts.shape), where=totals > 0)

    def column_mass(self, columns) -> float:
        """Share of all predictions that fall into ``columns``."""
        total = self.counts.sum()
        return float(self.counts[:, list(columns)].sum() / total) if total else 0.0


def confusion(true, pred, n_classes: int = N_CHORDS) -> ConfusionMatrix:
    true = np.asarray(true, dtype=int)
    pred = np.asarray(pred, dtype=int)
    if true.shape != pred.shape:
        raise ValueError(f"length mismatch: {true.shape} vs {pred.shape}")
    counts = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(counts, (true, pred), 1)
    return ConfusionMatrix(counts)


@dataclass
class AccuracyReport:
    rows: list = field(default_factory=list)  # (model, bars, accuracy_percent, n_bars)

    def accuracy(self, model, bars) -> float:
        return next(r[2] for r in self.rows if r[0] == model and r[1] == bars)

    def models(self):
        return list(dict.fromkeys(r[0] for r in self.rows))

    def average(self, model) -> float:
        vals = [r[2] for r in self.rows if r[0] == model]
        return float(np.mean(vals))

    def table(self) -> str:
        """Plain-text table with one column per model and an average row."""
        models = self.models()
        lengths = list(dict.fromkeys(r[1] for r in self.rows))
        lines = ["bars\t" + "\t".join(models)]
        for T in lengths:
            lines.append(f"{T}\t" + "\t".join(f"{self.accuracy(m, T):.2f}" for m in models))
        lines.append("average\t" + "\t".join(f"{self.average(m):.2f}" for m in models))
        return "\n".join(lines)


def predict_segmented(kind, model, seq, T) -> np.ndarray:
    """Predict one song in disjoint ``T``-bar segments (the tail at its natural length)."""
    out = np.empty(len(seq), dtype=int)
    for seg in segments(len(seq), T):
        out[seg] = harmonizers.generate(kind, model, seq.features[seg], T)
    return out


def run_experiment(models, test_sequences, lengths=DEFAULT_LENGTHS, confusion_length=4):
    """Evaluate every model at every melody length.

    ``models`` maps a display name to ``(kind, model)``, or to ``(kind, {T: model})``
    when a separate model was trained per length.  Returns the report and a dict of
    confusion matrices at ``confusion_length`` bars; a ``dnn_only`` model gets its
    matrix at one bar, its natural input.
    """
    test_sequences = [s for s in test_sequences if len(s)]
    if not test_sequences:
        raise ValueError("empty test set")
    report = AccuracyReport()
    matrices = {}
    for name, (kind, model) in models.items():
        for T in lengths:
            m = model[T] if isinstance(model, dict) else model
            true, pred = [], []
            for seq in test_sequences:
                true.append(seq.labels)
                pred.append(predict_segmented(kind, m, seq, T))
            true = np.concatenate(true)
            pred = np.concatenate(pred)
            report.rows.append((name, T, 100.0 * accuracy(true, pred), int(true.size)))
            if T == confusion_length and kind != "dnn_only":
                matrices[name] = confusion(true, pred)
        if kind == "dnn_only":
            m = model[min(model)] if isinstance(model, dict) else model
            true = np.concatenate([s.labels for s in test_sequences])
            pred = np.concatenate([predict_segmented(kind, m, s, 1) for s in test_sequences])
            matrices[name] = confusion(true, pred)
    return report, matrices


# ---------------------------------------------------------------------------
# files

def write_report_csv(report: AccuracyReport, sink) -> None:
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["model", "bars", "accuracy_percent"])
    for model, bars, acc, _ in report.rows:
        writer.writerow([model, bars, f"{acc:.4f}"])


def read_report_csv(source) -> AccuracyReport:
    reader = csv.reader(source)
    header = next(reader)
    if header != ["model", "bars", "accuracy_percent"]:
        raise ValueError(f"bad report header {header!r}")
    return AccuracyReport([(r[0], int(r[1]), float(r[2]), 0) for r in reader if r])


def write_matrix_csv(matrix: ConfusionMatrix, sink, normalized=True) -> None:
    values = matrix.normalized if normalized else matrix.counts
    writer = csv.writer(sink, lineterminator="\n")
    for row in values:
        writer.writerow([format(float(v), ".17g") if normalized else int(v) for v in row])


def matrix_to_pgm(matrix: ConfusionMatrix, scale: int = 1) -> bytes:
    """8-bit binary PGM of the normalized matrix, 0 -> black, 1 -> white."""
    pixels = np.rint(np.clip(matrix.normalized, 0, 1) * 255).astype(np.uint8)
    if scale > 1:
        pixels = np.kron(pixels, np.ones((scale, scale), dtype=np.uint8))
    h, w = pixels.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pixels.tobytes()


def read_pgm(data: bytes) -> np.ndarray:
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit binary PGM")
    w, h = (int(v) for v in dims.split())
    return np.frombuffer(body, dtype=np.uint8).reshape(h, w)
