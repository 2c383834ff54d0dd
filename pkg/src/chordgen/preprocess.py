"""Turn songs into model-ready per-bar sequences.

Each bar becomes a 12-dimensional pitch-class duration vector (transposed so
the key's tonic is C, durations divided by the nominal bar length) and one of
24 chord classes: ``root`` for major, ``12 + root`` for minor.
"""
from __future__ import annotations

import csv
import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional

import numpy as np

from .leadsheet import UNITS_PER_WHOLE, PitchSpec, Song

N_PITCH_CLASSES = 12
N_CHORDS = 24

STEP_PITCH = {"C": 0, "D": 2, "E": 4, "F": 5, "G": 7, "A": 9, "B": 11}
PITCH_NAMES = ["C", "C#", "D", "D#", "E", "F", "F#", "G", "G#", "A", "A#", "B"]
CHORD_NAMES = [f"{p}:maj" for p in PITCH_NAMES] + [f"{p}:min" for p in PITCH_NAMES]

MAJOR, MINOR = "major", "minor"

# MusicXML <kind> values plus common lead-sheet shorthands
QUALITY_TABLE = {
    "major": MAJOR, "maj": MAJOR, "": MAJOR,
    "augmented": MAJOR, "aug": MAJOR, "+": MAJOR,
    "dominant": MAJOR, "7": MAJOR, "9": MAJOR, "11": MAJOR, "13": MAJOR,
    "major-seventh": MAJOR, "maj7": MAJOR, "augmented-seventh": MAJOR,
    "major-sixth": MAJOR, "6": MAJOR, "dominant-ninth": MAJOR, "major-ninth": MAJOR,
    "dominant-11th": MAJOR, "major-11th": MAJOR, "dominant-13th": MAJOR,
    "major-13th": MAJOR, "suspended-second": MAJOR, "suspended-fourth": MAJOR,
    "sus2": MAJOR, "sus4": MAJOR, "sus": MAJOR, "power": MAJOR, "5": MAJOR,
    "pedal": MAJOR, "neapolitan": MAJOR, "italian": MAJOR, "french": MAJOR,
    "german": MAJOR,
    "minor": MINOR, "min": MINOR, "m": MINOR, "minor-seventh": MINOR, "m7": MINOR,
    "min7": MINOR, "minor-sixth": MINOR, "m6": MINOR, "minor-ninth": MINOR,
    "minor-11th": MINOR, "minor-13th": MINOR, "major-minor": MINOR,
    "diminished": MINOR, "dim": MINOR, "diminished-seventh": MINOR, "dim7": MINOR,
    "half-diminished": MINOR, "m7b5": MINOR, "tristan": MINOR,
}

_MINOR_PATTERN = re.compile(r"^(min|m(?![a-z])|mi|mm|-|dim|o(?![a-z])|ø|half)")
_MAJOR_PATTERN = re.compile(r"^(maj|dom|aug|sus|add|\+|\d|ma(?!x))")


class PreprocessError(ValueError):
    pass


@dataclass
class BarSequence:
    song_id: str
    features: np.ndarray  # (n_bars, 12)
    labels: np.ndarray  # (n_bars,) int
    pickup: np.ndarray = field(default=None)  # (n_bars,) bool

    def __post_init__(self):
        if len(self.features) != len(self.labels):
            raise PreprocessError("features and labels differ in length")
        if self.pickup is None:
            self.pickup = np.zeros(len(self.labels), dtype=bool)

    def __len__(self):
        return len(self.labels)


@dataclass
class Window:
    features: np.ndarray  # (T, 12)
    labels: np.ndarray  # (T,)
    song_id: str = ""

    @property
    def T(self) -> int:
        return len(self.labels)


def key_shift_semitones(key_fifths: int) -> int:
    """Semitone shift that moves a major key's tonic to C, in (-6, 6]."""
    if not -7 <= key_fifths <= 7:
        raise PreprocessError(f"key_fifths {key_fifths} outside -7..7")
    shift = (-7 * key_fifths) % 12
    return shift - 12 if shift > 6 else shift


def pitch_class(p: PitchSpec) -> int:
    if p.is_rest:
        raise PreprocessError("a rest has no pitch class")
    return (STEP_PITCH[p.step] + p.alter) % 12


def chord_quality(chord_type: str, table: Optional[Mapping[str, str]] = None) -> str:
    """Reduce a chord type string to ``"major"`` or ``"minor"``."""
    table = QUALITY_TABLE if table is None else table
    key = chord_type.strip().lower()
    if key in table:
        return table[key]
    if _MINOR_PATTERN.match(key):
        return MINOR
    if _MAJOR_PATTERN.match(key):
        return MAJOR
    raise PreprocessError(f"cannot map chord type {chord_type!r} to major/minor")


def is_mappable(chord_type: str, table=None) -> bool:
    try:
        chord_quality(chord_type, table)
    except PreprocessError:
        return False
    return True


def chord_class(chord_root: PitchSpec, chord_type: str, shift: int, table=None) -> int:
    offset = 12 if chord_quality(chord_type, table) == MINOR else 0
    return offset + (pitch_class(chord_root) + shift) % 12


def chord_name(index: int) -> str:
    return CHORD_NAMES[index]


def chord_index(name: str) -> int:
    try:
        return CHORD_NAMES.index(name)
    except ValueError:
        raise PreprocessError(f"unknown chord name {name!r}") from None


def bar_feature_exact(bar_rows, shift: int) -> list:
    """Per-pitch-class duration fractions of one bar, as exact rationals."""
    acc = [Fraction(0)] * N_PITCH_CLASSES
    for row in bar_rows:
        if row.note_duration <= 0:
            raise PreprocessError(f"bar {row.measure}: zero-duration row")
        if row.note.is_rest:
            continue
        length = Fraction(UNITS_PER_WHOLE * row.time_sig_num, row.time_sig_den)
        acc[(pitch_class(row.note) + shift) % 12] += row.note_duration / length
    return acc


def bar_feature(bar_rows, shift: int) -> np.ndarray:
    return np.array([float(v) for v in bar_feature_exact(bar_rows, shift)])


def song_to_sequence(song: Song, table=None) -> BarSequence:
    """Features and chord labels for every bar; each bar is shifted by its own key."""
    feats, labels, pickup = [], [], []
    for rows in song.bars():
        head = rows[0]
        if head.key_mode != "major":
            raise PreprocessError(f"song {song.id!r} bar {head.measure}: not in a major key")
        if not head.has_chord:
            raise PreprocessError(f"song {song.id!r} bar {head.measure}: no chord")
        shift = key_shift_semitones(head.key_fifths)
        feats.append(bar_feature(rows, shift))
        labels.append(chord_class(head.chord_root, head.chord_type, shift, table))
        pickup.append(sum(r.note_duration for r in rows) < head.bar_length)
    return BarSequence(song.id,
                       np.array(feats, dtype=float).reshape(-1, N_PITCH_CLASSES),
                       np.array(labels, dtype=int), np.array(pickup, dtype=bool))


def melody_features(song: Song) -> np.ndarray:
    """(bars, 12) features of a melody, chords not required.

    The shift comes from each bar's key signature whatever its mode, so a
    minor-key melody lands on its relative major.
    """
    feats = [bar_feature(rows, key_shift_semitones(rows[0].key_fifths)) for rows in song.bars()]
    return np.array(feats, dtype=float).reshape(-1, N_PITCH_CLASSES)


def make_windows(seq: BarSequence, T: int) -> list:
    """Length-``T`` windows with a one-bar hop; sequences shorter than ``T`` give none."""
    if T < 1:
        raise PreprocessError("window length must be at least 1")
    return [Window(seq.features[i:i + T], seq.labels[i:i + T], seq.song_id)
            for i in range(len(seq) - T + 1)]


def stack_windows(windows):
    """Arrays ``(X, y, groups)`` of shapes (N, T, 12), (N, T), (N,)."""
    if not windows:
        raise PreprocessError("no windows to stack")
    X = np.stack([w.features for w in windows])
    y = np.stack([w.labels for w in windows])
    groups = np.array([w.song_id for w in windows])
    return X, y, groups


def segments(seq_len: int, T: int) -> list:
    """Disjoint consecutive ``slice`` objects of length ``T``; the tail may be shorter."""
    return [slice(i, min(i + T, seq_len)) for i in range(0, seq_len, T)]


def dump_sequences(sequences, sink) -> None:
    """Debug CSV: song id, bar index, 12 feature columns, label index."""
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(["song_id", "bar"] + [f"pc{k}" for k in range(12)] + ["label"])
    for seq in sequences:
        for i, (x, y) in enumerate(zip(seq.features, seq.labels), start=1):
            writer.writerow([seq.song_id, i] + [repr(float(v)) for v in x] + [int(y)])


def load_sequences(source) -> list:
    """Inverse of :func:`dump_sequences`."""
    reader = csv.reader(source)
    header = next(reader)
    if header[:2] != ["song_id", "bar"] or header[-1] != "label":
        raise PreprocessError("bad sequence dump header")
    grouped = {}
    for row in reader:
        feats, labels = grouped.setdefault(row[0], ([], []))
        feats.append([float(v) for v in row[2:14]])
        labels.append(int(row[14]))
    return [BarSequence(sid, np.array(f, dtype=float), np.array(l, dtype=int))
            for sid, (f, l) in grouped.items()]
