"""Lead-sheet ingestion: MusicXML parsing, the tabular CSV format, filtering
and song-level train/test splitting.

Every note (or rest) of the melody becomes one :class:`NoteEvent` row that
also carries the bar's time signature, key and first chord symbol.  Durations
are exact :class:`fractions.Fraction` values measured in sixteenths of a whole
note, so a full 4/4 bar always sums to 16.
"""
from __future__ import annotations

import csv
import io
import random
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import IO, Iterable, Optional

UNITS_PER_WHOLE = 16
UNITS_PER_QUARTER = UNITS_PER_WHOLE // 4

CSV_HEADER = [
    "time", "measure", "key_fifths", "key_mode", "chord_root",
    "chord_type", "note_root", "note_octave", "note_duration",
]

STEPS = "ABCDEFG"
NO_CHORD_TYPE = "none"

# fallback when a note lacks <duration>, in whole notes
_TYPE_LENGTH = {
    "maxima": Fraction(8), "long": Fraction(4), "breve": Fraction(2),
    "whole": Fraction(1), "half": Fraction(1, 2), "quarter": Fraction(1, 4),
    "eighth": Fraction(1, 8), "16th": Fraction(1, 16), "32nd": Fraction(1, 32),
    "64th": Fraction(1, 64), "128th": Fraction(1, 128),
}


class LeadSheetError(Exception):
    """Base class for lead-sheet ingestion failures."""


class MusicXMLError(LeadSheetError):
    """The document is not usable MusicXML."""


class RejectedSong(LeadSheetError):
    """The document parsed but cannot become a training song."""


class CsvFormatError(LeadSheetError):
    """A dataset CSV violates the tabular schema."""


@dataclass(frozen=True)
class PitchSpec:
    step: str = "C"
    alter: int = 0
    octave: int = 0
    is_rest: bool = False

    def __post_init__(self):
        if not self.is_rest:
            if self.step not in STEPS:
                raise ValueError(f"invalid pitch step {self.step!r}")
            if not -2 <= self.alter <= 2:
                raise ValueError(f"alteration {self.alter} outside -2..2")

    @classmethod
    def rest(cls) -> "PitchSpec":
        return cls(is_rest=True)

    @property
    def root(self) -> str:
        """Step plus alteration digit, e.g. ``"F0"``, ``"B-1"``; ``"rest"`` for rests."""
        if self.is_rest:
            return "rest"
        return f"{self.step}{self.alter}"

    @classmethod
    def from_root(cls, text: str, octave: int = 0) -> "PitchSpec":
        text = text.strip()
        if text == "rest":
            return cls.rest()
        if len(text) < 2 or text[0] not in STEPS:
            raise ValueError(f"unparsable pitch root {text!r}")
        return cls(step=text[0], alter=int(text[1:]), octave=octave)

    def __eq__(self, other):
        if not isinstance(other, PitchSpec):
            return NotImplemented
        if self.is_rest or other.is_rest:
            return self.is_rest == other.is_rest
        return (self.step, self.alter, self.octave) == (other.step, other.alter, other.octave)

    def __hash__(self):
        if self.is_rest:
            return hash("rest")
        return hash((self.step, self.alter, self.octave))


@dataclass(frozen=True)
class NoteEvent:
    """One row of the tabular event schema."""

    time_sig_num: int
    time_sig_den: int
    measure: int
    key_fifths: int
    key_mode: str
    chord_root: PitchSpec
    chord_type: str
    note: PitchSpec
    note_duration: Fraction

    @property
    def has_chord(self) -> bool:
        return not self.chord_root.is_rest

    @property
    def bar_length(self) -> Fraction:
        """Nominal length of the bar in duration units."""
        return Fraction(UNITS_PER_WHOLE * self.time_sig_num, self.time_sig_den)

    def bar_fields(self) -> tuple:
        return (self.time_sig_num, self.time_sig_den, self.key_fifths, self.key_mode,
                self.chord_root, self.chord_type)


@dataclass
class Song:
    id: str
    events: list = field(default_factory=list)

    @property
    def bar_count(self) -> int:
        return len({e.measure for e in self.events})

    def bars(self) -> list:
        """Rows grouped per measure, in order."""
        out, current, last = [], [], None
        for e in self.events:
            if e.measure != last and current:
                out.append(current)
                current = []
            current.append(e)
            last = e.measure
        if current:
            out.append(current)
        return out

    @property
    def pickup_bars(self) -> list:
        """1-based indices of bars whose notated length falls short of the meter."""
        return [rows[0].measure for rows in self.bars()
                if sum(r.note_duration for r in rows) < rows[0].bar_length]

    def validate(self) -> None:
        """Check measure contiguity and per-bar field constancy."""
        expected = 1
        for rows in self.bars():
            m = rows[0].measure
            if m != expected:
                raise CsvFormatError(
                    f"song {self.id!r}: measure {m} found where {expected} expected")
            expected += 1
            head = rows[0].bar_fields()
            for r in rows[1:]:
                if r.bar_fields() != head:
                    raise CsvFormatError(
                        f"song {self.id!r}: bar {m} mixes time/key/chord fields")
            for r in rows:
                if r.note_duration <= 0:
                    raise CsvFormatError(f"song {self.id!r}: bar {m} has a non-positive duration")


@dataclass
class DatasetSplit:
    train: list
    test: list
    seed: int


# ---------------------------------------------------------------------------
# MusicXML

def _text(el, path, default=None):
    found = el.find(path)
    if found is None or found.text is None:
        return default
    return found.text.strip()


def _int(text, default=0):
    if text is None or text == "":
        return default
    return int(round(float(text)))


def _timewise_to_partwise(root):
    """Rearrange a score-timewise tree into score-partwise order."""
    partwise = ET.Element("score-partwise")
    for child in root:
        if child.tag != "measure":
            partwise.append(child)
    parts = {}
    order = []
    for measure in root.findall("measure"):
        for part in measure.findall("part"):
            pid = part.get("id")
            if pid not in parts:
                parts[pid] = ET.SubElement(partwise, "part", id=pid or "")
                order.append(pid)
            new_measure = ET.SubElement(parts[pid], "measure", dict(measure.attrib))
            new_measure.extend(list(part))
    return partwise


def _harmony_chord(harmony):
    """(root PitchSpec, chord type) of a <harmony> element; rest root for N.C."""
    kind_el = harmony.find("kind")
    kind = (kind_el.text or "").strip() if kind_el is not None else ""
    if kind_el is not None and not kind:
        kind = (kind_el.get("text") or "").strip()
    step = _text(harmony, "root/root-step")
    if step is None:
        # function-only harmonies and "none" kinds carry no usable root
        return PitchSpec.rest(), NO_CHORD_TYPE
    if kind == "none":
        return PitchSpec.rest(), NO_CHORD_TYPE
    alter = _int(_text(harmony, "root/root-alter"), 0)
    return PitchSpec(step=step.upper(), alter=alter), kind or "major"


def _note_units(note, divisions):
    dur = _text(note, "duration")
    if dur is not None:
        return Fraction(dur) * UNITS_PER_QUARTER / divisions
    # duration-less notes (seen in some exporters): fall back to the type
    kind = _text(note, "type")
    if kind in _TYPE_LENGTH:
        units = _TYPE_LENGTH[kind] * UNITS_PER_WHOLE
        dots = len(note.findall("dot"))
        return units * (2 - Fraction(1, 2 ** dots))
    return Fraction(0)


def parse_musicxml(document, song_id: str = "", require_harmony: bool = True) -> Song:
    """Parse an uncompressed MusicXML document into a :class:`Song`.

    ``document`` is a binary/text stream, ``bytes`` or ``str``.  Only the
    first part carrying ``<harmony>`` elements is used; chord tones stacked
    with ``<chord/>``, grace notes and secondary voices are skipped.  When a
    bar holds several harmonies only the first one labels the whole bar.
    With ``require_harmony=False`` a chord-free melody is accepted (first part).
    """
    if hasattr(document, "read"):
        document = document.read()
    if isinstance(document, str):
        document = document.encode("utf-8")
    try:
        root = ET.fromstring(document)
    except ET.ParseError as exc:
        line, col = exc.position
        lines = document.decode("utf-8", "replace").splitlines()
        context = lines[line - 1].strip() if 0 < line <= len(lines) else ""
        raise MusicXMLError(f"malformed XML at line {line}, column {col}: {context[:80]!r}") from exc

    if root.tag == "score-timewise":
        root = _timewise_to_partwise(root)
    elif root.tag != "score-partwise":
        raise MusicXMLError(f"unexpected root element <{root.tag}>")

    parts = root.findall("part")
    part = next((p for p in parts if p.find("measure/harmony") is not None), None)
    if part is None:
        if require_harmony or not parts:
            raise RejectedSong(f"song {song_id!r} has no harmony annotations")
        part = parts[0]

    divisions = Fraction(1)
    beats, beat_type = 4, 4
    fifths, mode = 0, "major"
    voice = None
    events = []
    for index, measure in enumerate(part.findall("measure"), start=1):
        chord = None
        rows = []
        for el in measure:
            if el.tag == "attributes":
                divisions = Fraction(_text(el, "divisions", divisions))
                key = el.find("key")
                if key is not None and key.find("fifths") is not None:
                    fifths = _int(_text(key, "fifths"))
                    mode = (_text(key, "mode") or "major").lower()
                time = el.find("time")
                if time is not None and time.find("beats") is not None:
                    beats = sum(int(b) for b in _text(time, "beats").split("+"))
                    beat_type = _int(_text(time, "beat-type"), 4)
            elif el.tag == "harmony":
                if chord is None:
                    chord = _harmony_chord(el)
            elif el.tag == "note":
                if el.find("grace") is not None or el.find("chord") is not None:
                    continue
                if el.find("cue") is not None:
                    continue
                v = _text(el, "voice", "1")
                if voice is None:
                    voice = v
                if v != voice:
                    continue
                units = _note_units(el, divisions)
                if units <= 0:
                    continue
                if el.find("rest") is not None or el.find("pitch") is None:
                    pitch = PitchSpec.rest()
                else:
                    pitch = PitchSpec(step=_text(el, "pitch/step").upper(),
                                      alter=_int(_text(el, "pitch/alter"), 0),
                                      octave=_int(_text(el, "pitch/octave"), 4))
                rows.append((pitch, units))
        if chord is None:
            chord = (PitchSpec.rest(), NO_CHORD_TYPE)
        if not rows:
            rows.append((PitchSpec.rest(), Fraction(UNITS_PER_WHOLE * beats, beat_type)))
        for pitch, units in rows:
            events.append(NoteEvent(beats, beat_type, index, fifths, mode,
                                    chord[0], chord[1], pitch, units))
    return Song(id=song_id, events=events)


# ---------------------------------------------------------------------------
# CSV

def _format_duration(value: Fraction) -> str:
    return repr(float(value))


def _parse_duration(text: str) -> Fraction:
    # decimal rendering of a small-denominator rational; recover it exactly
    return Fraction(text).limit_denominator(10 ** 6)


def _text_stream(stream, writing=False):
    if isinstance(stream, (io.RawIOBase, io.BufferedIOBase)) or "b" in getattr(stream, "mode", ""):
        return io.TextIOWrapper(stream, encoding="utf-8", newline="" if writing else None,
                                write_through=True)
    return stream


def write_csv(song: Song, sink: IO) -> None:
    """Write ``song`` as header plus one line per event."""
    out = _text_stream(sink, writing=True)
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for e in song.events:
        writer.writerow([
            f"{e.time_sig_num}/{e.time_sig_den}", e.measure, e.key_fifths, e.key_mode,
            e.chord_root.root, e.chord_type, e.note.root,
            0 if e.note.is_rest else e.note.octave, _format_duration(e.note_duration),
        ])
    out.flush()
    if out is not sink:
        out.detach()


def read_csv(source: IO, song_id: str = "") -> Song:
    """Inverse of :func:`write_csv`."""
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    reader = csv.reader(io.StringIO(data))
    header = next(reader, None)
    if header is None or [h.strip() for h in header] != CSV_HEADER:
        raise CsvFormatError(f"bad header {header!r}")
    events = []
    for lineno, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != len(CSV_HEADER):
            raise CsvFormatError(f"line {lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        try:
            num, den = row[0].split("/")
            octave = int(row[7])
            note = PitchSpec.from_root(row[6], octave)
            event = NoteEvent(int(num), int(den), int(row[1]), int(row[2]), row[3],
                              PitchSpec.from_root(row[4]), row[5], note,
                              _parse_duration(row[8]))
        except ValueError as exc:
            raise CsvFormatError(f"line {lineno}: {exc}") from exc
        events.append(event)
    song = Song(id=song_id, events=events)
    song.validate()
    return song


def save_csv(song: Song, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        write_csv(song, fh)


def load_csv(path, song_id: Optional[str] = None) -> Song:
    path = Path(path)
    with open(path, encoding="utf-8", newline="") as fh:
        return read_csv(fh, song_id=path.stem if song_id is None else song_id)


# ---------------------------------------------------------------------------
# dataset construction

def rejection_reason(song: Song, chord_ok=None) -> Optional[str]:
    """Why ``song`` would be filtered out, or ``None`` when it is kept.

    ``chord_ok`` optionally checks that a chord type can be mapped to a class.
    """
    if not song.events:
        return "no bars"
    for rows in song.bars():
        head = rows[0]
        if head.key_mode != "major":
            return f"bar {head.measure}: key mode {head.key_mode!r}"
        if not head.has_chord:
            return f"bar {head.measure}: no chord"
        if chord_ok is not None and not chord_ok(head.chord_type):
            return f"bar {head.measure}: unmappable chord type {head.chord_type!r}"
    return None


def filter_songs(songs: Iterable[Song], chord_ok=None) -> list:
    """Keep major-key songs with a chord on every bar."""
    return [s for s in songs if rejection_reason(s, chord_ok) is None]


def split_dataset(songs, train_fraction: float = 0.8, seed: int = 0) -> DatasetSplit:
    """Deterministic song-level shuffle and split.

    2252 songs at 0.8 give 1802 training and 450 test songs.
    """
    songs = list(songs)
    if not 0 < train_fraction < 1:
        raise ValueError("train_fraction must lie in (0, 1)")
    if len(songs) < 2:
        raise ValueError("need at least two songs to split")
    order = list(range(len(songs)))
    random.Random(seed).shuffle(order)
    n_train = int(round(train_fraction * len(songs)))
    n_train = min(max(n_train, 1), len(songs) - 1)
    return DatasetSplit(train=[songs[i] for i in order[:n_train]],
                        test=[songs[i] for i in order[n_train:]], seed=seed)
