"""Synthetic lead sheets and feature corpora for tests, demos and sanity runs."""
from __future__ import annotations

import math
from fractions import Fraction
from xml.sax.saxutils import escape

import numpy as np

from .leadsheet import UNITS_PER_QUARTER, NoteEvent, PitchSpec, Song
from .preprocess import BarSequence, STEP_PITCH

_SHARP_SPELLING = [("C", 0), ("C", 1), ("D", 0), ("D", 1), ("E", 0), ("F", 0),
                   ("F", 1), ("G", 0), ("G", 1), ("A", 0), ("A", 1), ("B", 0)]
_DIATONIC = [0, 2, 4, 5, 7, 9, 11]
_SIMPLE_DURATIONS = [Fraction(1), Fraction(2), Fraction(4), Fraction(8)]


def spell(pc: int, octave: int = 0) -> PitchSpec:
    step, alter = _SHARP_SPELLING[pc % 12]
    return PitchSpec(step, alter, octave)


def tonic_fifths(tonic_pc: int) -> int:
    """Key signature (in -5..6) of the major key on ``tonic_pc``."""
    f = (7 * tonic_pc) % 12
    return f - 12 if f > 6 else f


def random_song(rng, n_bars=8, key_fifths=0, meter=(4, 4), song_id="song",
                chord_types=("major", "minor", "dominant", "minor-seventh"),
                rest_prob=0.1, mode="major") -> Song:
    """Random melody whose bars fill the meter exactly, one chord per bar."""
    tonic = (7 * key_fifths) % 12
    num, den = meter
    bar_len = Fraction(16 * num, den)
    events = []
    for m in range(1, n_bars + 1):
        chord = spell(tonic + _DIATONIC[rng.integers(0, 7)])
        ctype = chord_types[rng.integers(0, len(chord_types))]
        left = bar_len
        while left > 0:
            options = [d for d in _SIMPLE_DURATIONS if d <= left]
            d = options[rng.integers(0, len(options))]
            if rng.random() < rest_prob:
                note = PitchSpec.rest()
            else:
                note = spell(tonic + _DIATONIC[rng.integers(0, 7)], int(rng.integers(3, 6)))
            events.append(NoteEvent(num, den, m, key_fifths, mode, chord, ctype, note, d))
            left -= d
    return Song(song_id, events)


def transpose_song(song: Song, semitones: int) -> Song:
    """Move every pitch and the key signature by ``semitones`` (sharp spelling)."""
    events = []
    for e in song.events:
        tonic = (7 * e.key_fifths + semitones) % 12
        events.append(NoteEvent(e.time_sig_num, e.time_sig_den, e.measure, tonic_fifths(tonic),
                                e.key_mode, _move(e.chord_root, semitones, keep_octave=True),
                                e.chord_type, _move(e.note, semitones), e.note_duration))
    return Song(song.id, events)


def _move(p, semitones, keep_octave=False):
    if p.is_rest:
        return p
    base = STEP_PITCH[p.step] + p.alter
    moved = base + semitones
    octave = p.octave if keep_octave else p.octave + moved // 12 - base // 12
    return spell(moved % 12, octave)


def to_musicxml(song: Song, harmonies_per_bar=None) -> str:
    """Render a song as score-partwise MusicXML (one part, one voice).

    ``harmonies_per_bar`` optionally maps a measure number to a list of extra
    ``(PitchSpec, kind)`` harmonies emitted after the first one.
    """
    quarters = [e.note_duration / UNITS_PER_QUARTER for e in song.events] or [Fraction(1)]
    divisions = 1
    for q in quarters:
        divisions = divisions * q.denominator // math.gcd(divisions, q.denominator)
    out = ['<?xml version="1.0" encoding="UTF-8"?>',
           '<score-partwise version="3.1">',
           '<part-list><score-part id="P1"><part-name>Melody</part-name></score-part></part-list>',
           '<part id="P1">']
    prev = None
    for rows in song.bars():
        head = rows[0]
        out.append(f'<measure number="{head.measure}">')
        state = (head.time_sig_num, head.time_sig_den, head.key_fifths, head.key_mode)
        if state != prev:
            out.append(f"<attributes><divisions>{divisions}</divisions>"
                       f"<key><fifths>{head.key_fifths}</fifths><mode>{head.key_mode}</mode></key>"
                       f"<time><beats>{head.time_sig_num}</beats><beat-type>{head.time_sig_den}</beat-type></time>"
                       "</attributes>")
            prev = state
        harmonies = []
        if head.has_chord:
            harmonies.append((head.chord_root, head.chord_type))
        harmonies += (harmonies_per_bar or {}).get(head.measure, [])
        for root, kind in harmonies:
            out.append(f"<harmony><root><root-step>{root.step}</root-step>"
                       f"<root-alter>{root.alter}</root-alter></root>"
                       f"<kind>{escape(kind)}</kind></harmony>")
        for e in rows:
            dur = e.note_duration / UNITS_PER_QUARTER * divisions
            if e.note.is_rest:
                body = "<rest/>"
            else:
                body = (f"<pitch><step>{e.note.step}</step><alter>{e.note.alter}</alter>"
                        f"<octave>{e.note.octave}</octave></pitch>")
            out.append(f"<note>{body}<duration>{int(dur)}</duration><voice>1</voice></note>")
        out.append("</measure>")
    out.append("</part></score-partwise>")
    return "\n".join(out) + "\n"


def long_range_corpus(n_songs, T=4, seed=0, lag=2):
    """Sequences where the chord at bar t is fixed by the melody at bar (t - lag) mod T.

    Each bar is dominated by one diatonic pitch class (with a random secondary
    note); the label is the major chord on the most prominent pitch class ``lag`` bars
    earlier, wrapping inside the ``T``-bar song so every label is determined by
    the input.  Labels are independent of their own bar and of the previous
    label, so a first-order HMM with bar-local emissions can only guess.
    """
    rng = np.random.default_rng(seed)
    pcs = np.array(_DIATONIC)
    main = rng.integers(0, len(pcs), (n_songs, T))
    weight = rng.uniform(0.5, 1.0, (n_songs, T))
    second = rng.integers(0, 12, (n_songs, T))
    X = np.zeros((n_songs, T, 12))
    rows, cols = np.indices((n_songs, T))
    np.add.at(X, (rows, cols, pcs[main]), weight)
    np.add.at(X, (rows, cols, second), 1.0 - weight)
    roots = pcs[main]
    y = roots[:, (np.arange(T) - lag) % T]
    return [BarSequence(f"lr{i:05d}", X[i], y[i]) for i in range(n_songs)]


def sample_hmm(params, n_songs, n_bars, seed=0, notes_per_bar=8):
    """Draw labelled sequences from an HMM: chords from the chain, each bar's
    feature the normalized counts of ``notes_per_bar`` multinomial draws."""
    rng = np.random.default_rng(seed)
    S = params.n_states
    out = []
    for i in range(n_songs):
        states = np.empty(n_bars, dtype=int)
        states[0] = rng.choice(S, p=params.initial)
        for t in range(1, n_bars):
            states[t] = rng.choice(S, p=params.transition[states[t - 1]])
        feats = np.array([rng.multinomial(notes_per_bar, params.emission[s]) / notes_per_bar
                          for s in states])
        out.append(BarSequence(f"hmm{i:04d}", feats, states))
    return out
