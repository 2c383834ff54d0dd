"""
From a lead-sheet bar to a feature vector
=========================================

Parse one MusicXML bar, flatten it into note rows, transpose to C major and
accumulate a 12-dimensional pitch-class duration vector.
"""
import io

import numpy as np

from chordgen import leadsheet, preprocess

BAR = b"""<?xml version="1.0" encoding="UTF-8"?>
<score-partwise version="3.1">
  <part-list><score-part id="P1"><part-name>Voice</part-name></score-part></part-list>
  <part id="P1">
    <measure number="1">
      <attributes>
        <divisions>2</divisions>
        <key><fifths>-1</fifths><mode>major</mode></key>
        <time><beats>4</beats><beat-type>4</beat-type></time>
      </attributes>
      <harmony><root><root-step>F</root-step></root><kind>major</kind></harmony>
      <note><pitch><step>A</step><octave>4</octave></pitch><duration>4</duration></note>
      <note><rest/><duration>1</duration></note>
      <note><pitch><step>A</step><octave>4</octave></pitch><duration>1</duration></note>
      <note><pitch><step>G</step><octave>4</octave></pitch><duration>1</duration></note>
      <note><pitch><step>F</step><octave>4</octave></pitch><duration>1</duration></note>
    </measure>
  </part>
</score-partwise>
"""

song = leadsheet.parse_musicxml(BAR, song_id="demo")

# the tabular form: one row per note or rest, whole note = 16 units
buf = io.StringIO()
leadsheet.write_csv(song, buf)
print(buf.getvalue())

# one flat in the key signature means F major, so everything moves down 5 semitones
shift = preprocess.key_shift_semitones(song.events[0].key_fifths)
print("shift to C major:", shift)

seq = preprocess.song_to_sequence(song)
for name, value in zip(preprocess.PITCH_NAMES, seq.features[0]):
    if value:
        print(f"{name:>2}  {value:.3f}")
print("label:", preprocess.chord_name(int(seq.labels[0])))

# the rest takes 1/8 of the bar, which is exactly what is missing from the sum
print("sum of features:", seq.features[0].sum())
assert np.isclose(seq.features[0].sum() + 2 / 16, 1.0)
