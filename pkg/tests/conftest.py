from fractions import Fraction

import pytest

from chordgen.leadsheet import NoteEvent, PitchSpec, Song

# the single 4/4 bar in F major shown in the dataset example: A4 half, eighth rest,
# then A4, G4, F4 eighths under an F major chord; divisions=2 per quarter
EXAMPLE_BAR_XML = """<?xml version="1.0" encoding="UTF-8"?>
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
      <note><pitch><step>A</step><octave>4</octave></pitch><duration>4</duration><voice>1</voice><type>half</type></note>
      <note><rest/><duration>1</duration><voice>1</voice><type>eighth</type></note>
      <note><pitch><step>A</step><octave>4</octave></pitch><duration>1</duration><voice>1</voice><type>eighth</type></note>
      <note><pitch><step>G</step><octave>4</octave></pitch><duration>1</duration><voice>1</voice><type>eighth</type></note>
      <note><pitch><step>F</step><octave>4</octave></pitch><duration>1</duration><voice>1</voice><type>eighth</type></note>
    </measure>
  </part>
</score-partwise>
"""

EXAMPLE_BAR_CSV = """time,measure,key_fifths,key_mode,chord_root,chord_type,note_root,note_octave,note_duration
4/4,1,-1,major,F0,major,A0,4,8.0
4/4,1,-1,major,F0,major,rest,0,2.0
4/4,1,-1,major,F0,major,A0,4,2.0
4/4,1,-1,major,F0,major,G0,4,2.0
4/4,1,-1,major,F0,major,F0,4,2.0
"""


def example_bar_song():
    f = PitchSpec("F")
    notes = [(PitchSpec("A", 0, 4), 8), (PitchSpec.rest(), 2), (PitchSpec("A", 0, 4), 2),
             (PitchSpec("G", 0, 4), 2), (PitchSpec("F", 0, 4), 2)]
    return Song("example_bar", [NoteEvent(4, 4, 1, -1, "major", f, "major", p, Fraction(d))
                         for p, d in notes])


@pytest.fixture
def example_bar():
    return example_bar_song()


# -- acceptance summary: one PASS/FAIL/SKIP line per marked criterion ----------

_criterion_names = {}  # node id -> criterion
_criteria = {}  # criterion -> worst outcome so far
_RANK = {"passed": 0, "skipped": 1, "failed": 2}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            _criterion_names[item.nodeid] = mark.args[0]


def pytest_runtest_logreport(report):
    name = _criterion_names.get(report.nodeid)
    if name is None or (report.when != "call" and report.outcome == "passed"):
        return
    if _RANK[report.outcome] >= _RANK[_criteria.get(name, "passed")]:
        _criteria[name] = report.outcome


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name in dict.fromkeys(_criterion_names.values()):
        if name in _criteria:
            status = {"passed": "PASS", "failed": "FAIL", "skipped": "SKIP"}[_criteria[name]]
            terminalreporter.write_line(f"{status}  {name}")
