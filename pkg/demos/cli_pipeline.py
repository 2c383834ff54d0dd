"""
The command-line pipeline end to end
====================================

Write a small MusicXML corpus, then run ingest, preprocess, train, evaluate
and generate through ``chordgen.cli.main`` (the same entry point as the
``chordgen`` console script).
"""
import tempfile
from pathlib import Path

import numpy as np

from chordgen import synthetic
from chordgen.cli import main

CONFIG = """[run]
seed = 7

[train]
batch_size = 64
max_epochs = 10
patience = 3

[model]
dnn_hidden = 32
dnn_depth = 2
blstm_hidden = 16
blstm_depth = 2
"""

work = Path(tempfile.mkdtemp(prefix="chordgen-"))
corpus = work / "xml"
corpus.mkdir()
rng = np.random.default_rng(0)
for i in range(20):
    song = synthetic.random_song(rng, n_bars=16, key_fifths=int(rng.integers(-3, 4)),
                                 song_id=f"tune{i:02d}")
    (corpus / f"tune{i:02d}.xml").write_text(synthetic.to_musicxml(song))
(work / "run.ini").write_text(CONFIG)
cfg = ["--config", str(work / "run.ini")]

main(["ingest", str(corpus), "--out", str(work / "dataset")] + cfg)
main(["preprocess", str(work / "dataset"), "--out", str(work / "prepared")] + cfg)
for model in ("hmm", "dnn-hmm", "blstm"):
    main(["train", str(work / "prepared"), "--model", model, "--out", str(work / "models")] + cfg)

models = sorted(str(p) for p in (work / "models").glob("*.model"))
main(["evaluate", str(work / "prepared"), *models, "--lengths", "4", "8",
      "--out", str(work / "reports")] + cfg)

# side by side progressions for one tune, each model reading 4-bar segments
melody = corpus / "tune00.xml"
for path in models:
    print(Path(path).stem)
    main(["generate", path, str(melody), "--bars", "4"])

print("outputs in", work)
