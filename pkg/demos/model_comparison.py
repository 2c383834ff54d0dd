"""
HMM, DNN-HMM and BLSTM on a long-range task
===========================================

The chord in each bar is decided by the melody two bars earlier.  A
first-order HMM with bar-local emissions cannot see that far; a BLSTM that
reads the whole window can.

Smaller than the acceptance run so it finishes in well under a minute.
"""
import numpy as np

from chordgen import evaluation, harmonizers, hmm, synthetic
from chordgen.neural import TrainConfig

corpus = synthetic.long_range_corpus(1200, T=4, seed=0, lag=2)
train, test = corpus[:1000], corpus[1000:]

cfg = TrainConfig(batch_size=64, max_epochs=150, patience=10, seed=0, lr=3e-3)
X = np.stack([s.features for s in train])
y = np.stack([s.labels for s in train])
groups = [s.song_id for s in train]

params = hmm.fit_hmm(train)
dnn_hmm, _ = harmonizers.train_dnn_hmm(train, cfg, hidden=32, depth=2)
blstm, history = harmonizers.train_blstm(X, y, cfg, hidden=64, depth=2, groups=groups)
print(f"BLSTM stopped after {len(history)} epochs")

models = {
    "HMM": ("hmm", params),
    "DNN-HMM": ("dnn_hmm", dnn_hmm),
    "DNN": ("dnn_only", dnn_hmm.dnn),
    "BLSTM": ("blstm", blstm),
}
report, matrices = evaluation.run_experiment(models, test, lengths=(4,))
print(report.table())

labels = np.concatenate([s.labels for s in test])
print(f"majority class rate: {100 * np.bincount(labels).max() / labels.size:.2f}")

with open("confusion_blstm.pgm", "wb") as fh:
    fh.write(evaluation.matrix_to_pgm(matrices["BLSTM"], scale=8))
print("wrote confusion_blstm.pgm")
