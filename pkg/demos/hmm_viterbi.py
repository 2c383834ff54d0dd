"""
Supervised HMM and Viterbi decoding
===================================

Fit an HMM by counting on labelled sequences drawn from a known model, then
decode held-out melodies and compare the Viterbi path with exhaustive search.
"""
import itertools

import numpy as np

from chordgen import hmm, synthetic

# a toy world with three chords (C, F, G major) and sticky transitions
S = 24
states = [0, 5, 7]
initial = np.zeros(S)
initial[states] = [0.6, 0.2, 0.2]
transition = np.full((S, S), 1.0 / S)
transition[states] = 0.0
transition[np.ix_(states, states)] = [[0.7, 0.15, 0.15], [0.3, 0.6, 0.1], [0.4, 0.1, 0.5]]
emission = np.full((S, 12), 1.0 / 12)
emission[0] = [.4, 0, .1, 0, .3, 0, 0, .2, 0, 0, 0, 0]   # C E G heavy
emission[5] = [.2, 0, 0, 0, 0, .4, 0, 0, 0, .3, 0, .1]   # F A C
emission[7] = [0, 0, .3, 0, 0, .1, 0, .4, 0, 0, 0, .2]   # G B D
truth = hmm.HmmParams(initial, transition, emission, 0.0)

train = synthetic.sample_hmm(truth, n_songs=20, n_bars=200, seed=0)
test = synthetic.sample_hmm(truth, n_songs=50, n_bars=8, seed=1)

fitted = hmm.fit_hmm(train, smoothing_alpha=0.01)
print("recovered transitions among C, F, G:")
print(np.round(fitted.transition[np.ix_(states, states)], 3))

hits = total = 0
for seq in test:
    path = hmm.viterbi(fitted, seq.features).path
    hits += int((path == seq.labels).sum())
    total += len(seq)
print(f"bar accuracy on held-out songs: {100 * hits / total:.1f}%")

# brute force over the three live states confirms the dynamic program
seq = test[0]
log_b = hmm.emission_loglik(fitted, seq.features)
result = hmm.viterbi(fitted, seq.features)
best = max(itertools.product(states, repeat=len(seq)),
           key=lambda p: hmm.path_log_score(fitted.log_initial(), fitted.log_transition(), log_b, p))
print("viterbi :", result.path.tolist())
print("exhaust :", list(best))

# saving and reloading is exact
assert hmm.loads_hmm(hmm.dumps_hmm(fitted)).emission.tobytes() == fitted.emission.tobytes()
