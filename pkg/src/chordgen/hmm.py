"""Supervised first-order HMM over chord states with multinomial emissions
on pitch-class duration vectors, and log-space Viterbi decoding."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .preprocess import N_CHORDS, N_PITCH_CLASSES

DEFAULT_ALPHA = 0.01


class HmmError(ValueError):
    pass


@dataclass(frozen=True)
class HmmParams:
    initial: np.ndarray  # (S,)
    transition: np.ndarray  # (S, S), rows sum to 1
    emission: np.ndarray  # (S, K), rows sum to 1
    smoothing_alpha: float = DEFAULT_ALPHA

    @property
    def n_states(self) -> int:
        return len(self.initial)

    def log_initial(self):
        with np.errstate(divide="ignore"):
            return np.log(self.initial)

    def log_transition(self):
        with np.errstate(divide="ignore"):
            return np.log(self.transition)


@dataclass
class DecodeResult:
    path: np.ndarray
    log_score: float


def _normalize_rows(counts):
    counts = np.asarray(counts, dtype=float)
    totals = counts.sum(axis=-1, keepdims=True)
    uniform = np.full_like(counts, 1.0 / counts.shape[-1])
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), uniform)


def fit_hmm(train, smoothing_alpha: float = DEFAULT_ALPHA, n_states: int = N_CHORDS) -> HmmParams:
    """Estimate initial, transition and emission parameters by counting.

    ``train`` is a sequence of objects with ``features`` (n, 12) and ``labels``
    (n,).  The initial distribution is the chord histogram over all bars,
    transitions are bigram counts within songs, and emissions accumulate the
    duration mass of each pitch class over the bars of each chord.  Rows
    without any counts (possible only at ``smoothing_alpha == 0``) are uniform.
    """
    train = list(train)
    if not train or sum(len(s.labels) for s in train) == 0:
        raise HmmError("cannot fit an HMM on an empty corpus")
    if smoothing_alpha < 0:
        raise HmmError("smoothing_alpha must be nonnegative")
    n_obs = np.asarray(train[0].features).shape[-1]
    init = np.zeros(n_states)
    trans = np.zeros((n_states, n_states))
    emit = np.zeros((n_states, n_obs))
    for seq in train:
        labels = np.asarray(seq.labels, dtype=int)
        np.add.at(init, labels, 1.0)
        np.add.at(trans, (labels[:-1], labels[1:]), 1.0)
        np.add.at(emit, labels, np.asarray(seq.features, dtype=float))
    a = float(smoothing_alpha)
    return HmmParams(_normalize_rows(init + a), _normalize_rows(trans + a),
                     _normalize_rows(emit + a), a)


def emission_loglik(params: HmmParams, x) -> np.ndarray:
    """Fractional-count multinomial log-likelihood of ``x`` under every state.

    Accepts one bar (12,) or a stack (T, 12).  Zero mass contributes nothing,
    even against a zero probability.
    """
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        log_e = np.log(params.emission)
        terms = np.where(x[..., None, :] > 0, x[..., None, :] * log_e, 0.0)
    return terms.sum(axis=-1)


def posterior_bars(params: HmmParams, x) -> np.ndarray:
    """Bayes posterior over chords for one bar, with the initial distribution as prior."""
    with np.errstate(divide="ignore"):
        log_post = emission_loglik(params, x) + np.log(params.initial)
    top = np.max(log_post, axis=-1, keepdims=True)
    if not np.all(np.isfinite(top)):
        return np.full_like(log_post, 1.0 / log_post.shape[-1])
    p = np.exp(log_post - top)
    return p / p.sum(axis=-1, keepdims=True)


def viterbi_log(log_initial, log_transition, log_emission) -> DecodeResult:
    """Best state path given log initial (S,), log transition (S, S) and
    per-frame log emission scores (T, S).  Ties go to the lowest state index."""
    log_emission = np.asarray(log_emission, dtype=float)
    if log_emission.ndim != 2 or len(log_emission) == 0:
        raise HmmError("viterbi needs at least one frame")
    n_frames, n_states = log_emission.shape
    back = np.zeros((n_frames, n_states), dtype=int)
    delta = log_initial + log_emission[0]
    for t in range(1, n_frames):
        # scores[p, c] = delta[p] + log A[p, c]
        scores = delta[:, None] + log_transition
        back[t] = np.argmax(scores, axis=0)
        delta = scores[back[t], np.arange(n_states)] + log_emission[t]
    path = np.empty(n_frames, dtype=int)
    path[-1] = int(np.argmax(delta))
    for t in range(n_frames - 1, 0, -1):
        path[t - 1] = back[t, path[t]]
    return DecodeResult(path, float(delta[path[-1]]))


def viterbi(params: HmmParams, xs) -> DecodeResult:
    xs = np.asarray(xs, dtype=float)
    if xs.ndim != 2 or len(xs) == 0:
        raise HmmError("viterbi needs a non-empty (T, 12) feature sequence")
    return viterbi_log(params.log_initial(), params.log_transition(), emission_loglik(params, xs))


def path_log_score(log_initial, log_transition, log_emission, path) -> float:
    """Joint log score of a given state path."""
    path = np.asarray(path)
    score = log_initial[path[0]] + log_emission[0, path[0]]
    for t in range(1, len(path)):
        score += log_transition[path[t - 1], path[t]] + log_emission[t, path[t]]
    return float(score)


# ---------------------------------------------------------------------------
# persistence: "hmm S K alpha", then initial, S transition rows, S emission rows

def _row(values) -> str:
    return " ".join(format(float(v), ".17g") for v in values)


def dumps_hmm(params: HmmParams) -> str:
    lines = [f"hmm {params.n_states} {params.emission.shape[1]} {format(params.smoothing_alpha, '.17g')}",
             _row(params.initial)]
    lines += [_row(r) for r in params.transition]
    lines += [_row(r) for r in params.emission]
    return "\n".join(lines) + "\n"


def loads_hmm(text: str) -> HmmParams:
    return parse_hmm_lines(text.splitlines())[0]


def parse_hmm_lines(lines, start: int = 0):
    """Parse an HMM block beginning at ``lines[start]``; returns (params, next index)."""
    head = lines[start].split()
    if len(head) != 4 or head[0] != "hmm":
        raise HmmError(f"bad HMM header {lines[start]!r}")
    n_states, n_obs, alpha = int(head[1]), int(head[2]), float(head[3])

    def rows(offset, count, width):
        out = np.array([[float(v) for v in lines[offset + i].split()] for i in range(count)])
        if out.shape != (count, width):
            raise HmmError("HMM block has the wrong shape")
        return out

    pos = start + 1
    initial = rows(pos, 1, n_states)[0]
    transition = rows(pos + 1, n_states, n_states)
    emission = rows(pos + 1 + n_states, n_states, n_obs)
    return HmmParams(initial, transition, emission, alpha), pos + 1 + 2 * n_states


def save_hmm(params: HmmParams, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_hmm(params))


def load_hmm(path) -> HmmParams:
    with open(path, encoding="utf-8") as fh:
        return loads_hmm(fh.read())


def uniform_params(n_states: int = N_CHORDS, n_obs: int = N_PITCH_CLASSES) -> HmmParams:
    return HmmParams(np.full(n_states, 1.0 / n_states),
                     np.full((n_states, n_states), 1.0 / n_states),
                     np.full((n_states, n_obs), 1.0 / n_obs), 0.0)
