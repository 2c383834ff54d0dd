"""The chord generators behind one ``generate`` entry point.

* ``hmm``      supervised HMM decoded with Viterbi,
* ``dnn_hmm``  per-bar network posteriors inside the same Viterbi search,
* ``dnn_only`` per-bar argmax of the network, no sequence model,
* ``blstm``    bidirectional LSTM labelling segments of ``T`` bars.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import hmm as hmm_mod
from .neural import Network, TrainConfig, blstm_spec, dnn_spec, train
from .preprocess import N_CHORDS, N_PITCH_CLASSES, chord_name, segments

KINDS = ("hmm", "dnn_hmm", "dnn_only", "blstm")


class HarmonizerError(ValueError):
    pass


@dataclass
class DnnHmmModel:
    dnn: Network
    initial: np.ndarray
    transition: np.ndarray
    # divide posteriors by the prior (the textbook scaled-likelihood hybrid)
    scaled_likelihood: bool = False
    prior: np.ndarray = None


@dataclass
class BlstmModel:
    net: Network
    T: int = 4


def _as_bars(melody):
    xs = np.asarray(melody, dtype=float)
    if xs.ndim != 2 or xs.shape[1] != N_PITCH_CLASSES:
        raise HarmonizerError(f"melody must have shape (bars, 12), got {xs.shape}")
    if len(xs) == 0:
        raise HarmonizerError("melody is empty")
    return xs


# ---------------------------------------------------------------------------
# training

def train_dnn(features, labels, config: TrainConfig = None, hidden=128, depth=3,
              dropout=0.2, groups=None, on_epoch=None):
    """Per-bar classifier on (N, 12) features and (N,) labels."""
    config = TrainConfig() if config is None else config
    X = np.asarray(features, dtype=float).reshape(-1, 1, N_PITCH_CLASSES)
    y = np.asarray(labels, dtype=int).reshape(-1, 1)
    net = Network(dnn_spec(N_PITCH_CLASSES, hidden, depth, N_CHORDS, dropout), seed=config.seed)
    history = train(net, X, y, config, groups=groups, on_epoch=on_epoch)
    return net, history


def train_dnn_hmm(sequences, config: TrainConfig = None, smoothing_alpha=hmm_mod.DEFAULT_ALPHA,
                  scaled_likelihood=False, **kwargs):
    """DNN on every bar plus initial/transition counts from the same songs."""
    sequences = list(sequences)
    feats = np.concatenate([s.features for s in sequences])
    labels = np.concatenate([s.labels for s in sequences])
    groups = np.concatenate([[s.song_id] * len(s) for s in sequences])
    net, history = train_dnn(feats, labels, config, groups=groups, **kwargs)
    params = hmm_mod.fit_hmm(sequences, smoothing_alpha)
    return DnnHmmModel(net, params.initial, params.transition, scaled_likelihood,
                       params.initial), history


def train_blstm(X, y, config: TrainConfig = None, hidden=128, depth=2, dropout=0.2,
                groups=None, on_epoch=None):
    """Sequence labeller on windows ``X`` (N, T, 12) with labels (N, T)."""
    config = TrainConfig() if config is None else config
    X = np.asarray(X, dtype=float)
    net = Network(blstm_spec(N_PITCH_CLASSES, hidden, depth, N_CHORDS, dropout), seed=config.seed)
    history = train(net, X, y, config, groups=groups, on_epoch=on_epoch)
    return BlstmModel(net, X.shape[1]), history


# ---------------------------------------------------------------------------
# decoding

def dnn_posteriors(net: Network, xs) -> np.ndarray:
    """(bars, 24) softmax outputs, one bar per network call."""
    xs = np.asarray(xs, dtype=float)
    return net.predict_proba(xs[:, None, :])[:, 0, :]


def decode_dnn_hmm(model: DnnHmmModel, xs) -> np.ndarray:
    xs = _as_bars(xs)
    post = dnn_posteriors(model.dnn, xs)
    with np.errstate(divide="ignore"):
        log_emit = np.log(post)
        if model.scaled_likelihood:
            prior = model.initial if model.prior is None else model.prior
            # a state with zero prior is unreachable, not infinitely likely
            log_emit = np.where(prior > 0, log_emit - np.log(prior), -np.inf)
        log_init = np.log(model.initial)
        log_trans = np.log(model.transition)
    return hmm_mod.viterbi_log(log_init, log_trans, log_emit).path


def predict_dnn_only(net: Network, xs) -> np.ndarray:
    return np.argmax(dnn_posteriors(net, _as_bars(xs)), axis=-1)


def predict_blstm(model: BlstmModel, xs, T=None) -> np.ndarray:
    """Label disjoint ``T``-bar segments; a short tail runs at its own length."""
    xs = _as_bars(xs)
    T = model.T if T is None else T
    out = np.empty(len(xs), dtype=int)
    for seg in segments(len(xs), T):
        probs = model.net.predict_proba(xs[seg][None])
        out[seg] = np.argmax(probs[0], axis=-1)
    return out


def generate(kind: str, model, melody, T: int = 4) -> np.ndarray:
    """Chord class per bar of ``melody`` (bars, 12)."""
    xs = _as_bars(melody)
    if kind == "hmm":
        if not isinstance(model, hmm_mod.HmmParams):
            raise HarmonizerError("hmm generation needs HmmParams")
        return hmm_mod.viterbi(model, xs).path
    if kind == "dnn_hmm":
        if not isinstance(model, DnnHmmModel):
            raise HarmonizerError("dnn_hmm generation needs a DnnHmmModel")
        return decode_dnn_hmm(model, xs)
    if kind == "dnn_only":
        net = model.dnn if isinstance(model, DnnHmmModel) else model
        if not isinstance(net, Network):
            raise HarmonizerError("dnn_only generation needs a Network")
        return predict_dnn_only(net, xs)
    if kind == "blstm":
        if not isinstance(model, BlstmModel):
            raise HarmonizerError("blstm generation needs a BlstmModel")
        return predict_blstm(model, xs, T)
    raise HarmonizerError(f"unknown harmonizer kind {kind!r}")


def format_progression(labels) -> str:
    """One ``<bar_index>,<chord_name>`` line per bar, bars counted from 1."""
    return "".join(f"{i},{chord_name(int(c))}\n" for i, c in enumerate(labels, start=1))


# ---------------------------------------------------------------------------
# persistence: a "harmonizer <kind> <T>" line followed by the model blocks

def dumps_model(kind: str, model) -> str:
    if kind == "hmm":
        return f"harmonizer hmm 0\n{hmm_mod.dumps_hmm(model)}"
    if kind == "dnn_hmm":
        side = hmm_mod.HmmParams(model.initial, model.transition,
                                 np.full((len(model.initial), N_PITCH_CLASSES), 1.0 / N_PITCH_CLASSES),
                                 0.0)
        flag = int(model.scaled_likelihood)
        return f"harmonizer dnn_hmm {flag}\n{hmm_mod.dumps_hmm(side)}{model.dnn.dumps()}"
    if kind == "dnn_only":
        return f"harmonizer dnn_only 1\n{model.dumps()}"
    if kind == "blstm":
        return f"harmonizer blstm {model.T}\n{model.net.dumps()}"
    raise HarmonizerError(f"unknown harmonizer kind {kind!r}")


def loads_model(text: str):
    """Inverse of :func:`dumps_model`; returns ``(kind, model)``."""
    lines = text.splitlines()
    head = lines[0].split() if lines else []
    if len(head) != 3 or head[0] != "harmonizer" or head[1] not in KINDS:
        raise HarmonizerError("not a harmonizer model file")
    kind, arg = head[1], int(head[2])
    if kind == "hmm":
        return kind, hmm_mod.parse_hmm_lines(lines, 1)[0]
    if kind == "dnn_hmm":
        side, pos = hmm_mod.parse_hmm_lines(lines, 1)
        net, _ = Network.parse_lines(lines, pos)
        return kind, DnnHmmModel(net, side.initial, side.transition, bool(arg), side.initial)
    if kind == "dnn_only":
        return kind, Network.parse_lines(lines, 1)[0]
    return kind, BlstmModel(Network.parse_lines(lines, 1)[0], arg)


def save_model(kind, model, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(dumps_model(kind, model))


def load_model(path):
    with open(path, encoding="utf-8") as fh:
        return loads_model(fh.read())
