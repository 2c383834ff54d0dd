"""Layer stacks described by a compact spec string, plus text persistence.

A spec string lists layers separated by commas::

    bilstm:12:128,dropout:0.2,bilstm:256:128,dropout:0.2,dense:256:24:identity,softmax

Dense layers apply to the last axis, so every network maps (B, T, D) inputs
to (B, T, K) outputs; a trailing ``softmax`` marks the probability output and
is folded into the cross-entropy loss during training.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import seeds
from .layers import BiLSTM, Dense, Dropout, LSTM
from .loss import one_hot, softmax, softmax_xent

LAYER_KINDS = ("dense", "lstm", "bilstm", "dropout", "softmax")


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    n_in: int = 0
    n_out: int = 0
    activation: str = "identity"
    rate: float = 0.0

    @property
    def width(self) -> int:
        """Output width; a BiLSTM emits both directions."""
        return 2 * self.n_out if self.kind == "bilstm" else self.n_out

    def __str__(self):
        if self.kind == "dense":
            return f"dense:{self.n_in}:{self.n_out}:{self.activation}"
        if self.kind in ("lstm", "bilstm"):
            return f"{self.kind}:{self.n_in}:{self.n_out}"
        if self.kind == "dropout":
            return f"dropout:{self.rate!r}"
        return self.kind


@dataclass(frozen=True)
class NetSpec:
    layers: tuple

    def __post_init__(self):
        width = None
        for layer in self.layers:
            if layer.kind not in LAYER_KINDS:
                raise ValueError(f"unknown layer kind {layer.kind!r}")
            if layer.kind in ("dense", "lstm", "bilstm"):
                if width is not None and layer.n_in != width:
                    raise ValueError(f"layer {layer} expects width {layer.n_in}, gets {width}")
                width = layer.width
        if width is None:
            raise ValueError("network has no parametrized layer")

    def __str__(self):
        return ",".join(str(layer) for layer in self.layers)

    @property
    def n_in(self) -> int:
        return next(l.n_in for l in self.layers if l.kind in ("dense", "lstm", "bilstm"))

    @property
    def n_out(self) -> int:
        return [l for l in self.layers if l.kind in ("dense", "lstm", "bilstm")][-1].width

    @classmethod
    def parse(cls, text: str) -> "NetSpec":
        layers = []
        for token in text.strip().split(","):
            parts = token.split(":")
            kind = parts[0]
            if kind == "dense":
                layers.append(LayerSpec("dense", int(parts[1]), int(parts[2]), parts[3]))
            elif kind in ("lstm", "bilstm"):
                layers.append(LayerSpec(kind, int(parts[1]), int(parts[2])))
            elif kind == "dropout":
                layers.append(LayerSpec("dropout", rate=float(parts[1])))
            elif kind == "softmax":
                layers.append(LayerSpec("softmax"))
            else:
                raise ValueError(f"unknown layer kind {kind!r}")
        return cls(tuple(layers))


def dnn_spec(n_in=12, hidden=128, depth=3, n_out=24, dropout=0.2) -> NetSpec:
    """Per-bar classifier: ``depth`` tanh layers of ``hidden`` units, softmax output."""
    layers, width = [], n_in
    for _ in range(depth):
        layers.append(LayerSpec("dense", width, hidden, "tanh"))
        if dropout:
            layers.append(LayerSpec("dropout", rate=dropout))
        width = hidden
    layers += [LayerSpec("dense", width, n_out, "identity"), LayerSpec("softmax")]
    return NetSpec(tuple(layers))


def blstm_spec(n_in=12, hidden=128, depth=2, n_out=24, dropout=0.2) -> NetSpec:
    """Sequence labeller: ``depth`` BiLSTM layers with ``hidden`` units per direction."""
    layers, width = [], n_in
    for _ in range(depth):
        layers.append(LayerSpec("bilstm", width, hidden))
        if dropout:
            layers.append(LayerSpec("dropout", rate=dropout))
        width = 2 * hidden
    layers += [LayerSpec("dense", width, n_out, "identity"), LayerSpec("softmax")]
    return NetSpec(tuple(layers))


class Network:
    def __init__(self, spec, seed: int = 0):
        if isinstance(spec, str):
            spec = NetSpec.parse(spec)
        self.spec = spec
        self.seed = seed
        rng = seeds.rng(seed, "init")
        self.layers = []
        for ls in spec.layers:
            if ls.kind == "dense":
                self.layers.append(Dense(ls.n_in, ls.n_out, ls.activation, rng=rng))
            elif ls.kind == "lstm":
                self.layers.append(LSTM(ls.n_in, ls.n_out, rng=rng))
            elif ls.kind == "bilstm":
                self.layers.append(BiLSTM(ls.n_in, ls.n_out, rng=rng))
            elif ls.kind == "dropout":
                self.layers.append(Dropout(ls.rate))

    @property
    def n_out(self) -> int:
        return self.spec.n_out

    def named_parameters(self):
        """``(name, array)`` pairs in a fixed order; arrays are live views."""
        out = []
        for i, layer in enumerate(self.layers):
            for name in sorted(layer.params):
                out.append((f"{i}.{name}", layer.params[name]))
        return out

    def parameters(self):
        return [p for _, p in self.named_parameters()]

    def gradients(self):
        return [layer.grads[name] for layer in self.layers for name in sorted(layer.params)]

    def zero_grad(self):
        for layer in self.layers:
            layer.zero_grad()

    def forward(self, X, train=False, rng=None):
        """Logits for (B, T, D) input."""
        h = np.asarray(X, dtype=float)
        if h.ndim != 3:
            raise ValueError(f"expected (batch, time, features) input, got shape {h.shape}")
        for layer in self.layers:
            h = layer.forward(h, train=train, rng=rng)
        return h

    def predict_proba(self, X):
        return softmax(self.forward(X))

    def loss_and_grad(self, X, y, train=False, rng=None):
        """Mean cross entropy for integer labels ``y`` (B, T); fills layer grads."""
        logits = self.forward(X, train=train, rng=rng)
        loss, probs = softmax_xent(logits, one_hot(y, logits.shape[-1]))
        self.zero_grad()
        d = (probs - one_hot(y, logits.shape[-1])) / np.prod(y.shape)
        for layer in reversed(self.layers):
            d = layer.backward(d)
        return loss

    def loss(self, X, y):
        loss, _ = softmax_xent(self.forward(X), one_hot(y, self.n_out))
        return loss

    def get_state(self):
        return [p.copy() for p in self.parameters()]

    def set_state(self, state):
        for p, v in zip(self.parameters(), state):
            p[...] = v

    # -- persistence --------------------------------------------------------
    def dumps(self) -> str:
        lines = [f"net {self.spec} {self.seed}"]
        for name, p in self.named_parameters():
            lines.append(f"param {name} " + " ".join(str(d) for d in p.shape))
            lines.append(" ".join(format(float(v), ".17g") for v in p.ravel()))
        return "\n".join(lines) + "\n"

    @classmethod
    def parse_lines(cls, lines, start=0):
        """Rebuild a network from ``lines[start:]``; returns (net, next index)."""
        head = lines[start].split()
        if len(head) != 3 or head[0] != "net":
            raise ValueError(f"bad network header {lines[start]!r}")
        net = cls(NetSpec.parse(head[1]), int(head[2]))
        pos = start + 1
        for name, p in net.named_parameters():
            meta = lines[pos].split()
            if meta[:2] != ["param", name] or tuple(int(d) for d in meta[2:]) != p.shape:
                raise ValueError(f"parameter block mismatch at {lines[pos]!r}")
            values = np.array([float(v) for v in lines[pos + 1].split()])
            p[...] = values.reshape(p.shape)
            pos += 2
        return net, pos

    @classmethod
    def loads(cls, text: str) -> "Network":
        return cls.parse_lines(text.splitlines())[0]
