"""Hand-differentiated layers: dense, LSTM, bidirectional LSTM and dropout.

All layers work in float64 on arrays shaped ``(batch, time, features)``;
dense layers act on the last axis, so they are time-distributed for free.
Each layer caches what its ``backward`` needs during ``forward``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


def sigmoid(z):
    # split by sign to keep exp() from overflowing
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


ACTIVATIONS = ("tanh", "identity")


def _activate(z, activation):
    if activation == "tanh":
        return np.tanh(z)
    if activation == "identity":
        return z
    raise ValueError(f"unknown activation {activation!r}")


def glorot_uniform(rng, fan_in, fan_out, shape):
    r = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-r, r, size=shape)


# ---------------------------------------------------------------------------
# functional forms

def dense_forward(W, b, x, activation="identity"):
    """``activation(x @ W + b)`` with W of shape (D, K)."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != W.shape[0]:
        raise ValueError(f"input width {x.shape[-1]} does not match weights {W.shape}")
    return _activate(x @ W + b, activation)


@dataclass
class LstmCellParams:
    """Gate blocks stacked in the order input, forget, cell, output."""

    W: np.ndarray  # (4H, D)
    U: np.ndarray  # (4H, H)
    b: np.ndarray  # (4H,)

    def __post_init__(self):
        H = self.U.shape[1]
        if self.U.shape != (4 * H, H) or self.W.shape[0] != 4 * H or self.b.shape != (4 * H,):
            raise ValueError("inconsistent LSTM parameter shapes")

    @property
    def H(self) -> int:
        return self.U.shape[1]

    @property
    def D(self) -> int:
        return self.W.shape[1]

    @classmethod
    def init(cls, rng, D, H, forget_bias=1.0):
        W = glorot_uniform(rng, D, 4 * H, (4 * H, D))
        U = glorot_uniform(rng, H, 4 * H, (4 * H, H))
        b = np.zeros(4 * H)
        b[H:2 * H] = forget_bias
        return cls(W, U, b)


def lstm_step(cell: LstmCellParams, x_t, h_prev, c_prev):
    """One LSTM time step; returns ``(h_t, c_t)``."""
    H = cell.H
    z = x_t @ cell.W.T + h_prev @ cell.U.T + cell.b
    i = sigmoid(z[..., :H])
    f = sigmoid(z[..., H:2 * H])
    g = np.tanh(z[..., 2 * H:3 * H])
    o = sigmoid(z[..., 3 * H:])
    c = f * c_prev + i * g
    return o * np.tanh(c), c


def lstm_forward(cell: LstmCellParams, xs, reverse=False):
    """Run a cell over (B, T, D) from zero state; returns (B, T, H)."""
    xs = np.asarray(xs, dtype=float)
    B, T, _ = xs.shape
    h = np.zeros((B, cell.H))
    c = np.zeros((B, cell.H))
    out = np.empty((B, T, cell.H))
    steps = range(T - 1, -1, -1) if reverse else range(T)
    for t in steps:
        h, c = lstm_step(cell, xs[:, t], h, c)
        out[:, t] = h
    return out


def bilstm_forward(fwd: LstmCellParams, bwd: LstmCellParams, xs):
    """Concatenate a left-to-right and a right-to-left pass: (B, T, 2H)."""
    xs = np.asarray(xs, dtype=float)
    if xs.shape[1] == 0:
        raise ValueError("empty sequence")
    if fwd.H != bwd.H or fwd.D != bwd.D:
        raise ValueError("forward and backward cells differ in shape")
    return np.concatenate([lstm_forward(fwd, xs), lstm_forward(bwd, xs, reverse=True)], axis=-1)


def dropout_apply(x, rate, mode="train", rng=None):
    """Inverted dropout; the identity when ``mode == "infer"`` or ``rate == 0``."""
    if not 0 <= rate < 1:
        raise ValueError("dropout rate must lie in [0, 1)")
    if mode == "infer" or rate == 0:
        return x
    keep = rng.random(np.shape(x)) >= rate
    return x * keep / (1.0 - rate)


# ---------------------------------------------------------------------------
# layer objects used by Network

class Layer:
    """Base: ``params`` and ``grads`` are parallel dicts of arrays."""

    params: dict
    grads: dict

    def zero_grad(self):
        for k, v in self.params.items():
            self.grads[k] = np.zeros_like(v)

    def forward(self, x, train=False, rng=None):
        raise NotImplementedError

    def backward(self, dy):
        raise NotImplementedError


class Dense(Layer):
    def __init__(self, n_in, n_out, activation="identity", rng=None):
        if activation not in ACTIVATIONS:
            raise ValueError(f"unknown activation {activation!r}")
        self.n_in, self.n_out, self.activation = n_in, n_out, activation
        rng = np.random.default_rng(0) if rng is None else rng
        self.params = {"W": glorot_uniform(rng, n_in, n_out, (n_in, n_out)),
                       "b": np.zeros(n_out)}
        self.grads = {}
        self.zero_grad()

    def forward(self, x, train=False, rng=None):
        self._x = x
        self._y = dense_forward(self.params["W"], self.params["b"], x, self.activation)
        return self._y

    def backward(self, dy):
        if self.activation == "tanh":
            dy = dy * (1.0 - self._y ** 2)
        x2 = self._x.reshape(-1, self.n_in)
        dy2 = dy.reshape(-1, self.n_out)
        self.grads["W"] += x2.T @ dy2
        self.grads["b"] += dy2.sum(axis=0)
        return dy @ self.params["W"].T


class LSTM(Layer):
    """Unidirectional LSTM over (B, T, D) returning every hidden state."""

    def __init__(self, n_in, hidden, reverse=False, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        cell = LstmCellParams.init(rng, n_in, hidden)
        self.params = {"W": cell.W, "U": cell.U, "b": cell.b}
        self.reverse = reverse
        self.n_in, self.hidden = n_in, hidden
        self.grads = {}
        self.zero_grad()

    @property
    def cell(self):
        return LstmCellParams(self.params["W"], self.params["U"], self.params["b"])

    def forward(self, x, train=False, rng=None):
        if self.reverse:
            x = x[:, ::-1]
        W, U, b = self.params["W"], self.params["U"], self.params["b"]
        B, T, _ = x.shape
        H = self.hidden
        xw = x @ W.T + b  # input contributions for all steps at once
        hs = np.zeros((B, T + 1, H))  # hs[:, t + 1] is h_t; hs[:, 0] the zero state
        cs = np.zeros((B, T + 1, H))
        gates = np.empty((B, T, 4 * H))
        for t in range(T):
            z = xw[:, t] + hs[:, t] @ U.T
            i = sigmoid(z[:, :H])
            f = sigmoid(z[:, H:2 * H])
            g = np.tanh(z[:, 2 * H:3 * H])
            o = sigmoid(z[:, 3 * H:])
            cs[:, t + 1] = f * cs[:, t] + i * g
            hs[:, t + 1] = o * np.tanh(cs[:, t + 1])
            gates[:, t, :H], gates[:, t, H:2 * H] = i, f
            gates[:, t, 2 * H:3 * H], gates[:, t, 3 * H:] = g, o
        self._cache = (x, hs, cs, gates)
        out = hs[:, 1:]
        return out[:, ::-1] if self.reverse else out

    def backward(self, dy):
        x, hs, cs, gates = self._cache
        if self.reverse:
            dy = dy[:, ::-1]
        W, U = self.params["W"], self.params["U"]
        B, T, _ = x.shape
        H = self.hidden
        dz = np.empty((B, T, 4 * H))
        dh_next = np.zeros((B, H))
        dc_next = np.zeros((B, H))
        for t in range(T - 1, -1, -1):
            i, f = gates[:, t, :H], gates[:, t, H:2 * H]
            g, o = gates[:, t, 2 * H:3 * H], gates[:, t, 3 * H:]
            tc = np.tanh(cs[:, t + 1])
            dh = dy[:, t] + dh_next
            dc = dh * o * (1.0 - tc ** 2) + dc_next
            dz[:, t, :H] = dc * g * i * (1.0 - i)
            dz[:, t, H:2 * H] = dc * cs[:, t] * f * (1.0 - f)
            dz[:, t, 2 * H:3 * H] = dc * i * (1.0 - g ** 2)
            dz[:, t, 3 * H:] = dh * tc * o * (1.0 - o)
            dc_next = dc * f
            dh_next = dz[:, t] @ U
        dz2 = dz.reshape(-1, 4 * H)
        self.grads["W"] += dz2.T @ x.reshape(-1, self.n_in)
        self.grads["U"] += dz2.T @ hs[:, :T].reshape(-1, H)
        self.grads["b"] += dz2.sum(axis=0)
        dx = dz @ W
        return dx[:, ::-1] if self.reverse else dx


class BiLSTM(Layer):
    """Forward and backward LSTMs with outputs concatenated per time step."""

    def __init__(self, n_in, hidden, rng=None):
        rng = np.random.default_rng(0) if rng is None else rng
        self.fwd = LSTM(n_in, hidden, rng=rng)
        self.bwd = LSTM(n_in, hidden, reverse=True, rng=rng)
        self.hidden = hidden
        self.params = {f"fwd.{k}": v for k, v in self.fwd.params.items()}
        self.params.update({f"bwd.{k}": v for k, v in self.bwd.params.items()})
        self.zero_grad()

    def zero_grad(self):
        self.fwd.zero_grad()
        self.bwd.zero_grad()
        self.grads = {f"fwd.{k}": v for k, v in self.fwd.grads.items()}
        self.grads.update({f"bwd.{k}": v for k, v in self.bwd.grads.items()})

    def forward(self, x, train=False, rng=None):
        return np.concatenate([self.fwd.forward(x), self.bwd.forward(x)], axis=-1)

    def backward(self, dy):
        H = self.hidden
        return self.fwd.backward(dy[..., :H]) + self.bwd.backward(dy[..., H:])


class Dropout(Layer):
    def __init__(self, rate):
        if not 0 <= rate < 1:
            raise ValueError("dropout rate must lie in [0, 1)")
        self.rate = rate
        self.params, self.grads = {}, {}

    def forward(self, x, train=False, rng=None):
        if not train or self.rate == 0:
            self._scale = None
            return x
        self._scale = (rng.random(x.shape) >= self.rate) / (1.0 - self.rate)
        return x * self._scale

    def backward(self, dy):
        return dy if self._scale is None else dy * self._scale
