"""Mini-batch training with Adam and validation-based early stopping."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .. import seeds
from .optim import AdamState, adam_step

log = logging.getLogger(__name__)


class TrainingError(RuntimeError):
    pass


@dataclass
class TrainConfig:
    batch_size: int = 512
    patience: int = 10
    max_epochs: int = 200
    validation_fraction: float = 0.1
    seed: int = 0
    lr: float = 1e-3

    def __post_init__(self):
        if self.batch_size < 1 or self.patience < 1 or self.max_epochs < 1:
            raise ValueError("batch_size, patience and max_epochs must be positive")
        if not 0 < self.validation_fraction < 1:
            raise ValueError("validation_fraction must lie in (0, 1)")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


class EarlyStopping:
    """Tracks the best validation loss; ``update`` returns True when training should stop."""

    def __init__(self, patience):
        self.patience = patience
        self.best = np.inf
        self.best_epoch = 0
        self.bad_epochs = 0

    def update(self, epoch, loss) -> bool:
        if loss < self.best:
            self.best, self.best_epoch, self.bad_epochs = loss, epoch, 0
            return False
        self.bad_epochs += 1
        return self.bad_epochs >= self.patience


def validation_split(n, fraction, groups=None, rng=None):
    """Index arrays (train, val).  With ``groups`` whole groups go to validation."""
    rng = np.random.default_rng(0) if rng is None else rng
    if n < 2:
        raise TrainingError("need at least two windows to carve a validation set")
    if groups is not None:
        groups = np.asarray(groups)
        uniq = np.unique(groups)
        if len(uniq) >= 2:
            n_val = min(max(1, int(round(fraction * len(uniq)))), len(uniq) - 1)
            held = set(rng.permutation(uniq)[:n_val].tolist())
            mask = np.array([g in held for g in groups.tolist()])
            return np.flatnonzero(~mask), np.flatnonzero(mask)
    order = rng.permutation(n)
    n_val = min(max(1, int(round(fraction * n))), n - 1)
    return np.sort(order[n_val:]), np.sort(order[:n_val])


def train(net, X, y, config: TrainConfig, groups=None, validation=None, on_epoch=None):
    """Fit ``net`` on windows ``X`` (N, T, D) with labels ``y`` (N, T).

    A validation set is carved from the windows (whole songs when ``groups``
    is given) unless ``validation=(Xv, yv)`` is passed.  Training stops once
    validation loss has not improved for ``config.patience`` epochs, and the
    network is left holding the best-epoch parameters.  Returns the history.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=int)
    if len(X) == 0:
        raise TrainingError("no training windows")
    if validation is None:
        tr, va = validation_split(len(X), config.validation_fraction, groups,
                                  seeds.rng(config.seed, "validation"))
        Xt, yt, Xv, yv = X[tr], y[tr], X[va], y[va]
    else:
        Xt, yt = X, y
        Xv, yv = np.asarray(validation[0], dtype=float), np.asarray(validation[1], dtype=int)

    shuffle_rng = seeds.rng(config.seed, "shuffle")
    dropout_rng = seeds.rng(config.seed, "dropout")
    params = net.parameters()
    adam = AdamState.for_params(params, lr=config.lr)
    stopper = EarlyStopping(config.patience)
    best_state = net.get_state()
    history = []
    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(len(Xt))
        total = 0.0
        for start in range(0, len(order), config.batch_size):
            idx = order[start:start + config.batch_size]
            loss = net.loss_and_grad(Xt[idx], yt[idx], train=True, rng=dropout_rng)
            if not np.isfinite(loss):
                raise TrainingError(f"non-finite loss {loss} at epoch {epoch}, batch starting {start}")
            adam_step(adam, params, net.gradients())
            total += loss * len(idx)
        train_loss = total / len(Xt)
        val_loss = net.loss(Xv, yv)
        if not np.isfinite(val_loss):
            raise TrainingError(f"non-finite validation loss at epoch {epoch}")
        history.append(EpochRecord(epoch, train_loss, val_loss))
        log.debug("epoch %d train %.5f val %.5f", epoch, train_loss, val_loss)
        if on_epoch is not None:
            on_epoch(history[-1])
        stop = stopper.update(epoch, val_loss)
        if stopper.best_epoch == epoch:
            best_state = net.get_state()
        if stop:
            break
    net.set_state(best_state)
    return history
