import numpy as np


def softmax(logits):
    z = logits - np.max(logits, axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def one_hot(labels, n_classes):
    labels = np.asarray(labels, dtype=int)
    out = np.zeros(labels.shape + (n_classes,))
    np.put_along_axis(out, labels[..., None], 1.0, axis=-1)
    return out


def softmax_xent(logits, targets):
    """Mean categorical cross entropy over every (batch, time) slice.

    ``targets`` must be one-hot along the last axis.  Returns ``(loss, probs)``;
    the gradient with respect to the logits is ``(probs - targets) / n_slices``.
    """
    logits = np.asarray(logits, dtype=float)
    targets = np.asarray(targets, dtype=float)
    if logits.shape != targets.shape:
        raise ValueError(f"logits {logits.shape} and targets {targets.shape} differ")
    if not (np.all((targets == 0) | (targets == 1)) and np.all(targets.sum(axis=-1) == 1)):
        raise ValueError("targets are not one-hot")
    z = logits - np.max(logits, axis=-1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=-1, keepdims=True))
    log_probs = z - log_norm
    n = targets[..., 0].size
    loss = -float(np.sum(targets * log_probs)) / n
    return loss, np.exp(log_probs)
