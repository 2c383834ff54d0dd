"""Central finite-difference gradient verification."""
import numpy as np


def relative_error(analytic, numeric):
    """Elementwise ``|a - n| / max(|a|, |n|)``, zero where both vanish."""
    analytic = np.asarray(analytic, dtype=float)
    numeric = np.asarray(numeric, dtype=float)
    denom = np.maximum(np.abs(analytic), np.abs(numeric))
    diff = np.abs(analytic - numeric)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(denom > 0, diff / np.where(denom > 0, denom, 1.0), 0.0)


def tensor_relative_error(analytic, numeric):
    """``||a - n|| / max(||a||, ||n||)`` over a whole parameter array."""
    analytic = np.ravel(analytic)
    numeric = np.ravel(numeric)
    denom = max(np.linalg.norm(analytic), np.linalg.norm(numeric))
    if denom == 0:
        return 0.0
    return float(np.linalg.norm(analytic - numeric) / denom)


def numeric_gradient(f, p, eps=1e-5):
    """Central differences of scalar ``f()`` with respect to array ``p`` (perturbed in place)."""
    grad = np.zeros_like(p)
    flat = p.reshape(-1)
    gflat = grad.reshape(-1)
    for k in range(flat.size):
        orig = flat[k]
        flat[k] = orig + eps
        up = f()
        flat[k] = orig - eps
        down = f()
        flat[k] = orig
        gflat[k] = (up - down) / (2 * eps)
    return grad


def check_network(net, X, y, eps=1e-5):
    """Compare backprop against finite differences for every parameter array.

    Returns ``{name: (relative_error, max_abs_error)}`` where the relative
    error is :func:`tensor_relative_error`.  The loss is evaluated in
    inference mode, so dropout plays no part.
    """
    net.loss_and_grad(X, y)
    analytic = [g.copy() for g in net.gradients()]
    report = {}
    for (name, p), a in zip(net.named_parameters(), analytic):
        n = numeric_gradient(lambda: net.loss(X, y), p, eps)
        report[name] = (tensor_relative_error(a, n), float(np.abs(a - n).max()))
    return report
