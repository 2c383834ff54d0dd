"""
Checking backpropagation with finite differences
================================================

Every layer's backward pass is written by hand, so compare each parameter's
analytic gradient with a central difference of the loss.
"""
import numpy as np

from chordgen.neural import Network, blstm_spec, check_network

rng = np.random.default_rng(0)
X = rng.random((2, 4, 12))          # batch of 2 windows, 4 bars each
y = rng.integers(0, 24, size=(2, 4))

for label, spec in [("dense", "dense:12:8:tanh,dense:8:24:identity,softmax"),
                    ("lstm", "lstm:12:8,dense:8:24:identity,softmax"),
                    ("blstm x2", str(blstm_spec(hidden=8, depth=2)))]:
    net = Network(spec, seed=1)
    report = check_network(net, X, y, eps=1e-5)
    worst = max(report.items(), key=lambda kv: kv[1][0])
    print(f"{label:9} {len(report):2d} tensors  worst {worst[0]:12} rel {worst[1][0]:.2e}"
          f"  abs {worst[1][1]:.1e}")

# The relative error is taken over whole tensors.  Elementwise ratios blow up
# on entries whose gradient is itself ~1e-10, where the finite difference is
# dominated by rounding of the loss, not by any error in the gradient.
