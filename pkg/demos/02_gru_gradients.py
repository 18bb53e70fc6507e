"""A GRU sequence, its backward pass, and a finite-difference audit.

The recurrent cells carry hand-written gradients. This script runs one
bidirectional pass, then checks a few analytic gradients against central
differences. Run me:

    python3 demos/02_gru_gradients.py
"""

import numpy as np

from hierex import Rng, bigru_forward, bigru_backward, grad_check, gru_cell

rng = Rng(3)
fwd_cell = gru_cell("fwd", input_dim=4, hidden=5, rng=rng)
bwd_cell = gru_cell("bwd", input_dim=4, hidden=5, rng=rng)

xs = np.vstack([rng.gauss() for _ in range(6 * 4)]).reshape(6, 4)
reps, last_f, last_b, cache = bigru_forward(fwd_cell, bwd_cell, xs)
print("6 input rows ->", reps.shape, "token representations "
      "(forward and backward states side by side)")
print("sentence summary = [last forward ; last backward], dims",
      last_f.shape[0], "+", last_b.shape[0])

def loss() -> float:
    """A scalar to differentiate: sum of squared token representations."""
    reps, _, _, cache = bigru_forward(fwd_cell, bwd_cell, xs)
    bigru_backward(fwd_cell, bwd_cell, cache, 2.0 * reps)
    return float(np.sum(reps * reps))

params = fwd_cell.params() + bwd_cell.params()
report = grad_check(loss, params, eps=1e-5, sample=10, rng=rng)
print("\nfinite-difference audit over", len(params), "tensors:")
for t in report.tensors[:4]:
    print(f"  {t.name:8s} max relative error {t.max_rel:.2e} over {t.checked} coords")
print(f"  ... overall max {report.max_rel:.2e} "
      f"({'PASS' if report.passed(1e-4) else 'FAIL'} at 1e-4)")
