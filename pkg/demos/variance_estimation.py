"""High-dimensional noise-variance estimators side by side.

Null data and weak-signal data, P > N: the CV-residual estimator, the
sample-split refitted cross-validation estimator, and its refitted-QUT
fixed point.
"""

import numpy as np

from quthresh import (
    GAUSSIAN,
    ProblemInstance,
    sigma2_rcv,
    sigma2_refitted_qut,
    sigma2_residual_cv,
)

rng = np.random.default_rng(3)
n, p = 120, 300
x = rng.standard_normal((n, p))

for label, signal in (("pure noise", np.zeros(p)),
                      ("5 weak coefficients",
                       np.concatenate([np.full(5, 0.25), np.zeros(p - 5)]))):
    y = x @ signal + rng.standard_normal(n)
    inst = ProblemInstance(np.zeros((n, 0)), x, y, GAUSSIAN)
    cv = sigma2_residual_cv(inst, 10, seed=1)
    rcv = sigma2_rcv(inst, split_seed=1)
    rq = sigma2_refitted_qut(inst, alpha=0.05, m=1000, split_seed=1, seed=1)
    print(f"{label} (true sigma^2 = 1)")
    print(f"  residual CV : {cv.sigma2:.3f}  "
          f"(model size {cv.diagnostics['s_hat']})")
    print(f"  RCV         : {rcv.sigma2:.3f}  "
          f"(half supports {rcv.diagnostics['m_hat']})")
    print(f"  refitted QUT: {rq.sigma2:.3f}  "
          f"({rq.diagnostics['iterations']} bisection steps, "
          f"|g| = {rq.diagnostics['residual_g']:.2e})")
