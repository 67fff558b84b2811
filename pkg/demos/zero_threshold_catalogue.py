"""Tour of the zero-threshold catalogue.

For each estimator in the catalogue, evaluate the smallest penalty that
kills every coefficient, and (where a solver exists) verify the defining
boundary identity: the fit is identically zero just above the threshold and
nonzero just below it.
"""

import numpy as np

from quthresh import (
    PenaltySpec,
    ProblemInstance,
    lasso_fit,
    sqrt_lasso_fit,
    svd_soft_threshold,
    tv1d_fit,
    zero_threshold,
)

rng = np.random.default_rng(0)
n, p = 20, 12
x = rng.standard_normal((n, p))
y = rng.standard_normal(n)
inst = ProblemInstance(np.zeros((n, 0)), x, y)

print("closed-form zero thresholds on one random data set")
print("-" * 54)
rows = [
    ("lasso", PenaltySpec.lasso()),
    ("adaptive lasso", PenaltySpec.adaptive_lasso(np.linspace(0.5, 2, p))),
    ("LAD lasso", PenaltySpec.lad_lasso()),
    ("square-root lasso", PenaltySpec.sqrt_lasso()),
    ("group lasso", PenaltySpec.group_lasso([(0, 1, 2), (3, 4, 5),
                                             (6, 7, 8), (9, 10, 11)])),
    ("elastic net (any ridge)", PenaltySpec.elastic_net(3.0)),
    ("best subset", PenaltySpec.best_subset()),
]
for name, spec in rows:
    print(f"{name:26s} {zero_threshold(inst, spec):10.4f}")

q, _ = np.linalg.qr(rng.standard_normal((p, p)))
orth = ProblemInstance(np.zeros((p, 0)), q, rng.standard_normal(p))
print(f"{'Subbotin (orthonormal)':26s} "
      f"{zero_threshold(orth, PenaltySpec.subbotin_orthonormal(0.5)):10.4f}")
print(f"{'fused lasso (orthonormal)':26s} "
      f"{zero_threshold(orth, PenaltySpec.fused_lasso_orthonormal(0.2)):10.4f}")

signal = ProblemInstance(np.zeros((30, 0)), np.eye(30),
                         rng.standard_normal(30))
print(f"{'1-D total variation':26s} "
      f"{zero_threshold(signal, PenaltySpec.total_variation_1d()):10.4f}")

mat = rng.standard_normal((6, 5))
low = ProblemInstance(np.zeros((30, 0)), np.zeros((30, 0)), mat.ravel())
print(f"{'trace norm (low rank)':26s} "
      f"{zero_threshold(low, PenaltySpec.low_rank((6, 5))):10.4f}")

print()
print("boundary identity: zero above, nonzero below (eps = 1e-3)")
print("-" * 54)
lam0 = zero_threshold(inst, PenaltySpec.lasso())
print("lasso:      ",
      lasso_fit(inst, lam0 * 1.001).s_hat, "vs",
      lasso_fit(inst, lam0 * 0.999).s_hat, "nonzeros")
lam0 = zero_threshold(inst, PenaltySpec.sqrt_lasso())
print("sqrt lasso: ",
      sqrt_lasso_fit(inst, lam0 * 1.001).s_hat, "vs",
      sqrt_lasso_fit(inst, lam0 * 0.999).s_hat, "nonzeros")
lam0 = zero_threshold(signal, PenaltySpec.total_variation_1d())
flat = tv1d_fit(signal.y, lam0 * 1.001)
rough = tv1d_fit(signal.y, lam0 * 0.999)
print("tv denoiser: ",
      int(np.abs(np.diff(flat)).max() > 0), "vs",
      int(np.abs(np.diff(rough)).max() > 0), "jumps")
lam0 = zero_threshold(low, PenaltySpec.low_rank((6, 5)))
print("trace norm:  ",
      int(np.abs(svd_soft_threshold(mat, lam0 * 1.001)).max() > 0), "vs",
      int(np.abs(svd_soft_threshold(mat, lam0 * 0.999)).max() > 0),
      "nonzero matrices")
