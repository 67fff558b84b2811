"""Monte Carlo quantile universal thresholds vs closed forms.

Shows the empirical null-quantile machinery against analytic references:
the sup-norm of independent normals (identity design), the BIC-doubling
closed form for best subset, and the orthonormal group-lasso formula.
"""

import math

import numpy as np
from scipy.stats import norm

from quthresh import (
    GAUSSIAN,
    NullSampler,
    PenaltySpec,
    closed_form_qut,
    compute_qut,
    implied_level_best_subset,
)

p = 100
alpha = 0.05

sampler = NullSampler(np.zeros((p, 0)), np.eye(p), GAUSSIAN, sigma=1.0,
                      seed=1)
res = compute_qut(sampler, PenaltySpec.lasso(), alpha, 50_000)
analytic = norm.ppf((1 + (1 - alpha) ** (1 / p)) / 2)
print(f"identity design, P={p}: MC threshold {res.lambda_qut:.4f}  "
      f"analytic sup-norm quantile {analytic:.4f}")

rng = np.random.default_rng(2)
x = rng.standard_normal((60, 300))
sampler = NullSampler(np.ones((60, 1)), x, GAUSSIAN, sigma=1.0, seed=3)
res = compute_qut(sampler, PenaltySpec.lasso(), alpha, 5000)
print(f"random design with intercept projection: threshold "
      f"{res.lambda_qut:.3f} (alpha={alpha}, M={res.mc_samples})")

boot = NullSampler(np.ones((60, 1)), x, GAUSSIAN, design="bootstrap",
                   sigma=1.0, seed=3)
res_b = compute_qut(boot, PenaltySpec.lasso(), alpha, 5000)
print(f"row-bootstrap (random design) variant:   threshold "
      f"{res_b.lambda_qut:.3f}")

print()
p = 1024
level = implied_level_best_subset(p)
cf = closed_form_qut("best_subset_orthonormal", 1.0, p)
draws = np.abs(rng.standard_normal((20_000, p))).max(axis=1) ** 2 / 2
mc = np.sort(draws)[math.ceil((1 - level) * draws.size) - 1]
print(f"best subset, P={p}: closed form sigma^2 log P = {cf.value:.3f}, "
      f"MC at its implied level ({level:.3f}) = {mc:.3f}")

cf = closed_form_qut("group_lasso_orthonormal", 1.0, 512, group_size=4)
print(f"orthonormal group lasso, P=512, Q=4: {cf.value:.3f}")
cf = closed_form_qut("tv1d", 1.0, 512)
print(f"total variation bridge limit, P=512: {cf.value:.3f}")
