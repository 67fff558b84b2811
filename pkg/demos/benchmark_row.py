"""A scaled-down benchmark row: selection quality of the threshold rules.

Gaussian scenario with equicorrelated design; compares the QUT-tuned lasso
(noise level from the refitted-QUT fixed point) against cross-validation.
Writes the per-replication CSV and a JSON summary next to this script.
"""

from pathlib import Path

from quthresh import GAUSSIAN, ScenarioSpec, run_table2_campaign

spec = ScenarioSpec(n=80, p=400, theta=0.4, omega=0.0, snr=2.0,
                    family=GAUSSIAN, replications=25, seed=101)
report = run_table2_campaign([spec], ["qut_lasso", "cv_min", "cv_1se"],
                             alpha=0.05, m=500, workers=2)

out = Path(__file__).with_suffix("")
report.to_csv(f"{out}_records.csv")
report.to_json(f"{out}_summary.json")

print(f"scenario: {spec.label()}  (s* = {spec.s_star})")
for row in report.summary:
    print(f"  {row['method']:9s} TPR {row['tpr_mean']:.2f}  "
          f"FDR {row['fdr_mean']:.2f}  RMSE {row['rmse_mean']:.2f}  "
          f"size {row['s_hat_mean']:.1f}")
print(f"records: {out}_records.csv")
