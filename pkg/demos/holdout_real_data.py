"""Train/test evaluation on an ingested dataset.

Builds a small CSV (stand-in for any real dataset), loads it through the
CLI ingestion path, and runs the repeated-split harness: model size and
predictive error per split.
"""

import argparse
import tempfile
from pathlib import Path

import numpy as np

from quthresh import run_holdout
from quthresh.cli import build_instance

rng = np.random.default_rng(9)
n, p = 120, 40
x = rng.standard_normal((n, p))
y = 0.5 + 1.5 * x[:, 7] - 1.0 * x[:, 23] + 0.7 * rng.standard_normal(n)

csv_path = Path(tempfile.gettempdir()) / "holdout_demo.csv"
header = ["response"] + [f"gene_{j}" for j in range(p)]
rows = [",".join(format(v, ".10g") for v in row)
        for row in np.column_stack([y, x])]
csv_path.write_text(",".join(header) + "\n" + "\n".join(rows) + "\n")

args = argparse.Namespace(data=str(csv_path), response_col="response",
                          x0_cols="", family="gaussian", binomial_m=1,
                          sigma=None, intercept="on")
instance, names = build_instance(args)

for method in ("qut_lasso", "cv_1se"):
    report = run_holdout(instance, method, split_fraction=0.5, repeats=30,
                         alpha=0.05, m=500, seed=17, workers=2)
    ok = [r for r in report.records if not r["skipped"]]
    sizes = sorted(r["size"] for r in ok)
    mspe = np.median([r["test_mspe"] for r in ok])
    print(f"{method:9s}: median size {sizes[len(sizes) // 2]}, "
          f"median test MSPE {mspe:.3f}, "
          f"{len(report.records) - len(ok)} skipped splits")
