"""Acceptance suite: every criterion runs at its stated tolerance and prints
one pass/fail line in the terminal summary (see conftest).

The heavier campaigns parallelize over replications; results are identical
for any worker count by the counter-derived seeding, so parallelism never
changes a verdict.
"""

import math
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import pytest

from quthresh import (
    BERNOULLI,
    GAUSSIAN,
    POISSON,
    NullSampler,
    PenaltySpec,
    PhaseGridSpec,
    ProblemInstance,
    ScenarioSpec,
    closed_form_qut,
    compute_qut,
    glm_kkt_residual,
    glm_lasso_fit,
    implied_level_best_subset,
    lasso_fit,
    run_phase_campaign,
    run_sensitivity_study,
    run_table2_campaign,
    sigma2_refitted_qut,
    sigma2_residual_cv,
    sqrt_lasso_fit,
    svd_soft_threshold,
    tv1d_fit,
    upper_quantile,
    zero_threshold,
    zero_threshold_glm,
)
from quthresh.families import substream_rng
from quthresh.simlab import substream_seed

WORKERS = 2


def test_criterion_01_weak_error_control():
    """Null selection frequency at the alpha=0.05 threshold stays in the
    exact binomial 99% band around 0.05."""
    rng = np.random.default_rng(20260801)
    n, p = 50, 200
    x = rng.standard_normal((n, p))
    sampler = NullSampler(np.zeros((n, 0)), x, GAUSSIAN, sigma=1.0,
                          seed=1001)
    lam = compute_qut(sampler, PenaltySpec.lasso(), 0.05, 5000,
                      workers=WORKERS).lambda_qut
    hits = 0
    datasets = 1000
    for rep in range(datasets):
        y = substream_rng(20260802, rep).standard_normal(n)
        inst = ProblemInstance(np.zeros((n, 0)), x, y, GAUSSIAN, sigma=1.0)
        if lasso_fit(inst, lam).s_hat > 0:
            hits += 1
    freq = hits / datasets
    print(f"criterion 1: selection frequency {freq:.4f}")
    assert 0.032 <= freq <= 0.070


def _bisect_zero_boundary(is_zero, hi_start=1.0):
    hi = hi_start
    for _ in range(80):
        if is_zero(hi):
            break
        hi *= 2.0
    lo = 0.0
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if is_zero(mid):
            hi = mid
        else:
            lo = mid
    return hi


def _branch_cases(branch, count=100):
    """(instance-ish data, lambda0, is_zero, fit_zero, fit_near) per trial."""
    rng = np.random.default_rng(hash(branch) % 2**32)
    for _ in range(count):
        if branch in ("lasso", "sqrt"):
            x = rng.standard_normal((12, 8))
            y = rng.standard_normal(12)
            inst = ProblemInstance(np.zeros((12, 0)), x, y, GAUSSIAN)
            spec = PenaltySpec.lasso() if branch == "lasso" \
                else PenaltySpec.sqrt_lasso()
            lam0 = zero_threshold(inst, spec)
            fitter = lasso_fit if branch == "lasso" else sqrt_lasso_fit

            def is_zero(lam, inst=inst, fitter=fitter):
                return fitter(inst, lam).s_hat == 0
        elif branch in ("bernoulli", "poisson"):
            n, p = 25, 6
            x = rng.standard_normal((n, p))
            if branch == "bernoulli":
                y = (rng.random(n) < 0.5).astype(float)
                if y.min() == y.max():
                    y[0] = 1.0 - y[0]
                fam = BERNOULLI
            else:
                y = rng.poisson(2.0, n).astype(float)
                if y.max() == 0:
                    y[0] = 1.0
                fam = POISSON
            inst = ProblemInstance(np.ones((n, 1)), x, y, fam)
            lam0 = zero_threshold_glm(inst)

            def is_zero(lam, inst=inst):
                return glm_lasso_fit(inst, lam).s_hat == 0
        elif branch == "tv1d":
            n = int(rng.integers(5, 25))
            y = rng.standard_normal(n)
            inst = ProblemInstance(np.zeros((n, 0)), np.eye(n), y, GAUSSIAN)
            lam0 = zero_threshold(inst, PenaltySpec.total_variation_1d())

            def is_zero(lam, y=y):
                return float(np.abs(np.diff(tv1d_fit(y, lam))).max()) == 0.0
        else:  # low rank
            y_mat = rng.standard_normal((5, 4))
            inst = ProblemInstance(np.zeros((20, 0)), np.zeros((20, 0)),
                                   y_mat.ravel(), GAUSSIAN)
            lam0 = zero_threshold(inst, PenaltySpec.low_rank((5, 4)))

            def is_zero(lam, y_mat=y_mat):
                return float(np.abs(svd_soft_threshold(y_mat, lam)).max()) \
                    <= 1e-12
        yield lam0, is_zero


@pytest.mark.parametrize("branch", ["lasso", "sqrt", "bernoulli", "poisson",
                                    "tv1d", "lowrank"])
def test_criterion_02_zero_boundary_equivalence(branch):
    """Solver output is exactly zero above the threshold, nonzero below,
    and bisection recovers the threshold to 1e-4 relative."""
    eps = 1e-3
    worst = 0.0
    for lam0, is_zero in _branch_cases(branch):
        assert is_zero(lam0 * (1 + eps)), f"{branch}: not zero above"
        assert not is_zero(lam0 * (1 - eps)), f"{branch}: zero below"
        recovered = _bisect_zero_boundary(is_zero)
        rel = abs(recovered - lam0) / lam0
        worst = max(worst, rel)
    print(f"criterion 2 [{branch}]: worst relative boundary error {worst:.2e}")
    assert worst <= 1e-4


def _mc_upper_quantile_of(stat_fn, p, m, alpha, seed):
    rng = np.random.default_rng(seed)
    chunk = max(1, 20_000_000 // (8 * p))
    draws = np.empty(m)
    done = 0
    while done < m:
        k = min(chunk, m - done)
        z = rng.standard_normal((k, p))
        draws[done:done + k] = stat_fn(z)
        done += k
    return upper_quantile(draws, alpha)


def test_criterion_03_bic_doubling_closed_form():
    """Upper-quantile of the best-subset null statistic at the implied level
    matches sigma^2 log P within 5% relative."""
    p = 1024
    alpha_p = implied_level_best_subset(p)
    q = _mc_upper_quantile_of(
        lambda z: 0.5 * np.abs(z).max(axis=1) ** 2, p, 100_000, alpha_p,
        seed=3003)
    target = closed_form_qut("best_subset_orthonormal", 1.0, p).value
    rel = abs(q - target) / target
    print(f"criterion 3: MC {q:.4f} vs log P {target:.4f} (rel {rel:.3f})")
    assert rel <= 0.05


def test_criterion_04_group_lasso_closed_form():
    """Q=1 group threshold reduces to sqrt(2 log P - log pi) and matches the
    MC quantile of the sup of P absolute normals within 5%."""
    p = 4096
    res = closed_form_qut("group_lasso_orthonormal", 1.0, p, group_size=1)
    assert res.value == pytest.approx(
        math.sqrt(2 * math.log(p) - math.log(math.pi)), rel=1e-12)
    alpha_p = implied_level_best_subset(p)
    q = _mc_upper_quantile_of(lambda z: np.abs(z).max(axis=1), p, 100_000,
                              alpha_p, seed=4004)
    rel = abs(q - res.value) / res.value
    print(f"criterion 4: MC {q:.4f} vs formula {res.value:.4f} "
          f"(rel {rel:.3f})")
    assert rel <= 0.05


def _table2_scenario(theta, seed):
    spec = ScenarioSpec(100, 1000, theta, 0.0, 1.0, GAUSSIAN, 100, seed=seed)
    report = run_table2_campaign([spec], ["qut_lasso"], alpha=0.05, m=1000,
                                 workers=WORKERS)
    tpr = float(np.mean([r["tpr"] for r in report.records]))
    fdr = float(np.mean([r["fdr"] for r in report.records]))
    # Table aggregation: the expectation over training sets sits inside the
    # square root of the reported error.
    rmse = float(np.sqrt(np.mean([r["rmse"] ** 2 for r in report.records])))
    return tpr, fdr, rmse


def test_criterion_05_benchmark_table_reproduction():
    """Desk-scale reproduction of the Gaussian benchmark rows."""
    tpr1, fdr1, rmse1 = _table2_scenario(0.5, seed=55_001)
    print(f"criterion 5 [theta=0.5]: TPR {tpr1:.3f} (0.09+-0.05), "
          f"FDR {fdr1:.3f} (0.02+-0.03), RMSE {rmse1:.3f} (0.85+-0.08)")
    tpr2, fdr2, rmse2 = _table2_scenario(0.1, seed=55_002)
    print(f"criterion 5 [theta=0.1]: TPR {tpr2:.3f} (0.61+-0.10), "
          f"FDR {fdr2:.3f} (0.00+0.03), RMSE {rmse2:.3f} (0.35+-0.08)")
    assert abs(tpr1 - 0.09) <= 0.05
    assert abs(fdr1 - 0.02) <= 0.03
    assert abs(tpr2 - 0.61) <= 0.10
    assert fdr2 <= 0.03
    assert abs(rmse2 - 0.35) <= 0.08
    assert abs(rmse1 - 0.85) <= 0.08


def test_criterion_06_phase_transition_shape():
    """High screening quality at low sparsity, none at high sparsity, and a
    monotone decay in between (one inversion up to 0.1 allowed)."""
    rho_grid = (0.05, 0.1, 0.2, 0.35, 0.5, 0.7, 0.9)
    grid = PhaseGridSpec(200, (40,), rho_grid, magnitude=10.0,
                         replications=20, seed=66_001)
    report = run_phase_campaign(grid, ["qut_lasso"], alpha=0.05, m=1000,
                                workers=WORKERS)
    by_rho = {row["rho"]: row["oir_mean"] for row in report.summary}
    curve = [by_rho[r] for r in rho_grid]
    print("criterion 6: OIR(rho) = "
          + ", ".join(f"{r:g}:{v:.2f}" for r, v in zip(rho_grid, curve)))
    assert curve[0] >= 0.5
    assert curve[-1] == 0.0
    inversions = [max(b - a, 0.0) for a, b in zip(curve, curve[1:])]
    assert sum(1 for v in inversions if v > 1e-12) <= 1
    assert max(inversions) <= 0.1


def test_criterion_07_glm_kkt_certification():
    """Every converged penalized-likelihood fit satisfies the stationarity
    system to 1e-6 on 200 random count/binary instances."""
    rng = np.random.default_rng(77_001)
    worst = 0.0
    for i in range(200):
        n, p = 30, 7
        x = rng.standard_normal((n, p))
        if i % 2 == 0:
            y = (rng.random(n) < 0.5).astype(float)
            if y.min() == y.max():
                y[0] = 1.0 - y[0]
            fam = BERNOULLI
        else:
            y = rng.poisson(1.5, n).astype(float)
            if y.max() == 0:
                y[0] = 1.0
            fam = POISSON
        inst = ProblemInstance(np.ones((n, 1)), x, y, fam)
        lam = float(rng.uniform(0.1, 0.9)) * zero_threshold_glm(inst)
        fit = glm_lasso_fit(inst, lam)
        assert fit.converged
        worst = max(worst, glm_kkt_residual(inst, fit.beta0, fit.beta, lam))
    print(f"criterion 7: worst stationarity residual {worst:.2e}")
    assert worst <= 1e-6


def _criterion8_rep(rep):
    rng = substream_rng(88_001, rep)
    n, p = 200, 500
    x = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    inst = ProblemInstance(np.zeros((n, 0)), x, y, GAUSSIAN)
    rq = sigma2_refitted_qut(inst, 0.05, 1000,
                             split_seed=substream_seed(88_001, rep, 1),
                             seed=substream_seed(88_001, rep, 2))
    rc = sigma2_residual_cv(inst, 10, seed=substream_seed(88_001, rep, 3))
    return rq.sigma2, rc.sigma2


def test_criterion_08_variance_calibration():
    """Refitted-QUT is centered on the true variance and no more variable
    than the residual-CV estimator on null data."""
    with ProcessPoolExecutor(max_workers=WORKERS) as pool:
        pairs = list(pool.map(_criterion8_rep, range(100)))
    rq = np.array([p[0] for p in pairs])
    rc = np.array([p[1] for p in pairs])

    def iqr(a):
        return float(np.percentile(a, 75) - np.percentile(a, 25))

    med = float(np.median(rq))
    print(f"criterion 8: refitted-QUT median {med:.3f}, IQR {iqr(rq):.3f}; "
          f"residual-CV IQR {iqr(rc):.3f}")
    assert abs(med - 1.0) <= 0.1
    assert iqr(rq) <= iqr(rc)


def test_criterion_09_intercept_sensitivity():
    """The final-step intercept estimate is less biased than the initial
    step, and the selection quality is insensitive to which is used."""
    spec = ScenarioSpec(100, 300, 0.5, 0.0, 0.5, POISSON, 100, seed=99_001)
    report = run_sensitivity_study(spec, alpha=0.05, m=1000, workers=WORKERS)
    arms = {}
    for rec in report.records:
        if "tpr" in rec:
            arms.setdefault(rec["arm"], []).append(rec)
    med_init = float(np.median([abs(r["intercept"] - 1.0)
                                for r in arms["initial"]]))
    med_final = float(np.median([abs(r["intercept"] - 1.0)
                                 for r in arms["final"]]))
    by_rep = {r["rep"]: r["tpr"] for r in arms["oracle"]}
    diffs = [abs(by_rep[r["rep"]] - r["tpr"]) for r in arms["final"]]
    med_diff = float(np.median(diffs))
    print(f"criterion 9: |initial-1| median {med_init:.3f}, "
          f"|final-1| median {med_final:.3f}, |TPr diff| median {med_diff:.3f}")
    assert med_final < med_init
    assert med_diff <= 0.1


def test_criterion_10_determinism():
    """Seeded runs are bit-identical across repeated executions and across
    worker counts."""
    rng = np.random.default_rng(10_001)
    x = rng.standard_normal((20, 12))
    sampler = NullSampler(np.ones((20, 1)), x, GAUSSIAN, sigma=1.0, seed=42)
    r_serial = compute_qut(sampler, PenaltySpec.lasso(), 0.05, 240, workers=1)
    r_again = compute_qut(sampler, PenaltySpec.lasso(), 0.05, 240, workers=1)
    r_pool = compute_qut(sampler, PenaltySpec.lasso(), 0.05, 240, workers=2)
    assert r_serial == r_again == r_pool

    spec = ScenarioSpec(30, 25, 0.3, 0.0, 1.5, GAUSSIAN, 4, seed=7)
    a = run_table2_campaign([spec], ["qut_lasso", "cv_min"], m=120,
                            workers=1)
    b = run_table2_campaign([spec], ["qut_lasso", "cv_min"], m=120,
                            workers=2)
    assert a.records == b.records

    grid = PhaseGridSpec(30, (10,), (0.2, 0.5), replications=3, seed=3)
    pa = run_phase_campaign(grid, ["oracle", "qut_lasso"], m=100, workers=1)
    pb = run_phase_campaign(grid, ["oracle", "qut_lasso"], m=100, workers=2)
    assert pa.records == pb.records
    print("criterion 10: bit-identical across executions and worker counts")
