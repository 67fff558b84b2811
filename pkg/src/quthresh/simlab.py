"""Synthetic-data experiments: scenario generation, selection metrics, and
the simulation campaigns (benchmark table, screening phase transition,
intercept-sensitivity study, real-data holdout).

Replications are independent tasks seeded by counter-derived substreams, so
campaign outputs do not depend on worker count or scheduling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .families import (
    GAUSSIAN,
    GlmFamily,
    ProblemInstance,
    QutError,
    SupportMetrics,
    substream_rng,
)
from .paths import (
    CV_1SE,
    CV_MIN,
    cv_select_lambda,
    instance_lambda_max,
    lambda_grid,
    support_path,
)
from .qut import (
    NullSampler,
    compute_qut,
    fit_at_threshold,
    qut_pipeline_glm,
)
from .reportio import write_csv, write_json
from .solvers import SolverConfig, glm_lasso_fit, mle_refit, null_mle
from .variance import sigma2_refitted_qut
from .zerothresh import PenaltySpec

QUT_LASSO = "qut_lasso"
QUT_SQRT_LASSO = "qut_sqrt_lasso"
CVMIN = "cv_min"
CV1SE = "cv_1se"
ORACLE = "oracle"

TABLE_METHODS = (QUT_LASSO, QUT_SQRT_LASSO, CVMIN, CV1SE)
PHASE_METHODS = (ORACLE, QUT_LASSO, QUT_SQRT_LASSO, CVMIN, CV1SE)


def substream_seed(seed: int, *key: int) -> int:
    """Derive an independent integer seed from (seed, key)."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(frozen=True)
class ScenarioSpec:
    """Synthetic regression scenario: equicorrelated Gaussian design,
    Laplace-tailed coefficients scaled to a target signal strength,
    intercept fixed at one."""

    n: int
    p: int
    theta: float
    omega: float
    snr: float
    family: GlmFamily = GAUSSIAN
    replications: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValueError("n and p must be positive")
        if not 0.0 < self.theta <= 1.0:
            raise ValueError("theta must lie in (0, 1]")
        if not 0.0 <= self.omega < 1.0:
            raise ValueError("omega must lie in [0, 1)")
        if not self.snr > 0:
            raise ValueError("snr must be positive (a zero signal has no "
                             "true support to score against)")
        if self.s_star > self.p:
            raise ValueError("implied support size exceeds P")
        if self.replications < 1:
            raise ValueError("need at least one replication")

    @property
    def s_star(self) -> int:
        return math.ceil(self.n ** self.theta)

    def label(self) -> str:
        return (f"{self.family.kind}(theta={self.theta:g},omega={self.omega:g},"
                f"snr={self.snr:g},n={self.n},p={self.p})")


@dataclass(frozen=True)
class PhaseGridSpec:
    """Grid for the variable-screening phase-transition experiment."""

    p: int
    n_list: tuple[int, ...]
    rho_list: tuple[float, ...]
    magnitude: float = 10.0
    replications: int = 20
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "n_list", tuple(int(n) for n in self.n_list))
        object.__setattr__(self, "rho_list",
                           tuple(float(r) for r in self.rho_list))
        if self.p < 1 or not self.n_list or not self.rho_list:
            raise ValueError("grid must be nonempty")
        for rho in self.rho_list:
            if not 0.0 < rho <= 1.0:
                raise ValueError("sparsity fractions must lie in (0, 1]")
        for n in self.n_list:
            if n < 2:
                raise ValueError("n must be at least 2")


def generate_scenario(spec: ScenarioSpec, rep: int):
    """One replication: (instance, true beta, true support).

    Design rows are N(0, Sigma) with Sigma = (1-omega) I + omega 11^T via the
    shared-factor construction; nonzero coefficients are Laplace(1) draws
    rescaled so beta^T Sigma beta equals the requested signal strength.
    """
    rng = substream_rng(spec.seed, rep)
    n, p, omega = spec.n, spec.p, spec.omega
    shared = rng.standard_normal(n)
    x = math.sqrt(omega) * shared[:, None] + \
        math.sqrt(1.0 - omega) * rng.standard_normal((n, p))
    support = np.sort(rng.choice(p, spec.s_star, replace=False))
    raw = rng.laplace(0.0, 1.0, spec.s_star)
    beta = np.zeros(p)
    beta[support] = raw
    quad = (1.0 - omega) * float(beta @ beta) + omega * float(beta.sum()) ** 2
    beta *= math.sqrt(spec.snr / quad)
    theta = 1.0 + x @ beta
    y = spec.family.sample(theta, rng)
    instance = ProblemInstance(np.ones((n, 1)), x, y, spec.family)
    return instance, beta, tuple(int(i) for i in support)


def support_metrics(s_hat, s_star) -> SupportMetrics:
    """True-positive and false-discovery proportions of a selection."""
    hat, star = set(s_hat), set(s_star)
    if not star:
        raise ValueError("the true support must be nonempty")
    tpr = len(hat & star) / len(star)
    fdr = len(hat - star) / len(hat) if hat else 0.0
    return SupportMetrics(tpr, fdr, len(hat), len(star))


def rmse_metric(beta_hat, beta_star, omega: float, snr: float) -> float:
    """sqrt(E (x_new^T beta* - x_new^T beta_hat)^2 / snr), analytic over the
    equicorrelated Gaussian design."""
    d = np.asarray(beta_hat, dtype=float) - np.asarray(beta_star, dtype=float)
    quad = (1.0 - omega) * float(d @ d) + omega * float(d.sum()) ** 2
    return math.sqrt(max(quad, 0.0) / snr)


def oir_metric(path, s_star, eval_support) -> float:
    """Smallest screening model size over the path relative to the evaluated
    model, zero when the evaluated model does not screen."""
    star = set(s_star)
    if not star:
        raise ValueError("the true support must be nonempty")
    hat = set(eval_support)
    if not hat >= star:
        return 0.0
    s_min = len(hat)
    for _, sup in path:
        if set(sup) >= star and len(sup) < s_min:
            s_min = len(sup)
    return s_min / len(hat)


@dataclass
class SimReport:
    """Per-replication records plus aggregate summary rows."""

    records: list
    summary: list

    def to_csv(self, path) -> None:
        write_csv(path, self.records)

    def to_json(self, path) -> None:
        write_json(path, {"summary": self.summary,
                          "n_records": len(self.records)})

    def format_summary(self) -> str:
        lines = []
        for row in self.summary:
            parts = [f"{k}={_fmt(v)}" for k, v in row.items()]
            lines.append("  ".join(parts))
        return "\n".join(lines)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.4g}"
    return str(v)


def aggregate(records, group_keys, metric_keys) -> list:
    groups = {}
    for rec in records:
        key = tuple(rec.get(k) for k in group_keys)
        groups.setdefault(key, []).append(rec)
    out = []
    for key, recs in groups.items():
        row = dict(zip(group_keys, key))
        row["n_reps"] = len(recs)
        for metric in metric_keys:
            vals = np.array([r[metric] for r in recs
                             if r.get(metric) is not None and
                             not (isinstance(r[metric], float)
                                  and math.isnan(r[metric]))])
            if vals.size:
                row[f"{metric}_mean"] = float(vals.mean())
                row[f"{metric}_se"] = float(
                    vals.std(ddof=1) / math.sqrt(vals.size)) if vals.size > 1 \
                    else 0.0
            else:
                row[f"{metric}_mean"] = float("nan")
                row[f"{metric}_se"] = float("nan")
        out.append(row)
    return out


def _with_sigma(instance: ProblemInstance, sigma: float) -> ProblemInstance:
    return ProblemInstance(instance.x0, instance.x, instance.y,
                           instance.family, sigma)


def apply_method(instance: ProblemInstance, method: str, *, seed: int,
                 alpha: float = 0.05, m: int = 1000, cv_folds: int = 10,
                 cfg: SolverConfig | None = None,
                 sigma_known: float | None = None) -> dict:
    """Run one selection rule on one instance.

    Returns a dict with the selected support, the final coefficients (the
    likelihood refit except for CV-1se, which stays penalized), the penalty
    used, and method-specific diagnostics.
    """
    out = {"method": method, "sigma2_hat": None, "refit_failed": False}
    if method == QUT_LASSO:
        work = instance
        if instance.family.is_gaussian:
            if sigma_known is not None:
                work = _with_sigma(instance, sigma_known)
            elif instance.sigma is None:
                est = sigma2_refitted_qut(instance, alpha, m,
                                          split_seed=substream_seed(seed, 1),
                                          seed=substream_seed(seed, 2),
                                          cfg=cfg)
                out["sigma2_hat"] = est.sigma2
                work = _with_sigma(instance, math.sqrt(est.sigma2))
        res = qut_pipeline_glm(work, alpha, m, seed=substream_seed(seed, 3),
                               cfg=cfg)
        final = res.final
        out.update(support=res.penalized.support, beta0=final.beta0,
                   beta=final.beta, lam=res.threshold.lambda_qut,
                   refit_failed=res.refit_failed)
        return out
    if method == QUT_SQRT_LASSO:
        if not instance.family.is_gaussian:
            raise ValueError("square-root lasso rule needs a Gaussian family")
        work = instance if instance.sigma is not None \
            else _with_sigma(instance, 1.0)  # pivotal: any sigma works
        res = qut_pipeline_glm(work, alpha, m, penalty_kind="sqrt_lasso",
                               seed=substream_seed(seed, 3), cfg=cfg)
        final = res.final
        out.update(support=res.penalized.support, beta0=final.beta0,
                   beta=final.beta, lam=res.threshold.lambda_qut,
                   refit_failed=res.refit_failed)
        return out
    if method in (CVMIN, CV1SE):
        rule = CV_MIN if method == CVMIN else CV_1SE
        lam, _ = cv_select_lambda(instance, rule, cv_folds,
                                  substream_seed(seed, 4), cfg=cfg)
        fit = fit_at_threshold(instance, lam, "lasso", cfg)
        out.update(support=fit.support, lam=lam)
        if method == CV1SE:
            out.update(beta0=fit.beta0, beta=fit.beta)
            return out
        try:
            refit = mle_refit(instance, fit.support, cfg)
            out.update(beta0=refit.beta0, beta=refit.beta)
        except (QutError, ValueError):
            out.update(beta0=fit.beta0, beta=fit.beta, refit_failed=True)
        return out
    raise ValueError(f"unknown method {method!r}")


def _table2_rep(args):
    spec, rep, methods, alpha, m, cv_folds = args
    instance, beta_star, support_star = generate_scenario(spec, rep)
    records = []
    for j, method in enumerate(methods):
        seed = substream_seed(spec.seed, rep, 100 + j)
        res = apply_method(instance, method, seed=seed, alpha=alpha, m=m,
                           cv_folds=cv_folds)
        metrics = support_metrics(res["support"], support_star)
        rmse = rmse_metric(res["beta"], beta_star, spec.omega, spec.snr)
        records.append({
            "scenario": spec.label(), "family": spec.family.kind,
            "theta": spec.theta, "omega": spec.omega, "snr": spec.snr,
            "n": spec.n, "p": spec.p, "rep": rep, "method": method,
            "tpr": metrics.tpr, "fdr": metrics.fdr, "rmse": rmse,
            "s_hat": metrics.s_hat, "s_star": metrics.s_star,
            "lambda": res.get("lam"), "sigma2_hat": res.get("sigma2_hat"),
            "refit_failed": res.get("refit_failed", False),
        })
    return records


def _run_tasks(worker, tasks, workers: int) -> list:
    if workers <= 1 or len(tasks) < 2:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks))


def run_table2_campaign(specs, methods=TABLE_METHODS, *, alpha: float = 0.05,
                        m: int = 1000, cv_folds: int = 10,
                        workers: int = 1) -> SimReport:
    """Per-replication TPR/FDR/RMSE for each selection rule and scenario."""
    specs = [specs] if isinstance(specs, ScenarioSpec) else list(specs)
    methods = list(methods)
    for method in methods:
        if method not in TABLE_METHODS:
            raise ValueError(f"unknown method {method!r}")
    tasks = [(spec, rep, methods, alpha, m, cv_folds)
             for spec in specs for rep in range(spec.replications)]
    records = []
    for recs in _run_tasks(_table2_rep, tasks, workers):
        records.extend(recs)
    summary = aggregate(records, ["scenario", "method"],
                        ["tpr", "fdr", "rmse", "s_hat"])
    return SimReport(records, summary)


def _phase_rep(args):
    grid, i_n, i_rho, rep, methods, alpha, m = args
    n = grid.n_list[i_n]
    rho = grid.rho_list[i_rho]
    s_size = max(1, int(round(rho * n)))
    rng = substream_rng(grid.seed, i_n, i_rho, rep)
    x = rng.standard_normal((n, grid.p))
    support_star = np.sort(rng.choice(grid.p, s_size, replace=False))
    beta_star = np.zeros(grid.p)
    beta_star[support_star] = grid.magnitude
    y = x @ beta_star + rng.standard_normal(n)
    instance = ProblemInstance(np.zeros((n, 0)), x, y, GAUSSIAN, sigma=1.0)
    star = tuple(int(i) for i in support_star)

    lams = lambda_grid(instance_lambda_max(instance))
    supports = support_path(instance, lams)
    path = list(zip(lams, supports))
    records = []
    for j, method in enumerate(methods):
        seed = substream_seed(grid.seed, i_n, i_rho, rep, 100 + j)
        if method == ORACLE:
            oir = 1.0 if any(set(sup) >= set(star) for sup in supports) \
                else 0.0
        else:
            if method in (QUT_LASSO, QUT_SQRT_LASSO):
                kind = "sqrt_lasso" if method == QUT_SQRT_LASSO else "lasso"
                penalty = PenaltySpec.sqrt_lasso() \
                    if method == QUT_SQRT_LASSO else PenaltySpec.lasso()
                sampler = NullSampler.from_instance(instance, seed=seed)
                thr = compute_qut(sampler, penalty, alpha, m)
                fit = fit_at_threshold(instance, thr.lambda_qut, kind)
                eval_support = fit.support
            else:
                rule = CV_MIN if method == CVMIN else CV_1SE
                _, info = cv_select_lambda(instance, rule, 10, seed)
                eval_support = supports[info["index"]]
            oir = oir_metric(path, star, eval_support)
        records.append({
            "delta": n / grid.p, "rho": rho, "n": n, "p": grid.p,
            "s_star": s_size, "rep": rep, "method": method, "oir": oir,
        })
    return records


def run_phase_campaign(grid: PhaseGridSpec, methods=PHASE_METHODS, *,
                       alpha: float = 0.05, m: int = 1000,
                       workers: int = 1) -> SimReport:
    """OIR surface over (delta, rho) = (N/P, s*/N) for the selection rules."""
    methods = list(methods)
    for method in methods:
        if method not in PHASE_METHODS:
            raise ValueError(f"unknown method {method!r}")
    tasks = [(grid, i_n, i_rho, rep, methods, alpha, m)
             for i_n in range(len(grid.n_list))
             for i_rho in range(len(grid.rho_list))
             for rep in range(grid.replications)]
    records = []
    for recs in _run_tasks(_phase_rep, tasks, workers):
        records.extend(recs)
    summary = aggregate(records, ["delta", "rho", "method"], ["oir"])
    return SimReport(records, summary)


def _sensitivity_rep(args):
    spec, rep, alpha, m = args
    instance, beta_star, support_star = generate_scenario(spec, rep)
    v_init = null_mle(instance)
    if v_init is None:
        return [{"rep": rep, "arm": "skipped", "reason": "no null MLE"}]
    sampler_seed = substream_seed(spec.seed, rep, 11)

    def arm_run(intercept_value: float):
        sampler = NullSampler.from_instance(
            instance, intercept_beta0=np.array([intercept_value]),
            seed=sampler_seed)
        thr = compute_qut(sampler, PenaltySpec.lasso(), alpha, m)
        fit = glm_lasso_fit(instance, thr.lambda_qut)
        return thr, fit

    thr_init, fit_init = arm_run(float(v_init[0]))
    try:
        refit = mle_refit(instance, fit_init.support)
        final_intercept = float(refit.beta0[0])
    except (QutError, ValueError):
        final_intercept = float(fit_init.beta0[0])
    arms = [
        ("oracle", 1.0, None),
        ("initial", float(v_init[0]), (thr_init, fit_init)),
        ("final", final_intercept, None),
    ]
    records = []
    for name, b0v, cached in arms:
        thr, fit = cached if cached is not None else arm_run(b0v)
        metrics = support_metrics(fit.support, support_star)
        records.append({
            "rep": rep, "arm": name, "intercept": b0v,
            "lambda_qut": thr.lambda_qut, "tpr": metrics.tpr,
            "fdr": metrics.fdr, "s_hat": metrics.s_hat,
        })
    return records


def run_sensitivity_study(spec: ScenarioSpec, *, alpha: float = 0.05,
                          m: int = 1000, workers: int = 1) -> SimReport:
    """Threshold sensitivity to the intercept estimate on count data.

    Each replication computes the threshold under three intercepts (the
    oracle value 1, the initial constrained-MLE step, and the final refit
    estimate) with identical Monte Carlo seeds, so the arms differ only via
    the intercept fed to the null sampler.
    """
    if spec.family.kind != "poisson":
        raise ValueError("the sensitivity study runs on Poisson scenarios")
    tasks = [(spec, rep, alpha, m) for rep in range(spec.replications)]
    records = []
    for recs in _run_tasks(_sensitivity_rep, tasks, workers):
        records.extend(recs)
    summary = aggregate([r for r in records if "tpr" in r],
                        ["arm"], ["intercept", "tpr", "fdr", "s_hat"])
    return SimReport(records, summary)


def run_holdout(instance: ProblemInstance, method: str,
                split_fraction: float = 0.5, repeats: int = 100, *,
                alpha: float = 0.05, m: int = 1000, cv_folds: int = 10,
                seed: int = 0, workers: int = 1) -> SimReport:
    """Repeated train/test evaluation of one selection rule.

    Records the selected-model size and the test mean squared prediction
    error (Gaussian) or the correct classification rate at probability 0.5
    (Bernoulli). A split whose refit does not exist is recorded and skipped.
    """
    fam = instance.family
    if fam.kind not in ("gaussian", "bernoulli"):
        raise ValueError("holdout evaluation supports Gaussian and Bernoulli")
    if not 0.0 < split_fraction < 1.0:
        raise ValueError("split fraction must lie in (0, 1)")
    tasks = [(instance, method, split_fraction, r, alpha, m, cv_folds, seed)
             for r in range(repeats)]
    records = _run_tasks(_holdout_rep, tasks, workers)
    ok = [r for r in records if not r["skipped"]]
    metric = "test_mspe" if fam.is_gaussian else "test_class_rate"
    summary = aggregate(ok, ["method"], ["size", metric])
    if summary:
        summary[0]["n_skipped"] = len(records) - len(ok)
    return SimReport(records, summary)


def _holdout_rep(args):
    instance, method, frac, rep, alpha, m, cv_folds, seed = args
    rng = substream_rng(seed, rep, 5)
    n = instance.n
    n_train = math.ceil(n * frac)
    perm = rng.permutation(n)
    train = instance.rows(np.sort(perm[:n_train]))
    test_idx = np.sort(perm[n_train:])
    x0_te, x_te, y_te = (instance.x0[test_idx], instance.x[test_idx],
                         instance.y[test_idx])
    rec = {"rep": rep, "method": method, "n_train": n_train,
           "skipped": False}
    try:
        res = apply_method(train, method, seed=substream_seed(seed, rep, 6),
                           alpha=alpha, m=m, cv_folds=cv_folds)
    except (QutError, ValueError) as exc:
        rec.update(skipped=True, reason=type(exc).__name__)
        return rec
    theta = x0_te @ res["beta0"] + x_te @ res["beta"]
    rec["size"] = len(res["support"])
    rec["lambda"] = res.get("lam")
    rec["refit_failed"] = res.get("refit_failed", False)
    if instance.family.is_gaussian:
        rec["test_mspe"] = float(np.mean((y_te - theta) ** 2))
    else:
        prob = special.expit(theta)
        rec["test_class_rate"] = float(np.mean((prob > 0.5) == (y_te > 0.5)))
    return rec
