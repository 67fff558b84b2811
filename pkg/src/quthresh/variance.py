"""Noise-variance estimators for Gaussian regression with P possibly >> N.

Three estimators: residual variance at a CV-tuned lasso, refitted
cross-validation (RCV) on a sample split, and refitted QUT, the fixed point
where the RCV estimate computed with a QUT-tuned lasso equals its own input
variance. The QUT tuning scale lambda_Z (the sigma=1 null quantile) is
computed once per half-design and reused by every fixed-point evaluation,
and the row split stays fixed across the bisection so the fixed-point map is
a deterministic function.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np

from .families import (
    GAUSSIAN,
    ProblemInstance,
    SaturatedModelError,
    substream_rng,
)
from .paths import cv_select_lambda
from .qut import NullSampler, compute_qut
from .solvers import SolverConfig, lasso_fit, orth_basis, project_out
from .zerothresh import PenaltySpec

RESIDUAL_CV = "residual_cv"
RCV = "rcv"
REFITTED_QUT = "refitted_qut"

BISECTION_MAX_STEPS = 60
BRACKET_LO_FACTOR = 1e-4
BRACKET_HI_FACTOR = 10.0


@dataclass(frozen=True)
class VarianceEstimate:
    sigma2: float
    method: str
    diagnostics: dict

    def __post_init__(self):
        if not self.sigma2 > 0:
            raise ValueError("estimated variance must be positive")


def qut_lambda_scale(x0, x, alpha: float = 0.05, m: int = 1000,
                     seed: int = 0, workers: int = 1) -> float:
    """lambda_Z: the sigma = 1 null quantile for this design.

    The Gaussian lasso threshold factorizes as sigma * lambda_Z, so one
    Monte Carlo run per design serves every candidate sigma.
    """
    sampler = NullSampler(x0, x, GAUSSIAN, sigma=1.0, seed=seed)
    return compute_qut(sampler, PenaltySpec.lasso(), alpha, m,
                       workers).lambda_qut


def _projected_mean_square(instance: ProblemInstance) -> float:
    q = orth_basis(instance.x0)
    r = project_out(q, instance.y)
    return float(r @ r) / instance.n


def sigma2_residual_cv(instance: ProblemInstance, cv_folds: int = 10,
                       *, seed: int = 0, cfg: SolverConfig | None = None,
                       n_lambdas: int = 100) -> VarianceEstimate:
    """Residual variance at the CV-min lasso: ||y - fit||^2 / (N - s_hat)."""
    if not instance.family.is_gaussian:
        raise ValueError("variance estimation applies to Gaussian instances")
    lam, info = cv_select_lambda(instance, "min", cv_folds, seed,
                                 n_lambdas, cfg=cfg)
    fit = lasso_fit(instance, lam, cfg)
    s_hat = fit.s_hat
    df = instance.n - s_hat
    if df < 1:
        raise SaturatedModelError(
            f"CV-selected model uses all {instance.n} degrees of freedom"
        )
    resid = instance.y - instance.x0 @ fit.beta0 - instance.x @ fit.beta
    sigma2 = float(resid @ resid) / df
    return VarianceEstimate(sigma2, RESIDUAL_CV, {
        "lambda": lam, "s_hat": s_hat, "cv_folds": cv_folds, "seed": seed,
    })


def split_halves(n: int, split_seed: int):
    """Seeded disjoint halves; odd N gives the first half ceil(N/2) rows."""
    rng = substream_rng(split_seed, 71)
    perm = rng.permutation(n)
    n1 = math.ceil(n / 2)
    return np.sort(perm[:n1]), np.sort(perm[n1:])


def _cross_half_sigma2(eval_inst: ProblemInstance, support) -> float:
    """||(I - P)y||^2 / (n - m) with P over [X0, X_support] of the half.

    The denominator follows the split-estimator formula (n minus the
    selected-model size); saturation is judged against the full projection
    dimension m + P0, since the unpenalized block sits inside P as well.
    """
    cols = eval_inst.x[:, list(support)] if support else \
        np.zeros((eval_inst.n, 0))
    basis = np.hstack([eval_inst.x0, cols])
    q = orth_basis(basis)
    r = project_out(q, eval_inst.y)
    df = eval_inst.n - len(support)
    if df < 1 or eval_inst.n - len(support) - eval_inst.p0 < 1:
        raise SaturatedModelError("no residual degrees of freedom on a half")
    return float(r @ r) / df


def _default_selector(cv_folds: int, cfg: SolverConfig | None,
                      n_lambdas: int = 100):
    def select(half: ProblemInstance, seed: int):
        lam, _ = cv_select_lambda(half, "min", cv_folds, seed,
                                  n_lambdas, cfg=cfg)
        return lasso_fit(half, lam, cfg).support
    return select


def sigma2_rcv(instance: ProblemInstance, selector=None, split_seed: int = 0,
               *, cv_folds: int = 10,
               cfg: SolverConfig | None = None) -> VarianceEstimate:
    """Refitted cross-validation: select on one half, project on the other.

    ``selector(half_instance, seed) -> support`` defaults to the CV-min
    lasso. The averaged cross-projection residual variances form the
    estimate; different split seeds give genuinely different estimates.
    """
    if not instance.family.is_gaussian:
        raise ValueError("variance estimation applies to Gaussian instances")
    selector = selector or _default_selector(cv_folds, cfg)
    idx1, idx2 = split_halves(instance.n, split_seed)
    half1, half2 = instance.rows(idx1), instance.rows(idx2)
    m1_support = selector(half1, split_seed * 2 + 1)
    m2_support = selector(half2, split_seed * 2 + 2)
    sig1 = _cross_half_sigma2(half2, m1_support)
    sig2 = _cross_half_sigma2(half1, m2_support)
    return VarianceEstimate(0.5 * (sig1 + sig2), RCV, {
        "split_sizes": (len(idx1), len(idx2)),
        "m_hat": (len(m1_support), len(m2_support)),
        "sigma2_halves": (sig1, sig2),
        "split_seed": split_seed,
    })


def sigma2_refitted_qut(instance: ProblemInstance, alpha: float = 0.05,
                        m: int = 1000, tol: float = 1e-4, *,
                        split_seed: int = 0, seed: int = 0, workers: int = 1,
                        cfg: SolverConfig | None = None) -> VarianceEstimate:
    """Fixed point sigma2 = RCV(sigma2) with the lasso tuned at sigma*lambda_Z.

    Bisection on g(s) = RCV(s) - s over [1e-4 v, 10 v] with v the projected
    residual mean square; ``tol`` is relative to v, which keeps the estimator
    exactly scale-equivariant. The same row split is reused by every
    evaluation. Without a sign change in the bracket, the evaluation point
    minimizing |g| is returned and flagged. A saturated half during an
    evaluation counts as an infinite RCV value (g > 0 there).
    """
    if not instance.family.is_gaussian:
        raise ValueError("variance estimation applies to Gaussian instances")
    v_hat = _projected_mean_square(instance)
    if v_hat <= 0:
        raise ValueError("response is exactly in the span of X0")
    idx1, idx2 = split_halves(instance.n, split_seed)
    half1, half2 = instance.rows(idx1), instance.rows(idx2)
    # One threshold scale for the design at hand; both half-selectors are
    # tuned with sigma * lambda_z.
    lam_z = qut_lambda_scale(instance.x0, instance.x, alpha, m,
                             seed=seed, workers=workers)
    evaluations = 0
    last_m_hat = (0, 0)

    def g(s2: float) -> float:
        nonlocal evaluations, last_m_hat
        evaluations += 1
        sigma = math.sqrt(s2)
        sup1 = lasso_fit(half1, sigma * lam_z, cfg).support
        sup2 = lasso_fit(half2, sigma * lam_z, cfg).support
        last_m_hat = (len(sup1), len(sup2))
        try:
            sig1 = _cross_half_sigma2(half2, sup1)
            sig2 = _cross_half_sigma2(half1, sup2)
        except SaturatedModelError:
            return math.inf
        return 0.5 * (sig1 + sig2) - s2

    tol_abs = tol * v_hat
    lo, hi = BRACKET_LO_FACTOR * v_hat, BRACKET_HI_FACTOR * v_hat
    g_lo, g_hi = g(lo), g(hi)
    best_s2, best_abs = (lo, abs(g_lo)) if abs(g_lo) <= abs(g_hi) \
        else (hi, abs(g_hi))
    no_sign_change = not (
        (g_lo > 0 > g_hi) or (g_lo < 0 < g_hi) or g_lo == 0 or g_hi == 0
    )
    steps = 0
    if not no_sign_change and best_abs > tol_abs:
        for steps in range(1, BISECTION_MAX_STEPS + 1):
            mid = 0.5 * (lo + hi)
            g_mid = g(mid)
            if abs(g_mid) < best_abs:
                best_s2, best_abs = mid, abs(g_mid)
            if best_abs <= tol_abs:
                break
            if (g_lo > 0 > g_mid) or (g_lo < 0 < g_mid):
                hi, g_hi = mid, g_mid
            else:
                lo, g_lo = mid, g_mid
    return VarianceEstimate(best_s2, REFITTED_QUT, {
        "split_sizes": (half1.n, half2.n),
        "m_hat": last_m_hat,
        "iterations": steps,
        "evaluations": evaluations,
        "lambda_z": lam_z,
        "residual_g": best_abs,
        "no_sign_change": no_sign_change,
        "bracket": (BRACKET_LO_FACTOR * v_hat, BRACKET_HI_FACTOR * v_hat),
        "split_seed": split_seed,
    })


def estimate_sigma2(instance: ProblemInstance, method: str, *,
                    alpha: float = 0.05, m: int = 1000, seed: int = 0,
                    cv_folds: int = 10, workers: int = 1,
                    cfg: SolverConfig | None = None) -> VarianceEstimate:
    """Dispatch by method name (residual_cv | rcv | refitted_qut)."""
    if method == RESIDUAL_CV:
        return sigma2_residual_cv(instance, cv_folds, seed=seed, cfg=cfg)
    if method == RCV:
        return sigma2_rcv(instance, split_seed=seed, cv_folds=cv_folds,
                          cfg=cfg)
    if method == REFITTED_QUT:
        return sigma2_refitted_qut(instance, alpha, m, split_seed=seed,
                                   seed=seed, workers=workers, cfg=cfg)
    raise ValueError(f"unknown variance method {method!r}")
