"""Quantile universal threshold engine.

Simulates the null-thresholding statistic (the zero threshold evaluated on
data generated under the all-zero model), takes its conservative empirical
upper quantile, and wires the three-step GLM pipeline around it.

Draw ``i`` always uses the substream derived from (seed, i), so Monte Carlo
results are bit-identical for any worker count or scheduling.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import math

import numpy as np
from scipy import special

from .families import (
    ConvergenceError,
    DomainError,
    GlmFamily,
    MleNonExistentError,
    ProblemInstance,
    SparseFit,
    ThresholdResult,
)
from .solvers import (
    SolverConfig,
    glm_lasso_fit,
    lasso_fit,
    mle_refit,
    null_mle,
    orth_basis,
    project_out,
    sqrt_lasso_fit,
)
from .zerothresh import (
    GROUP_LASSO,
    GROUP_SQRT_LASSO,
    LASSO,
    SQRT_LASSO,
    PenaltySpec,
    zero_threshold,
)

FIXED_DESIGN = "fixed"
BOOTSTRAP_DESIGN = "bootstrap"

DEFAULT_ALPHA = 0.05
DEFAULT_MC_SAMPLES = 1000


def draw_rng(seed: int, index: int) -> np.random.Generator:
    """Counter-derived substream: independent of scheduling and worker count."""
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),))
    return np.random.default_rng(ss)


@dataclass(frozen=True)
class NullSampler:
    """Specification of the null model the threshold is calibrated on.

    Under the null the response follows the family with linear predictor
    X0 @ intercept_beta0 (Gaussian adds sigma-scaled standard normal noise).
    ``design`` is "fixed" or "bootstrap"; the bootstrap variant resamples the
    rows of [X0, X] with replacement independently per draw.
    """

    x0: np.ndarray
    x: np.ndarray
    family: GlmFamily
    design: str = FIXED_DESIGN
    sigma: float | None = None
    intercept_beta0: np.ndarray | None = None
    seed: int = 0

    def __post_init__(self):
        x0 = np.atleast_2d(np.asarray(self.x0, dtype=float))
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        if x0.size == 0:
            x0 = np.zeros((x.shape[0], 0))
        if x0.shape[0] != x.shape[0]:
            raise ValueError("x0 and x must share rows")
        if self.design not in (FIXED_DESIGN, BOOTSTRAP_DESIGN):
            raise ValueError("design must be 'fixed' or 'bootstrap'")
        if self.seed < 0:
            raise ValueError("seed must be a nonnegative integer")
        sigma = self.sigma
        if callable(sigma):
            sigma = float(sigma())
        if self.family.is_gaussian:
            if sigma is None or not sigma > 0:
                raise ValueError("Gaussian null sampling needs a positive sigma")
        b0 = self.intercept_beta0
        b0 = np.zeros(x0.shape[1]) if b0 is None else np.asarray(b0, float).ravel()
        if b0.shape[0] != x0.shape[1]:
            raise ValueError("intercept_beta0 length must match X0 columns")
        for name, val in (("x0", x0), ("x", x), ("intercept_beta0", b0.copy())):
            val = np.array(val, dtype=float)
            val.setflags(write=False)
            object.__setattr__(self, name, val)
        object.__setattr__(self, "sigma", sigma)
        # Projection basis reused by every fixed-design Gaussian draw.
        q = orth_basis(self.x0) if self.design == FIXED_DESIGN else None
        object.__setattr__(self, "_q_fixed", q)

    @classmethod
    def from_instance(cls, instance: ProblemInstance, *, design=FIXED_DESIGN,
                      sigma=None, intercept_beta0=None, seed=0):
        return cls(instance.x0, instance.x, instance.family, design,
                   sigma if sigma is not None else instance.sigma,
                   intercept_beta0, seed)

    @property
    def n(self) -> int:
        return self.x.shape[0]


def _gaussian_stat(sampler: NullSampler, penalty: PenaltySpec,
                   x0, x, q, rng) -> float:
    # The statistic uses (I - P_X0)Y0; the projected mean vanishes exactly,
    # so drawing the projected noise keeps the draw ancillary in beta0*
    # bit-for-bit.
    z = rng.standard_normal(sampler.n)
    e = sampler.sigma * project_out(q, z)
    kind = penalty.kind
    if kind == LASSO:
        return float(np.abs(x.T @ e).max(initial=0.0))
    if kind == SQRT_LASSO:
        norm = float(np.linalg.norm(e))
        return 0.0 if norm == 0.0 else float(np.abs(x.T @ e).max(initial=0.0)) / norm
    if kind in (GROUP_LASSO, GROUP_SQRT_LASSO):
        vals = [float(np.linalg.norm(x[:, list(g)].T @ e))
                for g in penalty.groups]
        top = max(vals)
        if kind == GROUP_LASSO:
            return top
        norm = float(np.linalg.norm(e))
        return 0.0 if norm == 0.0 else top / norm
    if x0.shape[1] > 0:
        raise ValueError(
            f"penalty {kind!r} has no unpenalized-block null statistic; "
            "drop X0 or use lasso/sqrt-lasso/group variants"
        )
    inst = ProblemInstance(x0, x, e, sampler.family)
    return zero_threshold(inst, penalty)


def sample_null_stat(sampler: NullSampler,
                     penalty: PenaltySpec | None = None,
                     index: int = 0) -> float:
    """One draw of the null-thresholding statistic (may be +inf for GLMs)."""
    from .zerothresh import zero_threshold_glm

    penalty = penalty or PenaltySpec.lasso()
    rng = draw_rng(sampler.seed, index)
    if sampler.design == BOOTSTRAP_DESIGN:
        idx = rng.integers(0, sampler.n, sampler.n)
        x0, x = sampler.x0[idx], sampler.x[idx]
        q = orth_basis(x0)
    else:
        x0, x = sampler.x0, sampler.x
        q = sampler._q_fixed
    if sampler.family.is_gaussian:
        return _gaussian_stat(sampler, penalty, x0, x, q, rng)
    if penalty.kind != LASSO:
        raise ValueError("non-Gaussian null statistics are defined for the "
                         "L1-penalized likelihood only")
    theta = x0 @ sampler.intercept_beta0 if x0.shape[1] else np.zeros(sampler.n)
    y0 = sampler.family.sample(theta, rng)
    return zero_threshold_glm(ProblemInstance(x0, x, y0, sampler.family))


def _draw_chunk(sampler, penalty, lo, hi):
    return [sample_null_stat(sampler, penalty, i) for i in range(lo, hi)]


def _draw_many(sampler, penalty, m, workers) -> np.ndarray:
    if workers <= 1 or m < 2 * workers:
        return np.array(_draw_chunk(sampler, penalty, 0, m))
    bounds = np.linspace(0, m, workers + 1).astype(int)
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_draw_chunk, sampler, penalty, lo, hi)
                   for lo, hi in zip(bounds[:-1], bounds[1:])]
        for fut in futures:
            out.extend(fut.result())
    return np.array(out)


def upper_quantile(draws: np.ndarray, alpha: float) -> float:
    """The ceil((1-alpha)M)-th ascending order statistic, +inf sorted last.

    A conservative empirical upper quantile: it over-covers alpha slightly,
    erring toward sparsity. Infinite draws are kept, not discarded; dropping
    them would bias the quantile downward.
    """
    m = draws.shape[0]
    k = math.ceil((1.0 - alpha) * m)
    k = min(max(k, 1), m)
    return float(np.sort(draws)[k - 1])


def compute_qut(sampler: NullSampler, penalty: PenaltySpec | None,
                alpha: float = DEFAULT_ALPHA, m: int = DEFAULT_MC_SAMPLES,
                workers: int = 1) -> ThresholdResult:
    """Monte Carlo quantile universal threshold.

    Draws ``m`` independent null statistics and returns their upper-alpha
    empirical quantile. The result is +inf (with ``quantile_is_infinite``
    set) when too many null draws fall outside the MLE existence domain,
    i.e. the null model itself violates the domain too often.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    if m < 1:
        raise ValueError("need at least one Monte Carlo draw")
    draws = _draw_many(sampler, penalty, m, workers)
    lam = upper_quantile(draws, alpha)
    inf_frac = float(np.mean(np.isinf(draws)))
    return ThresholdResult(lam, float(alpha), int(m), inf_frac,
                           int(sampler.seed))


def implied_level_best_subset(p: int) -> float:
    """The level alpha_P ~ 1/sqrt(pi log P) implied by the BIC-doubling rule."""
    if p < 2:
        raise ValueError("need P >= 2")
    return 1.0 / math.sqrt(math.pi * math.log(p))


@dataclass(frozen=True)
class ClosedFormThreshold:
    value: float
    implied_level: float | None = None


BEST_SUBSET_ORTHONORMAL = "best_subset_orthonormal"
TV1D_ASYMPTOTIC = "tv1d"
GROUP_LASSO_ORTHONORMAL = "group_lasso_orthonormal"


def closed_form_qut(kind: str, sigma: float, p: int,
                    group_size: int | None = None) -> ClosedFormThreshold:
    """Closed-form threshold instances.

    - best_subset_orthonormal: sigma^2 log P (twice the BIC penalty), with
      the implied level 1/sqrt(pi log P);
    - tv1d: sigma sqrt(P log log P) / 2 (sup of the limiting bridge);
    - group_lasso_orthonormal: sigma sqrt(2 log P + (Q-1) log log P
      - 2 log Gamma(Q/2)) for orthonormal groups of size Q.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if kind == BEST_SUBSET_ORTHONORMAL:
        if p < 2:
            raise ValueError("need P >= 2")
        return ClosedFormThreshold(sigma**2 * math.log(p),
                                   implied_level_best_subset(p))
    if kind == TV1D_ASYMPTOTIC:
        if p < 3:
            raise ValueError("need P >= 3 for log log P")
        return ClosedFormThreshold(sigma * math.sqrt(p * math.log(math.log(p))) / 2.0)
    if kind == GROUP_LASSO_ORTHONORMAL:
        if p < 3:
            raise ValueError("need P >= 3 for log log P")
        if group_size is None or group_size < 1:
            raise ValueError("group_size Q >= 1 required")
        q = float(group_size)
        inner = (2.0 * math.log(p) + (q - 1.0) * math.log(math.log(p))
                 - 2.0 * special.gammaln(q / 2.0))
        if inner <= 0:
            raise ValueError("P too small for this group size")
        return ClosedFormThreshold(sigma * math.sqrt(inner))
    raise ValueError(f"unknown closed form {kind!r}")


@dataclass(frozen=True)
class PipelineResult:
    """Threshold plus penalized fit plus (optional) likelihood refit."""

    threshold: ThresholdResult
    penalized: SparseFit
    refit: SparseFit | None
    refit_failed: bool
    null_intercept: np.ndarray | None

    @property
    def final(self) -> SparseFit:
        if self.refit is not None and not self.refit_failed:
            return self.refit
        return self.penalized


def fit_at_threshold(instance: ProblemInstance, lam: float,
                     penalty_kind: str = LASSO,
                     cfg: SolverConfig | None = None) -> SparseFit:
    if penalty_kind == SQRT_LASSO:
        return sqrt_lasso_fit(instance, lam, cfg)
    if instance.family.is_gaussian:
        return lasso_fit(instance, lam, cfg)
    return glm_lasso_fit(instance, lam, cfg)


def qut_pipeline_glm(instance: ProblemInstance,
                     alpha: float = DEFAULT_ALPHA,
                     m: int = DEFAULT_MC_SAMPLES,
                     *,
                     penalty_kind: str = LASSO,
                     design: str = FIXED_DESIGN,
                     seed: int = 0,
                     workers: int = 1,
                     cfg: SolverConfig | None = None,
                     refit: bool = True) -> PipelineResult:
    """Three-step threshold-and-fit procedure.

    (1) constrained null MLE of the unpenalized block on the observed data;
    (2) threshold from the null sampler seeded with that estimate;
    (3) penalized fit at the threshold followed by a likelihood refit on the
    selected support. A refit that does not exist falls back to the
    penalized fit and is flagged.
    """
    v = None
    if instance.p0 > 0:
        v = null_mle(instance, cfg)
        if v is None:
            raise DomainError(
                "the intercept-constrained MLE does not exist for this response"
            )
    if instance.family.is_gaussian and instance.sigma is None:
        raise ValueError("Gaussian pipeline needs sigma (known or estimated)")
    sampler = NullSampler.from_instance(instance, design=design,
                                        intercept_beta0=v, seed=seed)
    penalty = (PenaltySpec.sqrt_lasso() if penalty_kind == SQRT_LASSO
               else PenaltySpec.lasso())
    threshold = compute_qut(sampler, penalty, alpha, m, workers)
    if threshold.quantile_is_infinite:
        raise DomainError(
            "the null quantile is infinite: the null model leaves the MLE "
            f"existence domain in {threshold.infinite_fraction:.1%} of draws"
        )
    fit = fit_at_threshold(instance, threshold.lambda_qut, penalty_kind, cfg)
    refitted = None
    refit_failed = False
    if refit:
        try:
            refitted = mle_refit(instance, fit.support, cfg)
        except (MleNonExistentError, ConvergenceError, ValueError):
            refitted = None
            refit_failed = True
    return PipelineResult(threshold, fit, refitted, refit_failed, v)
