"""Regularization paths and cross-validation rules.

Paths run over a log-spaced grid anchored at the data's zero threshold and
are warm-started in decreasing penalty order. Cross-validation uses seeded
fold shuffles so every selection is reproducible from (seed, folds).
"""

from __future__ import annotations

import numpy as np

from .families import ProblemInstance, SparseFit, substream_rng
from .solvers import (
    GLM_DEFAULTS,
    SolverConfig,
    _run_cd,
    glm_lasso_fit,
    orth_basis,
    project_out,
)
from .zerothresh import zero_threshold_glm

GRID_POINTS = 100
GRID_RATIO = 1e-3

CV_MIN = "min"
CV_1SE = "1se"

# Path and CV fits drive selection, not coefficient certification; a looser
# stationarity target and a hard sweep budget keep long grids affordable.
# The budget binds only in the interpolating tail of the grid, where the CV
# loss is far above its minimum anyway.
PATH_CFG = SolverConfig(conv_tol=1e-5, max_iter=300)


def lambda_grid(lam_max: float, n_points: int = GRID_POINTS,
                ratio: float = GRID_RATIO) -> np.ndarray:
    """Descending log-spaced grid from lam_max down to lam_max * ratio."""
    if lam_max <= 0:
        # Degenerate data (e.g. y orthogonal to every column): tiny flat grid.
        return np.full(n_points, 0.0)
    return np.geomspace(lam_max, lam_max * ratio, n_points)


def instance_lambda_max(instance: ProblemInstance) -> float:
    """The data's zero threshold for the L1-penalized fit (any family)."""
    if instance.family.is_gaussian:
        q = orth_basis(instance.x0)
        y_t = project_out(q, instance.y)
        return float(np.abs(instance.x.T @ y_t).max(initial=0.0))
    return zero_threshold_glm(instance)


def lasso_path_betas(instance: ProblemInstance, lambdas,
                     cfg: SolverConfig | None = None) -> np.ndarray:
    """Warm-started coordinate-descent path; returns an (L, P) array."""
    if not instance.family.is_gaussian:
        raise ValueError("lasso_path_betas expects a Gaussian instance")
    cfg = cfg or PATH_CFG
    q = orth_basis(instance.x0)
    y_t = project_out(q, instance.y)
    x_t = np.asfortranarray(project_out(q, instance.x))
    p = x_t.shape[1]
    beta = np.zeros(p)
    out = np.empty((len(lambdas), p))
    for i, lam in enumerate(lambdas):
        lam_vec = np.full(p, float(lam))
        _run_cd(x_t, y_t, lam_vec, beta, cfg.conv_tol, cfg.max_iter)
        out[i] = beta
    return out


def glm_lasso_path(instance: ProblemInstance, lambdas,
                   cfg: SolverConfig | None = None) -> list[SparseFit]:
    """Warm-started penalized-likelihood path."""
    cfg = cfg or GLM_DEFAULTS
    fits = []
    start = None
    for lam in lambdas:
        fit = glm_lasso_fit(instance, float(lam), cfg, start=start)
        fits.append(fit)
        start = (fit.beta0, fit.beta)
    return fits


def support_path(instance: ProblemInstance, lambdas,
                 cfg: SolverConfig | None = None,
                 z_tol: float = 1e-8) -> list[tuple[int, ...]]:
    """Supports along the path, in the same order as ``lambdas``."""
    if instance.family.is_gaussian:
        betas = lasso_path_betas(instance, lambdas, cfg)
        return [tuple(np.flatnonzero(np.abs(b) > z_tol)) for b in betas]
    return [f.support for f in glm_lasso_path(instance, lambdas, cfg)]


def _fold_assignment(n: int, folds: int, seed: int) -> np.ndarray:
    rng = substream_rng(seed, 17)
    perm = rng.permutation(n)
    assign = np.empty(n, dtype=int)
    assign[perm] = np.arange(n) % folds
    return assign


def _gaussian_fold_losses(instance, lambdas, assign, folds, cfg):
    losses = np.empty((folds, len(lambdas)))
    for k in range(folds):
        val = assign == k
        tr = ~val
        train = instance.rows(tr)
        betas = lasso_path_betas(train, lambdas, cfg)
        x0v, xv, yv = instance.x0[val], instance.x[val], instance.y[val]
        if train.p0:
            pinv0 = np.linalg.pinv(train.x0)
        for i, beta in enumerate(betas):
            if train.p0:
                beta0 = pinv0 @ (train.y - train.x @ beta)
                pred = x0v @ beta0 + xv @ beta
            else:
                pred = xv @ beta
            losses[k, i] = float(np.mean((yv - pred) ** 2))
    return losses


def _glm_fold_losses(instance, lambdas, assign, folds, cfg):
    losses = np.empty((folds, len(lambdas)))
    fam = instance.family
    for k in range(folds):
        val = assign == k
        train = instance.rows(~val)
        fits = glm_lasso_path(train, lambdas, cfg)
        x0v, xv, yv = instance.x0[val], instance.x[val], instance.y[val]
        for i, fit in enumerate(fits):
            theta = x0v @ fit.beta0 + xv @ fit.beta
            losses[k, i] = fam.negative_loglik(theta, yv) / yv.shape[0]
    return losses


def cv_curve(instance: ProblemInstance, lambdas, folds: int = 10,
             seed: int = 0, cfg: SolverConfig | None = None):
    """Per-lambda CV loss means and standard errors over seeded folds."""
    n = instance.n
    folds = min(folds, n)
    assign = _fold_assignment(n, folds, seed)
    if instance.family.is_gaussian:
        losses = _gaussian_fold_losses(instance, lambdas, assign, folds, cfg)
    else:
        losses = _glm_fold_losses(instance, lambdas, assign, folds, cfg)
    means = losses.mean(axis=0)
    ses = losses.std(axis=0, ddof=1) / np.sqrt(folds) if folds > 1 else \
        np.zeros(len(lambdas))
    return means, ses


def cv_select_lambda(instance: ProblemInstance, rule: str = CV_MIN,
                     folds: int = 10, seed: int = 0,
                     n_lambdas: int = GRID_POINTS, ratio: float = GRID_RATIO,
                     cfg: SolverConfig | None = None):
    """Pick a penalty by K-fold cross-validation.

    ``min`` takes the loss minimizer; ``1se`` takes the largest penalty whose
    CV loss is within one standard error of the minimum.
    """
    if rule not in (CV_MIN, CV_1SE):
        raise ValueError("rule must be 'min' or '1se'")
    grid = lambda_grid(instance_lambda_max(instance), n_lambdas, ratio)
    means, ses = cv_curve(instance, grid, folds, seed, cfg)
    i_min = int(np.argmin(means))
    if rule == CV_MIN:
        idx = i_min
    else:
        cutoff = means[i_min] + ses[i_min]
        idx = int(np.flatnonzero(means <= cutoff)[0])  # grid is descending
    info = {"grid": grid, "cv_means": means, "cv_ses": ses,
            "index": idx, "index_min": i_min}
    return float(grid[idx]), info
