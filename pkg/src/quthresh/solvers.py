"""Penalized and constrained solvers whose zero-sets the threshold catalogue
characterizes.

All fits certify optimality through the stationarity (KKT) system of their
objective; a fit is only reported converged when the subgradient residual is
below ``conv_tol``. Coordinate updates use exact soft-thresholding so supports
contain exact zeros, and the cyclic order 0..P-1 is fixed for determinism.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .families import (
    ConvergenceError,
    GlmFamily,
    MleNonExistentError,
    ProblemInstance,
    QutError,
    SparseFit,
    Z_TOL,
)

# Iterates whose sup-norm exceeds this cap signal a diverging MLE, the
# numerical proxy for y outside the existence domain under general X0.
DIVERGENCE_CAP = 1e6


class InterpolationError(QutError):
    """Square-root lasso hit an exactly interpolating solution."""


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances and budgets shared by the iterative solvers.

    ``max_iter`` counts coordinate sweeps for the Gaussian lasso and outer
    Newton steps for the GLM solver. ``standardize`` rescales penalized
    columns to unit root-mean-square before fitting and back-transforms the
    coefficients (off by default: the threshold formulas are stated for raw X).
    """

    conv_tol: float = 1e-8
    max_iter: int = 100_000
    z_tol: float = Z_TOL
    line_search_shrink: float = 0.5
    standardize: bool = False

    def __post_init__(self):
        if self.conv_tol <= 0 or self.z_tol <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0.0 < self.line_search_shrink < 1.0:
            raise ValueError("line_search_shrink must lie in (0, 1)")


GLM_DEFAULTS = SolverConfig(conv_tol=1e-7, max_iter=100)


def orth_basis(x0: np.ndarray) -> np.ndarray | None:
    """Orthonormal basis of the column space of x0 (None when empty).

    SVD-based so rank-deficient blocks still yield an exact basis of the
    range (projections depend only on the span).
    """
    if x0.shape[1] == 0:
        return None
    u, s, _ = np.linalg.svd(x0, full_matrices=False)
    keep = s > 1e-12 * max(1.0, float(s[0]) if s.size else 0.0)
    return u[:, keep]


def project_out(q: np.ndarray | None, a: np.ndarray) -> np.ndarray:
    """(I - QQ^T) a for an orthonormal Q; identity when Q is None."""
    if q is None:
        return np.array(a, dtype=float)
    return a - q @ (q.T @ a)


def _soft(z: float, t: float) -> float:
    if z > t:
        return z - t
    if z < -t:
        return z + t
    return 0.0


def _sweep_python(x, r, beta, lam_vec, col_sq, idx) -> float:
    max_delta = 0.0
    for j in idx:
        cj = col_sq[j]
        if cj <= 0.0:
            if beta[j] != 0.0:
                r += x[:, j] * beta[j]
                beta[j] = 0.0
            continue
        old = beta[j]
        rho = np.dot(x[:, j], r) + cj * old
        new = _soft(rho, lam_vec[j]) / cj
        if new != old:
            r += x[:, j] * (old - new)
            beta[j] = new
            d = abs(new - old)
            if d > max_delta:
                max_delta = d
    return max_delta


try:
    from numba import njit as _njit

    @_njit(cache=True)
    def _sweep_jit(x, r, beta, lam_vec, col_sq, idx):  # pragma: no cover
        max_delta = 0.0
        n = x.shape[0]
        for k in range(idx.shape[0]):
            j = idx[k]
            cj = col_sq[j]
            if cj <= 0.0:
                old = beta[j]
                if old != 0.0:
                    for i in range(n):
                        r[i] += x[i, j] * old
                    beta[j] = 0.0
                continue
            old = beta[j]
            rho = cj * old
            for i in range(n):
                rho += x[i, j] * r[i]
            t = lam_vec[j]
            if rho > t:
                new = (rho - t) / cj
            elif rho < -t:
                new = (rho + t) / cj
            else:
                new = 0.0
            if new != old:
                diff = old - new
                for i in range(n):
                    r[i] += x[i, j] * diff
                beta[j] = new
                ad = abs(diff)
                if ad > max_delta:
                    max_delta = ad
        return max_delta

    def _cd_sweep(x, r, beta, lam_vec, col_sq, idx) -> float:
        return _sweep_jit(x, r, beta, lam_vec, col_sq,
                          np.asarray(idx, dtype=np.int64))
except ImportError:  # pragma: no cover - numba is an optional accelerator
    _cd_sweep = _sweep_python


def _kkt_residual_quadratic(g, beta, lam_vec) -> float:
    """Subgradient distance for 0.5||.||^2-type losses with gradient g = X^T r."""
    if g.size == 0:
        return 0.0
    zero_viol = np.maximum(np.abs(g) - lam_vec, 0.0)
    nz = beta != 0.0
    resid = np.where(nz, np.abs(g - lam_vec * np.sign(beta)), zero_viol)
    return float(resid.max())


def _run_cd(x, y, lam_vec, beta, conv_tol, max_sweeps):
    """Coordinate descent with active-set polishing until the KKT residual
    drops below ``conv_tol``. Returns (kkt_residual, sweeps, converged).

    Inner polishing rounds are bounded; the exit criterion is always the
    exact subgradient residual measured on all coordinates.
    """
    n, p = x.shape
    if p == 0:
        return 0.0, 0, True
    col_sq = np.einsum("ij,ij->j", x, x)
    r = y - x @ beta
    all_idx = np.arange(p, dtype=np.int64)
    sweeps = 0
    kkt = np.inf
    # Coefficient-change level below which stale coordinates cannot hide a
    # KKT violation above tolerance.
    delta_tol = conv_tol * 0.5 / max(1.0, float(col_sq.max()))
    while sweeps < max_sweeps:
        _cd_sweep(x, r, beta, lam_vec, col_sq, all_idx)
        sweeps += 1
        polish = 0
        while sweeps < max_sweeps and polish < 200:
            active = np.flatnonzero(beta).astype(np.int64)
            if active.size == 0:
                break
            delta = _cd_sweep(x, r, beta, lam_vec, col_sq, active)
            sweeps += 1
            polish += 1
            if delta <= delta_tol:
                break
        g = x.T @ r
        kkt = _kkt_residual_quadratic(g, beta, lam_vec)
        if kkt <= conv_tol:
            return kkt, sweeps, True
    return kkt, sweeps, False


def _standardize_columns(x: np.ndarray):
    scale = np.sqrt(np.einsum("ij,ij->j", x, x) / max(1, x.shape[0]))
    scale[scale <= 0.0] = 1.0
    return x / scale, scale


def _recover_beta0(x0: np.ndarray, residual_target: np.ndarray) -> np.ndarray:
    if x0.shape[1] == 0:
        return np.zeros(0)
    coef, *_ = np.linalg.lstsq(x0, residual_target, rcond=None)
    return coef


def lasso_fit(instance: ProblemInstance, lam: float,
              cfg: SolverConfig | None = None,
              beta_init: np.ndarray | None = None) -> SparseFit:
    """L1-penalized least squares by cyclic coordinate descent.

    The unpenalized block is handled by pre-projection: the response and the
    penalized columns are projected onto the orthocomplement of range(X0) and
    the unpenalized coefficients are recovered by least squares afterwards,
    which leaves the stationarity system unchanged.
    """
    if not instance.family.is_gaussian:
        raise ValueError("lasso_fit expects a Gaussian instance")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    cfg = cfg or SolverConfig()
    if np.isinf(lam):
        beta0 = _recover_beta0(instance.x0, instance.y)
        return SparseFit.build(beta0, np.zeros(instance.p), lam, 0.0, 0,
                               True, cfg.z_tol)
    q = orth_basis(instance.x0)
    y_t = project_out(q, instance.y)
    x_t = np.asfortranarray(project_out(q, instance.x))
    scale = None
    if cfg.standardize:
        x_t, scale = _standardize_columns(x_t)
        x_t = np.asfortranarray(x_t)
    p = x_t.shape[1]
    beta = np.zeros(p) if beta_init is None else np.array(beta_init, dtype=float)
    if scale is not None and beta_init is not None:
        beta = beta * scale
    lam_vec = np.full(p, float(lam))
    kkt, sweeps, converged = _run_cd(x_t, y_t, lam_vec, beta,
                                     cfg.conv_tol, cfg.max_iter)
    if scale is not None:
        beta = beta / scale
    beta0 = _recover_beta0(instance.x0, instance.y - instance.x @ beta)
    return SparseFit.build(beta0, beta, lam, kkt, sweeps, converged, cfg.z_tol)


def gaussian_kkt_residual(instance: ProblemInstance, beta0, beta,
                          lam: float) -> float:
    """Subgradient optimality residual of the penalized least-squares fit."""
    r = instance.y - instance.x0 @ beta0 - instance.x @ beta
    g = instance.x.T @ r
    lam_vec = np.full(g.shape, float(lam))
    pen = _kkt_residual_quadratic(g, np.asarray(beta, dtype=float), lam_vec)
    if instance.p0:
        pen = max(pen, float(np.abs(instance.x0.T @ r).max()))
    return pen


def glm_kkt_residual(instance: ProblemInstance, beta0, beta,
                     lam: float) -> float:
    """Stationarity residual of the penalized GLM likelihood system."""
    theta = instance.x0 @ beta0 + instance.x @ beta
    mu = instance.family.mean(theta)
    resid = instance.y - mu
    g = instance.x.T @ resid
    lam_vec = np.full(g.shape, float(lam))
    pen = _kkt_residual_quadratic(g, np.asarray(beta, dtype=float), lam_vec)
    if instance.p0:
        pen = max(pen, float(np.abs(instance.x0.T @ resid).max()))
    return pen


def _glm_objective(instance: ProblemInstance, beta0, beta, lam: float) -> float:
    theta = instance.x0 @ beta0 + instance.x @ beta
    return instance.family.negative_loglik(theta, instance.y) + lam * float(
        np.abs(beta).sum()
    )


def glm_lasso_fit(instance: ProblemInstance, lam: float,
                  cfg: SolverConfig | None = None,
                  start: tuple[np.ndarray, np.ndarray] | None = None) -> SparseFit:
    """L1-penalized GLM likelihood by a proximal-Newton outer loop.

    Each outer step solves the penalized weighted least-squares expansion of
    the negative log-likelihood at the current iterate by coordinate descent,
    followed by backtracking line search on the true objective. Divergence of
    the iterates (sup-norm above the cap) signals that no minimizer exists,
    which realizes a response outside the MLE existence domain.
    """
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    cfg = cfg or GLM_DEFAULTS
    family = instance.family
    n, p0, p = instance.n, instance.p0, instance.p
    if np.isinf(lam):
        # Infinite penalty: zero coefficients, unpenalized block at its
        # constrained MLE (which must exist for the objective to have one).
        if p0 == 0:
            return SparseFit.build(np.zeros(0), np.zeros(p), lam, 0.0, 0,
                                   True, cfg.z_tol)
        v = null_mle(instance, cfg)
        if v is None:
            raise MleNonExistentError(
                "no constrained MLE: the objective has no minimizer"
            )
        return SparseFit.build(v, np.zeros(p), lam, 0.0, 0, True, cfg.z_tol)
    v = None
    if p0:
        # With an unpenalized block the penalized likelihood has a minimizer
        # exactly when the constrained null MLE exists; without one the
        # objective decreases along a ray and iterates run away.
        v = null_mle(instance, cfg)
        if v is None:
            raise MleNonExistentError(
                "penalized GLM objective has no minimizer for this response"
            )
    if start is not None:
        beta0 = np.array(start[0], dtype=float).ravel()
        beta = np.array(start[1], dtype=float).ravel()
    else:
        beta0 = v if v is not None else np.zeros(p0)
        beta = np.zeros(p)
    design = np.hstack([instance.x0, instance.x]) if p0 else instance.x
    lam_vec = np.concatenate([np.zeros(p0), np.full(p, float(lam))])
    coef = np.concatenate([beta0, beta])
    f_cur = _glm_objective(instance, beta0, beta, lam)
    kkt = np.inf
    outer = 0
    for outer in range(1, cfg.max_iter + 1):
        theta = design @ coef
        mu = family.mean(theta)
        w = np.maximum(family.variance(theta), 1e-10)
        z = theta + (instance.y - mu) / w
        sw = np.sqrt(w)
        a = np.asfortranarray(design * sw[:, None])
        t = z * sw
        prop = coef.copy()
        _run_cd(a, t, lam_vec, prop, 0.1 * cfg.conv_tol, 2000)
        direction = prop - coef
        if not np.any(direction):
            kkt = glm_kkt_residual(instance, coef[:p0], coef[p0:], lam)
            break
        # Backtracking on the true objective; changes below float resolution
        # are accepted so proximal steps are not blocked at the optimum.
        slack = 1e-11 * max(1.0, abs(f_cur))
        step = 1.0
        improved = False
        for _ in range(60):
            cand = coef + step * direction
            f_cand = _glm_objective(instance, cand[:p0], cand[p0:], lam)
            if f_cand < f_cur + slack:
                coef = cand
                f_cur = min(f_cur, f_cand)
                improved = True
                break
            step *= cfg.line_search_shrink
        if np.abs(coef).max(initial=0.0) > DIVERGENCE_CAP:
            raise MleNonExistentError(
                "penalized GLM iterates diverged; the objective has no minimizer"
            )
        kkt = glm_kkt_residual(instance, coef[:p0], coef[p0:], lam)
        if kkt <= cfg.conv_tol:
            return SparseFit.build(coef[:p0], coef[p0:], lam, kkt, outer,
                                   True, cfg.z_tol)
        if not improved:
            break
    if kkt <= cfg.conv_tol:
        return SparseFit.build(coef[:p0], coef[p0:], lam, kkt, outer,
                               True, cfg.z_tol)
    raise ConvergenceError(
        f"GLM lasso did not reach tolerance {cfg.conv_tol:g} "
        f"in {cfg.max_iter} outer steps (kkt residual {kkt:.3g})"
    )


def sqrt_lasso_fit(instance: ProblemInstance, lam: float,
                   cfg: SolverConfig | None = None) -> SparseFit:
    """Minimize ||y - X b||_2 + lam ||b||_1 via an alternating scheme.

    Alternates b <- lasso(lam * s) with s the current residual norm until the
    fixed point, which satisfies the square-root-lasso stationarity system.
    A residual norm below 1e-10 means the solution interpolates and the
    scaled objective is non-differentiable there.
    """
    if not instance.family.is_gaussian:
        raise ValueError("sqrt_lasso_fit expects a Gaussian instance")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    cfg = cfg or SolverConfig()
    if np.isinf(lam):
        beta0 = _recover_beta0(instance.x0, instance.y)
        return SparseFit.build(beta0, np.zeros(instance.p), lam, 0.0, 0,
                               True, cfg.z_tol)
    q = orth_basis(instance.x0)
    y_t = project_out(q, instance.y)
    x_t = np.asfortranarray(project_out(q, instance.x))
    p = x_t.shape[1]
    beta = np.zeros(p)
    sig = float(np.linalg.norm(y_t))
    if sig < 1e-10:
        beta0 = _recover_beta0(instance.x0, instance.y)
        return SparseFit.build(beta0, beta, lam, 0.0, 0, True, cfg.z_tol)
    sweeps_total = 0
    converged = False
    for _ in range(1000):
        lam_vec = np.full(p, lam * sig)
        _, sweeps, _ = _run_cd(x_t, y_t, lam_vec, beta, cfg.conv_tol,
                               cfg.max_iter)
        sweeps_total += sweeps
        new_sig = float(np.linalg.norm(y_t - x_t @ beta))
        if new_sig < 1e-10:
            raise InterpolationError(
                "square-root lasso residual vanished (interpolating regime)"
            )
        if abs(new_sig - sig) <= 1e-8:
            sig = new_sig
            converged = True
            break
        sig = new_sig
    if not converged:
        raise ConvergenceError("square-root lasso fixed point not reached")
    g = x_t.T @ (y_t - x_t @ beta) / sig
    kkt = _kkt_residual_quadratic(g, beta, np.full(p, float(lam)))
    beta0 = _recover_beta0(instance.x0, instance.y - instance.x @ beta)
    return SparseFit.build(beta0, beta, lam, kkt, sweeps_total, True, cfg.z_tol)


def tv1d_fit(y, lam: float) -> np.ndarray:
    """Exact minimizer of 0.5||y - b||^2 + lam * sum |b_{i+1} - b_i|.

    Direct taut-string sweep (single pass, O(N)): maintains the lowest and
    highest piecewise-constant candidates compatible with the current tube
    and emits a segment whenever the tube forces a jump. Output is piecewise
    constant and exact up to float arithmetic.
    """
    y = np.asarray(y, dtype=float).ravel()
    n = y.size
    if n < 2:
        raise ValueError("tv1d_fit needs at least two samples")
    lam = float(lam)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if lam == 0.0:
        return y.copy()
    x = np.empty(n)
    k = k0 = kminus = kplus = 0
    vmin = y[0] - lam
    vmax = y[0] + lam
    umin = lam
    umax = -lam
    while True:
        if k == n - 1:
            if umin < 0.0:
                x[k0:kminus + 1] = vmin
                k = k0 = kminus = kminus + 1
                vmin = y[k]
                umin = lam
                umax = y[k] + lam - vmax
            elif umax > 0.0:
                x[k0:kplus + 1] = vmax
                k = k0 = kplus = kplus + 1
                vmax = y[k]
                umax = -lam
                umin = y[k] - lam - vmin
            else:
                x[k0:n] = vmin + umin / (k - k0 + 1)
                return x
            if k == n - 1:
                continue
        if y[k + 1] + umin < vmin - lam:
            # The lower candidate broke the tube: emit its segment.
            x[k0:kminus + 1] = vmin
            k = k0 = kminus = kplus = kminus + 1
            vmin = y[k]
            vmax = y[k] + 2.0 * lam
            umin = lam
            umax = -lam
        elif y[k + 1] + umax > vmax + lam:
            x[k0:kplus + 1] = vmax
            k = k0 = kminus = kplus = kplus + 1
            vmin = y[k] - 2.0 * lam
            vmax = y[k]
            umin = lam
            umax = -lam
        else:
            k += 1
            umin += y[k] - vmin
            umax += y[k] - vmax
            if umin >= lam:
                vmin += (umin - lam) / (k - k0 + 1)
                umin = lam
                kminus = k
            if umax <= -lam:
                vmax += (umax + lam) / (k - k0 + 1)
                umax = -lam
                kplus = k


def svd_soft_threshold(y_mat, lam: float) -> np.ndarray:
    """Soft-threshold the singular values of a matrix by lam."""
    y_mat = np.asarray(y_mat, dtype=float)
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    if not np.all(np.isfinite(y_mat)):
        raise ValueError("matrix entries must be finite")
    u, d, vt = np.linalg.svd(y_mat, full_matrices=False)
    d = np.maximum(d - lam, 0.0)
    return (u * d) @ vt


def _is_intercept_only(x0: np.ndarray) -> bool:
    return x0.shape[1] == 1 and bool(np.all(x0[:, 0] == 1.0))


def intercept_domain_ok(family: GlmFamily, y: np.ndarray) -> bool:
    """Closed-form existence of the intercept-only constrained MLE."""
    if family.is_gaussian:
        return True
    if family.kind == "poisson":
        return bool(np.any(y > 0))
    # Bernoulli / scaled binomial: only the two constant vectors are excluded.
    return not (bool(np.all(y == 0.0)) or bool(np.all(y == 1.0)))


def null_mle(instance: ProblemInstance,
             cfg: SolverConfig | None = None) -> np.ndarray | None:
    """Constrained null MLE: solve X0^T y = X0^T mu(X0 v) for v.

    Intercept-only designs use the closed-form existence rule; a general
    unpenalized block runs a damped Newton iteration on the score equation
    and returns None when the iterates drift off (diverging likelihood
    supremum), which realizes the response lying outside the existence
    domain. Convergence requires both a small score and a small Newton step:
    along a divergent ray the score vanishes while the step does not.
    """
    if instance.p0 < 1:
        raise ValueError("null_mle needs at least one unpenalized column")
    family = instance.family
    x0, y = instance.x0, instance.y
    if family.is_gaussian:
        v, *_ = np.linalg.lstsq(x0, y, rcond=None)
        return v
    if _is_intercept_only(x0) and not intercept_domain_ok(family, y):
        return None
    tol = (cfg or GLM_DEFAULTS).conv_tol
    v = np.zeros(instance.p0)
    loglik = -family.negative_loglik(x0 @ v, y)
    for _ in range(200):
        theta = x0 @ v
        mu = family.mean(theta)
        score = x0.T @ (y - mu)
        w = np.maximum(family.variance(theta), 1e-12)
        hess = x0.T @ (x0 * w[:, None])
        try:
            delta = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError:
            delta, *_ = np.linalg.lstsq(hess, score, rcond=None)
        if (float(np.abs(score).max()) <= tol
                and float(np.abs(delta).max()) <= 1e-3 * max(
                    1.0, float(np.abs(v).max()))):
            return v
        # Accept steps whose likelihood change is below float resolution:
        # near the optimum the improvement is real but unrepresentable.
        slack = 1e-11 * max(1.0, abs(loglik))
        step = 1.0
        for _ in range(60):
            cand = v + step * delta
            cand_ll = -family.negative_loglik(x0 @ cand, y)
            if cand_ll > loglik - slack:
                v = cand
                loglik = max(loglik, cand_ll)
                break
            step *= 0.5
        else:
            return None
        if float(np.abs(v).max()) > DIVERGENCE_CAP:
            return None
    return None


def mle_refit(instance: ProblemInstance, support,
              cfg: SolverConfig | None = None) -> SparseFit:
    """Unpenalized MLE over X0 and the selected columns of X.

    Coefficients outside the support are exactly zero. Rank-deficient
    selections raise ValueError; a diverging likelihood (e.g. separation in
    logistic regression) raises MleNonExistentError.
    """
    support = tuple(int(s) for s in support)
    n, p0 = instance.n, instance.p0
    if len(support) + p0 > n:
        raise ValueError("selected model larger than the sample")
    cols = instance.x[:, list(support)] if support else np.zeros((n, 0))
    design = np.hstack([instance.x0, cols])
    k = design.shape[1]
    if k and np.linalg.matrix_rank(design) < k:
        raise ValueError("selected columns are rank deficient")
    beta = np.zeros(instance.p)
    if instance.family.is_gaussian:
        if k:
            coef, *_ = np.linalg.lstsq(design, instance.y, rcond=None)
        else:
            coef = np.zeros(0)
        beta[list(support)] = coef[p0:]
        resid = instance.y - design @ coef
        score = float(np.abs(design.T @ resid).max()) if k else 0.0
        return SparseFit.build(coef[:p0], beta, 0.0, score, 1, True)
    tol = (cfg or GLM_DEFAULTS).conv_tol
    family = instance.family
    coef = np.zeros(k)
    loglik = -family.negative_loglik(design @ coef, instance.y)
    for it in range(1, 201):
        theta = design @ coef
        mu = family.mean(theta)
        score = design.T @ (instance.y - mu)
        w = np.maximum(family.variance(theta), 1e-12)
        hess = design.T @ (design * w[:, None])
        try:
            delta = np.linalg.solve(hess, score)
        except np.linalg.LinAlgError:
            delta, *_ = np.linalg.lstsq(hess, score, rcond=None)
        if float(np.abs(score).max()) <= tol:
            # A small score with a non-vanishing Newton step means the
            # likelihood approaches its supremum along a ray (separation).
            if float(np.abs(delta).max()) > 1e-3 * max(
                    1.0, float(np.abs(coef).max(initial=0.0))):
                raise MleNonExistentError(
                    "refit MLE does not exist (separated responses)"
                )
            beta[list(support)] = coef[p0:]
            return SparseFit.build(coef[:p0], beta, 0.0,
                                   float(np.abs(score).max()), it, True)
        slack = 1e-11 * max(1.0, abs(loglik))
        step = 1.0
        for _ in range(60):
            cand = coef + step * delta
            cand_ll = -family.negative_loglik(design @ cand, instance.y)
            if cand_ll > loglik - slack:
                coef = cand
                loglik = max(loglik, cand_ll)
                break
            step *= 0.5
        else:
            raise MleNonExistentError("refit likelihood cannot be increased")
        if float(np.abs(coef).max(initial=0.0)) > DIVERGENCE_CAP:
            raise MleNonExistentError(
                "refit MLE diverged (separated or unbounded likelihood)"
            )
    raise ConvergenceError("refit Newton iteration exhausted its budget")
