"""Closed-form zero-thresholding functions.

For each supported estimator this module computes the smallest penalty level
at which the penalized coefficients are identically zero. Branches that are
only valid under structural conditions (orthonormal design, identity design,
full-row-rank transform) validate those conditions and raise rather than
silently falling back.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
import math

import numpy as np
from scipy import linalg as sla

from .families import (
    IncompatiblePenaltyError,
    ProblemInstance,
    QutError,
)
from .solvers import (
    SolverConfig,
    _is_intercept_only,
    intercept_domain_ok,
    null_mle,
    orth_basis,
    project_out,
    tv1d_fit,
)

LASSO = "lasso"
ADAPTIVE_LASSO = "adaptive_lasso"
LAD_LASSO = "lad_lasso"
SQRT_LASSO = "sqrt_lasso"
GROUP_LASSO = "group_lasso"
GROUP_SQRT_LASSO = "group_sqrt_lasso"
GENERALIZED_LASSO = "generalized_lasso"
TV1D = "tv1d"
BEST_SUBSET = "best_subset"
SUBBOTIN_ORTHONORMAL = "subbotin_orthonormal"
ELASTIC_NET = "elastic_net"
FUSED_LASSO_ORTHONORMAL = "fused_lasso_orthonormal"
LOW_RANK = "low_rank"
DENSITY_TV = "density_tv"

# All subsets of up to 20 columns is the largest brute-force budget we accept.
BEST_SUBSET_MAX_P = 20

ORTHONORMAL_TOL = 1e-8


@dataclass(frozen=True)
class PenaltySpec:
    """Which sparsity-inducing estimator a zero threshold refers to.

    Only the fields relevant to ``kind`` are set; the classmethod
    constructors are the intended entry points.
    """

    kind: str
    weights: tuple[float, ...] | None = None
    groups: tuple[tuple[int, ...], ...] | None = None
    transform: np.ndarray | None = None
    nu: float | None = None
    lam2: float | None = None
    matrix_shape: tuple[int, int] | None = None

    @classmethod
    def lasso(cls):
        return cls(LASSO)

    @classmethod
    def adaptive_lasso(cls, weights):
        w = tuple(float(v) for v in np.asarray(weights).ravel())
        if any(v <= 0 for v in w):
            raise ValueError("adaptive-lasso weights must be positive")
        return cls(ADAPTIVE_LASSO, weights=w)

    @classmethod
    def lad_lasso(cls):
        return cls(LAD_LASSO)

    @classmethod
    def sqrt_lasso(cls):
        return cls(SQRT_LASSO)

    @classmethod
    def group_lasso(cls, groups):
        return cls(GROUP_LASSO, groups=_normalize_groups(groups))

    @classmethod
    def group_sqrt_lasso(cls, groups):
        return cls(GROUP_SQRT_LASSO, groups=_normalize_groups(groups))

    @classmethod
    def generalized_lasso(cls, transform):
        b = np.array(transform, dtype=float)
        if b.ndim != 2 or b.shape[0] > b.shape[1]:
            raise ValueError("transform must be a wide-or-square 2-D matrix")
        if np.linalg.matrix_rank(b) < b.shape[0]:
            raise ValueError("transform must have full row rank")
        b.setflags(write=False)
        return cls(GENERALIZED_LASSO, transform=b)

    @classmethod
    def total_variation_1d(cls):
        return cls(TV1D)

    @classmethod
    def best_subset(cls):
        return cls(BEST_SUBSET)

    @classmethod
    def subbotin_orthonormal(cls, nu: float):
        if not 0.0 <= nu < 1.0:
            raise ValueError("nu must lie in [0, 1)")
        return cls(SUBBOTIN_ORTHONORMAL, nu=float(nu))

    @classmethod
    def elastic_net(cls, lam2: float = 0.0):
        if lam2 < 0:
            raise ValueError("lam2 must be nonnegative")
        return cls(ELASTIC_NET, lam2=float(lam2))

    @classmethod
    def fused_lasso_orthonormal(cls, lam2: float):
        if lam2 < 0:
            raise ValueError("lam2 must be nonnegative")
        return cls(FUSED_LASSO_ORTHONORMAL, lam2=float(lam2))

    @classmethod
    def low_rank(cls, matrix_shape):
        r, c = (int(matrix_shape[0]), int(matrix_shape[1]))
        if r < 1 or c < 1:
            raise ValueError("matrix shape must be positive")
        return cls(LOW_RANK, matrix_shape=(r, c))

    @classmethod
    def density_tv(cls):
        return cls(DENSITY_TV)


def _normalize_groups(groups) -> tuple[tuple[int, ...], ...]:
    out = tuple(tuple(int(i) for i in g) for g in groups)
    if not out or any(len(g) == 0 for g in out):
        raise ValueError("groups must be nonempty")
    flat = sorted(i for g in out for i in g)
    if flat != list(range(len(flat))):
        raise ValueError("groups must partition {0, ..., P-1} disjointly")
    return out


def _check_groups_cover(groups, p: int) -> None:
    size = sum(len(g) for g in groups)
    if size != p:
        raise IncompatiblePenaltyError(
            f"groups cover {size} coefficients but the design has {p} columns"
        )


def _require_orthonormal(x: np.ndarray) -> None:
    gram = x.T @ x
    dev = np.abs(gram - np.eye(x.shape[1])).max() if x.shape[1] else 0.0
    if dev > ORTHONORMAL_TOL:
        raise IncompatiblePenaltyError(
            f"design is not orthonormal (max Gram deviation {dev:.2e})"
        )


def _require_identity(x: np.ndarray) -> None:
    n, p = x.shape
    if n != p or np.abs(x - np.eye(n)).max() > ORTHONORMAL_TOL:
        raise IncompatiblePenaltyError("this branch requires X = I")


def _first_difference_matrix(p: int) -> np.ndarray:
    b = np.zeros((p - 1, p))
    idx = np.arange(p - 1)
    b[idx, idx] = -1.0
    b[idx, idx + 1] = 1.0
    return b


def _tv1d_dual_sup(y: np.ndarray) -> float:
    """||(BB^T)^{-1} B y||_inf for the first-difference matrix B."""
    n = y.shape[0]
    if n < 2:
        raise IncompatiblePenaltyError("total variation needs length >= 2")
    by = np.diff(y)
    if n == 2:
        return float(abs(by[0]) / 2.0)
    # BB^T is tridiagonal (2 on the diagonal, -1 off); solve banded.
    ab = np.zeros((2, n - 1))
    ab[0, 1:] = -1.0
    ab[1, :] = 2.0
    w = sla.solveh_banded(ab, by, lower=False)
    return float(np.abs(w).max())


def _best_subset_threshold(x: np.ndarray, y: np.ndarray) -> float:
    p = x.shape[1]
    if p > BEST_SUBSET_MAX_P:
        raise QutError(
            f"best-subset enumeration is capped at P <= {BEST_SUBSET_MAX_P}"
        )
    rank = int(np.linalg.matrix_rank(x)) if p else 0
    if rank == 0:
        return 0.0
    gram = x.T @ x
    xty = x.T @ y
    best = 0.0
    for size in range(1, rank + 1):
        delta = 0.0
        for subset in combinations(range(p), size):
            idx = list(subset)
            b = xty[idx]
            sol, *_ = np.linalg.lstsq(gram[np.ix_(idx, idx)], b, rcond=None)
            delta = max(delta, float(b @ sol))
        best = max(best, 0.5 * delta / size)
    return best


def _generalized_lasso_threshold(x: np.ndarray, y: np.ndarray,
                                 b: np.ndarray) -> float:
    m = b.shape[0]
    # Deterministic invertible column block: first rank(B) pivots of a
    # column-pivoted triangular factorization.
    _, _, piv = sla.qr(b, pivoting=True)
    sel = np.sort(piv[:m])
    rest = np.sort(piv[m:])
    b_sel = b[:, sel]
    a1 = np.linalg.solve(b_sel.T, x[:, sel].T).T
    if rest.size:
        a2 = x[:, rest] - a1 @ b[:, rest]
        q = orth_basis(a2)
        resid = project_out(q, y)
    else:
        resid = y
    return float(np.abs(a1.T @ resid).max())


def _density_tv_threshold(y: np.ndarray) -> float:
    n = y.shape[0]
    if n < 2:
        raise IncompatiblePenaltyError("density spacings need length >= 2")
    s = np.sort(y)
    a = np.empty(n)
    a[0] = (s[1] - s[0]) / 2.0
    a[-1] = (s[-1] - s[-2]) / 2.0
    if n > 2:
        a[1:-1] = (s[2:] - s[:-2]) / 2.0
    csum = np.cumsum(a)
    total = csum[-1]
    k = np.arange(1, n)
    w = n * csum[:-1] - k * total
    return float(np.abs(w).max())


def zero_threshold(instance: ProblemInstance, penalty: PenaltySpec) -> float:
    """Smallest penalty level at which the estimator is identically zero.

    Dispatches on the penalty kind; preconditions (orthonormal or identity
    design, group coverage, matrix shape) are checked and violations raise
    IncompatiblePenaltyError instead of silently changing formula.
    """
    x, y = instance.x, instance.y
    kind = penalty.kind
    if kind in (LASSO, ELASTIC_NET):
        return float(np.abs(x.T @ y).max(initial=0.0))
    if kind == ADAPTIVE_LASSO:
        w = np.asarray(penalty.weights, dtype=float)
        if w.shape[0] != instance.p:
            raise IncompatiblePenaltyError("weights length must match P")
        return float(np.abs(w * (x.T @ y)).max(initial=0.0))
    if kind == LAD_LASSO:
        return float(np.abs(x.T @ np.sign(y)).max(initial=0.0))
    if kind == SQRT_LASSO:
        norm = float(np.linalg.norm(y))
        if norm == 0.0:
            return 0.0
        return float(np.abs(x.T @ y).max(initial=0.0)) / norm
    if kind in (GROUP_LASSO, GROUP_SQRT_LASSO):
        _check_groups_cover(penalty.groups, instance.p)
        vals = [float(np.linalg.norm(x[:, list(g)].T @ y))
                for g in penalty.groups]
        top = max(vals)
        if kind == GROUP_LASSO:
            return top
        norm = float(np.linalg.norm(y))
        return 0.0 if norm == 0.0 else top / norm
    if kind == GENERALIZED_LASSO:
        b = penalty.transform
        if b.shape[1] != instance.p:
            raise IncompatiblePenaltyError("transform width must match P")
        return _generalized_lasso_threshold(x, y, b)
    if kind == TV1D:
        _require_identity(x)
        return _tv1d_dual_sup(y)
    if kind == BEST_SUBSET:
        return _best_subset_threshold(x, y)
    if kind == SUBBOTIN_ORTHONORMAL:
        _require_orthonormal(x)
        nu = penalty.nu
        sup = float(np.abs(x.T @ y).max(initial=0.0))
        return (sup / (2.0 - nu)) ** (2.0 - nu) / (2.0 * (1.0 - nu)) ** (nu - 1.0)
    if kind == FUSED_LASSO_ORTHONORMAL:
        _require_orthonormal(x)
        denoised = tv1d_fit(x.T @ y, penalty.lam2)
        return float(np.abs(denoised).max())
    if kind == LOW_RANK:
        shape = penalty.matrix_shape
        if shape is None or shape[0] * shape[1] != y.shape[0]:
            raise IncompatiblePenaltyError(
                "low-rank penalty needs matrix_shape consistent with y"
            )
        d = np.linalg.svd(y.reshape(shape), compute_uv=False)
        return float(d[0]) if d.size else 0.0
    if kind == DENSITY_TV:
        return _density_tv_threshold(y)
    raise ValueError(f"unknown penalty kind {kind!r}")


def matrix_zero_threshold(y_mat) -> float:
    """Zero threshold of trace-norm denoising: the top singular value."""
    y_mat = np.asarray(y_mat, dtype=float)
    d = np.linalg.svd(y_mat, compute_uv=False)
    return float(d[0]) if d.size else 0.0


def zero_threshold_glm(instance: ProblemInstance,
                       cfg: SolverConfig | None = None) -> float:
    """Zero threshold of the L1-penalized GLM: ||X^T (y - mu(v))||_inf.

    ``v`` solves the intercept-block score equation X0^T y = X0^T mu(X0 v);
    when no solution exists the threshold is infinite. With no unpenalized
    columns the score system is vacuous and v = 0 is used, so the null mean
    is b'(0) (an interpretation: the constrained-MLE step has nothing to
    constrain when P0 = 0).
    """
    x, y = instance.x, instance.y
    if instance.p0 == 0:
        mu = instance.family.mean(np.zeros(instance.n))
        return float(np.abs(x.T @ (y - mu)).max(initial=0.0))
    v = null_mle(instance, cfg)
    if v is None:
        return math.inf
    mu = instance.family.mean(instance.x0 @ v)
    return float(np.abs(x.T @ (y - mu)).max(initial=0.0))


def mle_domain_contains(instance: ProblemInstance) -> bool:
    """Whether the response admits the intercept-constrained MLE.

    Intercept-only designs use the closed-form membership rule per family;
    a general unpenalized block falls back to convergence of the constrained
    score iteration.
    """
    if instance.family.is_gaussian or instance.p0 == 0:
        return True
    if _is_intercept_only(instance.x0):
        return intercept_domain_ok(instance.family, instance.y)
    return null_mle(instance) is not None
