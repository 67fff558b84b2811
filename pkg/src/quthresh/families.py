"""Core domain types: GLM families, problem instances, fits, and metrics.

Every other module builds on these value objects. All types are immutable
after construction (arrays are copied and marked read-only), so instances
can be shared freely across worker processes.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from scipy import special

# Numeric-zero tolerance for support extraction. Solvers produce exact zeros
# by soft-thresholding, so this only guards float noise.
Z_TOL = 1e-8

GAUSSIAN_KIND = "gaussian"
BERNOULLI_KIND = "bernoulli"
BINOMIAL_KIND = "binomial"
POISSON_KIND = "poisson"

_KINDS = (GAUSSIAN_KIND, BERNOULLI_KIND, BINOMIAL_KIND, POISSON_KIND)


class QutError(Exception):
    """Base class for errors raised by this package."""


class IncompatiblePenaltyError(QutError):
    """Penalty and problem instance do not fit together."""


class MleNonExistentError(QutError):
    """A (constrained or refit) maximum likelihood estimate does not exist."""


class ConvergenceError(QutError):
    """An iterative solver exhausted its iteration budget."""


class DomainError(QutError):
    """The response lies outside the domain on which the null MLE exists."""


class SaturatedModelError(QutError):
    """A variance estimator met a model with no residual degrees of freedom."""


@dataclass(frozen=True)
class GlmFamily:
    """Canonical exponential family with cumulant ``b`` and mean ``b'``.

    The four built-in families all have natural-parameter domain equal to the
    whole real line, so the domain guard never triggers for them; it exists
    for extensibility.

    kind        one of "gaussian", "bernoulli", "binomial", "poisson"
    m           binomial denominator; responses are stored pre-scaled by 1/m
    """

    kind: str
    m: int = 1

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if self.kind == BINOMIAL_KIND and self.m < 1:
            raise ValueError("binomial denominator m must be a positive integer")

    @property
    def is_gaussian(self) -> bool:
        return self.kind == GAUSSIAN_KIND

    def theta_in_domain(self, theta: np.ndarray) -> bool:
        # All four built-in families have Theta = R.
        return bool(np.all(np.isfinite(theta)))

    def cumulant(self, theta: np.ndarray) -> np.ndarray:
        """b(theta): strictly convex cumulant of the family."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == GAUSSIAN_KIND:
            return 0.5 * theta**2
        if self.kind == POISSON_KIND:
            with np.errstate(over="ignore"):
                return np.exp(theta)
        # Bernoulli / scaled binomial: log(1 + e^theta), overflow-safe.
        return np.logaddexp(0.0, theta)

    def mean(self, theta: np.ndarray) -> np.ndarray:
        """b'(theta): the mean function, strictly increasing on Theta."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == GAUSSIAN_KIND:
            return theta.copy()
        if self.kind == POISSON_KIND:
            with np.errstate(over="ignore"):
                return np.exp(theta)
        return special.expit(theta)

    def variance(self, theta: np.ndarray) -> np.ndarray:
        """b''(theta): curvature of the cumulant at theta."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == GAUSSIAN_KIND:
            return np.ones_like(theta)
        if self.kind == POISSON_KIND:
            with np.errstate(over="ignore"):
                return np.exp(theta)
        p = special.expit(theta)
        return p * (1.0 - p)

    def negative_loglik(self, theta: np.ndarray, y: np.ndarray) -> float:
        """sum_n [b(theta_n) - y_n theta_n], the fitting loss."""
        theta = np.asarray(theta, dtype=float)
        return float(np.sum(self.cumulant(theta)) - np.dot(y, theta))

    def validate_response(self, y: np.ndarray) -> None:
        y = np.asarray(y, dtype=float)
        if not np.all(np.isfinite(y)):
            raise ValueError("response contains non-finite values")
        if self.kind == POISSON_KIND:
            if np.any(y < 0) or np.any(y != np.round(y)):
                raise ValueError("Poisson responses must be nonnegative integers")
        elif self.kind in (BERNOULLI_KIND, BINOMIAL_KIND):
            scaled = y * self.m
            if np.any(y < 0) or np.any(y > 1) or np.any(
                np.abs(scaled - np.round(scaled)) > 1e-9
            ):
                raise ValueError(
                    "binomial responses must lie on the grid {0, 1/m, ..., 1}"
                )

    def sample(self, theta: np.ndarray, rng: np.random.Generator,
               sigma: float = 1.0) -> np.ndarray:
        """Draw a response vector with linear predictor ``theta``."""
        theta = np.asarray(theta, dtype=float)
        if self.kind == GAUSSIAN_KIND:
            return theta + sigma * rng.standard_normal(theta.shape[0])
        if self.kind == POISSON_KIND:
            return rng.poisson(np.exp(theta)).astype(float)
        p = special.expit(theta)
        if self.kind == BERNOULLI_KIND:
            return rng.binomial(1, p).astype(float)
        return rng.binomial(self.m, p).astype(float) / self.m


GAUSSIAN = GlmFamily(GAUSSIAN_KIND)
BERNOULLI = GlmFamily(BERNOULLI_KIND)
POISSON = GlmFamily(POISSON_KIND)


def binomial_scaled(m: int) -> GlmFamily:
    """Binomial(m, p)/m responses on the grid {0, 1/m, ..., 1}."""
    return GlmFamily(BINOMIAL_KIND, m=m)


def family_from_name(name: str, m: int = 1) -> GlmFamily:
    name = name.lower()
    if name == BINOMIAL_KIND:
        return binomial_scaled(m)
    return GlmFamily(name)


def substream_rng(seed: int, *key: int) -> np.random.Generator:
    """Counter-derived random substream: deterministic in (seed, key) only."""
    ss = np.random.SeedSequence(entropy=int(seed),
                                spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True)
class ProblemInstance:
    """A regression problem: unpenalized block X0, penalized block X, response y.

    ``x0`` may have zero columns (no unpenalized covariates). ``sigma`` is the
    known Gaussian noise standard deviation when available.
    """

    x0: np.ndarray
    x: np.ndarray
    y: np.ndarray
    family: GlmFamily = GAUSSIAN
    sigma: float | None = None

    def __post_init__(self):
        x0 = np.atleast_2d(np.asarray(self.x0, dtype=float))
        x = np.atleast_2d(np.asarray(self.x, dtype=float))
        y = np.asarray(self.y, dtype=float).ravel()
        n = y.shape[0]
        if x0.size == 0:
            x0 = np.zeros((n, 0))
        if x0.shape[0] != n or x.shape[0] != n:
            raise ValueError("x0, x and y must share the same number of rows")
        if n < 1:
            raise ValueError("need at least one observation")
        if self.sigma is not None and not self.sigma > 0:
            raise ValueError("sigma must be positive")
        self.family.validate_response(y)
        object.__setattr__(self, "x0", _frozen(x0))
        object.__setattr__(self, "x", _frozen(x))
        object.__setattr__(self, "y", _frozen(y))

    @property
    def n(self) -> int:
        return self.y.shape[0]

    @property
    def p0(self) -> int:
        return self.x0.shape[1]

    @property
    def p(self) -> int:
        return self.x.shape[1]

    def with_response(self, y) -> "ProblemInstance":
        return ProblemInstance(self.x0, self.x, y, self.family, self.sigma)

    def rows(self, idx) -> "ProblemInstance":
        return ProblemInstance(self.x0[idx], self.x[idx], self.y[idx],
                               self.family, self.sigma)


def support_of(beta, z_tol: float = Z_TOL) -> tuple[int, ...]:
    """Indices p with |beta_p| > z_tol, the estimated support."""
    if z_tol <= 0:
        raise ValueError("z_tol must be positive")
    beta = np.asarray(beta, dtype=float)
    return tuple(int(i) for i in np.flatnonzero(np.abs(beta) > z_tol))


def family_mean(family: GlmFamily, theta) -> np.ndarray:
    """Apply the family's mean function b' componentwise."""
    theta = np.asarray(theta, dtype=float)
    if not family.theta_in_domain(theta):
        raise ValueError("linear predictor outside the family domain")
    return family.mean(theta)


@dataclass(frozen=True)
class SparseFit:
    """Result of a penalized fit: coefficients, support, and diagnostics."""

    beta0: np.ndarray
    beta: np.ndarray
    lam: float
    support: tuple[int, ...]
    kkt_residual: float
    iterations: int
    converged: bool = True

    @staticmethod
    def build(beta0, beta, lam, kkt_residual, iterations,
              converged=True, z_tol=Z_TOL) -> "SparseFit":
        beta0 = _frozen(np.asarray(beta0, dtype=float).ravel())
        beta = _frozen(np.asarray(beta, dtype=float).ravel())
        return SparseFit(beta0, beta, float(lam), support_of(beta, z_tol),
                         float(kkt_residual), int(iterations), bool(converged))

    @property
    def s_hat(self) -> int:
        return len(self.support)


@dataclass(frozen=True)
class ThresholdResult:
    """A quantile universal threshold and how it was obtained."""

    lambda_qut: float
    alpha: float
    mc_samples: int
    infinite_fraction: float
    seed: int

    @property
    def quantile_is_infinite(self) -> bool:
        return math.isinf(self.lambda_qut)


@dataclass(frozen=True)
class SupportMetrics:
    """Selection-quality metrics for one replication."""

    tpr: float
    fdr: float
    s_hat: int
    s_star: int
    oir: float = field(default=float("nan"))
