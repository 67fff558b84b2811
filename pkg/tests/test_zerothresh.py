import math

import numpy as np
import numpy.testing as npt
import pytest

from quthresh import (
    BERNOULLI,
    GAUSSIAN,
    POISSON,
    IncompatiblePenaltyError,
    PenaltySpec,
    ProblemInstance,
    binomial_scaled,
    lasso_fit,
    mle_domain_contains,
    sqrt_lasso_fit,
    tv1d_fit,
    zero_threshold,
    zero_threshold_glm,
)


def plain(x, y, family=GAUSSIAN):
    x = np.atleast_2d(np.asarray(x, dtype=float))
    return ProblemInstance(np.zeros((x.shape[0], 0)), x, y, family)


class TestCatalogueValues:
    def test_lasso_identity(self):
        assert zero_threshold(plain(np.eye(2), [3.0, -1.0]),
                              PenaltySpec.lasso()) == 3.0

    def test_sqrt_lasso(self):
        assert zero_threshold(plain(np.eye(2), [3.0, 4.0]),
                              PenaltySpec.sqrt_lasso()) == pytest.approx(0.8)

    def test_tv1d_two_points(self):
        assert zero_threshold(plain(np.eye(2), [0.0, 1.0]),
                              PenaltySpec.total_variation_1d()) == 0.5

    def test_best_subset_identity(self):
        assert zero_threshold(plain(np.eye(2), [3.0, 1.0]),
                              PenaltySpec.best_subset()) == pytest.approx(4.5)

    def test_adaptive_lasso_weights(self):
        inst = plain(np.eye(2), [3.0, -1.0])
        val = zero_threshold(inst, PenaltySpec.adaptive_lasso([0.1, 10.0]))
        assert val == pytest.approx(10.0)

    def test_lad_lasso_sign_only(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal((6, 3))
        y = rng.standard_normal(6)
        val = zero_threshold(plain(x, y), PenaltySpec.lad_lasso())
        npt.assert_allclose(val, np.abs(x.T @ np.sign(y)).max())

    def test_group_lasso(self):
        rng = np.random.default_rng(2)
        x = rng.standard_normal((10, 4))
        y = rng.standard_normal(10)
        groups = ((0, 2), (1, 3))
        val = zero_threshold(plain(x, y), PenaltySpec.group_lasso(groups))
        expect = max(np.linalg.norm(x[:, [0, 2]].T @ y),
                     np.linalg.norm(x[:, [1, 3]].T @ y))
        assert val == pytest.approx(expect)
        val2 = zero_threshold(plain(x, y),
                              PenaltySpec.group_sqrt_lasso(groups))
        assert val2 == pytest.approx(expect / np.linalg.norm(y))

    def test_elastic_net_ignores_ridge_part(self):
        inst = plain(np.eye(2), [3.0, -1.0])
        for lam2 in (0.0, 1.0, 50.0):
            assert zero_threshold(inst, PenaltySpec.elastic_net(lam2)) == 3.0

    def test_low_rank_top_singular_value(self):
        y = np.diag([5.0, 2.0])
        inst = plain(np.zeros((4, 0)), y.ravel())
        val = zero_threshold(inst, PenaltySpec.low_rank((2, 2)))
        assert val == pytest.approx(5.0)

    def test_fused_lasso_orthonormal_uses_tv_denoiser(self):
        rng = np.random.default_rng(3)
        q, _ = np.linalg.qr(rng.standard_normal((8, 8)))
        y = rng.standard_normal(8)
        lam2 = 0.3
        val = zero_threshold(plain(q, y),
                             PenaltySpec.fused_lasso_orthonormal(lam2))
        assert val == pytest.approx(np.abs(tv1d_fit(q.T @ y, lam2)).max())


class TestCatalogueInvariants:
    def test_scaling_covariance(self):
        rng = np.random.default_rng(4)
        x = rng.standard_normal((12, 5))
        y = rng.standard_normal(12)
        inst = plain(x, y)
        scaled = plain(x, 3.0 * y)
        assert zero_threshold(scaled, PenaltySpec.lasso()) == pytest.approx(
            3.0 * zero_threshold(inst, PenaltySpec.lasso()))
        assert zero_threshold(scaled, PenaltySpec.sqrt_lasso()) == \
            pytest.approx(zero_threshold(inst, PenaltySpec.sqrt_lasso()))
        assert zero_threshold(scaled, PenaltySpec.lad_lasso()) == \
            pytest.approx(zero_threshold(inst, PenaltySpec.lad_lasso()))

    def test_best_subset_orthonormal_reduces_to_delta1(self):
        rng = np.random.default_rng(5)
        for _ in range(10):
            q, _ = np.linalg.qr(rng.standard_normal((9, 4)))
            y = rng.standard_normal(9)
            val = zero_threshold(plain(q, y), PenaltySpec.best_subset())
            assert val == pytest.approx(0.5 * np.abs(q.T @ y).max() ** 2)

    def test_subbotin_nu0_matches_best_subset_orthonormal(self):
        rng = np.random.default_rng(6)
        q, _ = np.linalg.qr(rng.standard_normal((7, 7)))
        y = rng.standard_normal(7)
        a = zero_threshold(plain(q, y), PenaltySpec.subbotin_orthonormal(0.0))
        b = zero_threshold(plain(q, y), PenaltySpec.best_subset())
        assert a == pytest.approx(b, rel=1e-10)

    def test_generalized_lasso_reduces_to_tv1d(self):
        rng = np.random.default_rng(7)
        for n in (2, 3, 11, 50):
            y = rng.standard_normal(n)
            inst = plain(np.eye(n), y)
            b = np.diff(np.eye(n), axis=0)
            gl = zero_threshold(inst, PenaltySpec.generalized_lasso(b))
            tv = zero_threshold(inst, PenaltySpec.total_variation_1d())
            assert gl == pytest.approx(tv, abs=1e-10)

    def test_density_tv_shift_invariant(self):
        rng = np.random.default_rng(8)
        y = rng.standard_normal(15)
        empty = np.zeros((15, 0))
        a = zero_threshold(ProblemInstance(empty, empty, y),
                           PenaltySpec.density_tv())
        b = zero_threshold(ProblemInstance(empty, empty, y + 7.5),
                           PenaltySpec.density_tv())
        assert a == pytest.approx(b, rel=1e-12)

    def test_glm_gaussian_no_intercept_equals_lasso(self):
        rng = np.random.default_rng(9)
        x = rng.standard_normal((10, 6))
        y = rng.standard_normal(10)
        inst = plain(x, y)
        assert zero_threshold_glm(inst) == \
            zero_threshold(inst, PenaltySpec.lasso())

    def test_lasso_boundary_matches_bisection_on_solver(self):
        # Independent recovery of the zero boundary by bisecting the solver.
        rng = np.random.default_rng(10)
        for _ in range(10):
            x = rng.standard_normal((10, 20))
            y = rng.standard_normal(10)
            inst = plain(x, y)
            lam0 = zero_threshold(inst, PenaltySpec.lasso())
            lo, hi = 0.0, 2.0 * lam0 + 1.0
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if lasso_fit(inst, mid).s_hat == 0:
                    hi = mid
                else:
                    lo = mid
            assert hi == pytest.approx(lam0, rel=1e-6)


class TestGlmThreshold:
    def test_bernoulli_all_zero_infinite(self):
        inst = ProblemInstance(np.ones((3, 1)), np.eye(3), [0.0, 0, 0],
                               BERNOULLI)
        assert zero_threshold_glm(inst) == math.inf

    def test_poisson_all_zero_infinite(self):
        inst = ProblemInstance(np.ones((3, 1)), np.eye(3), [0.0, 0, 0],
                               POISSON)
        assert zero_threshold_glm(inst) == math.inf

    def test_bernoulli_two_point_value(self):
        inst = ProblemInstance(np.ones((2, 1)), np.array([[1.0], [-1.0]]),
                               [0.0, 1.0], BERNOULLI)
        assert zero_threshold_glm(inst) == pytest.approx(1.0, abs=1e-7)

    def test_gaussian_intercept_projection(self):
        rng = np.random.default_rng(11)
        x = rng.standard_normal((8, 5))
        y = rng.standard_normal(8)
        inst = ProblemInstance(np.ones((8, 1)), x, y)
        expect = np.abs(x.T @ (y - y.mean())).max()
        assert zero_threshold_glm(inst) == pytest.approx(expect, rel=1e-10)

    def test_p0_zero_bernoulli_centers_at_half(self):
        x = np.eye(2)
        inst = ProblemInstance(np.zeros((2, 0)), x, [0.0, 1.0], BERNOULLI)
        assert zero_threshold_glm(inst) == pytest.approx(0.5)


class TestMembership:
    def test_bernoulli_mixed_true(self):
        inst = ProblemInstance(np.ones((3, 1)), np.zeros((3, 0)),
                               [0.0, 1, 1], BERNOULLI)
        assert mle_domain_contains(inst)

    def test_binomial_all_ones_false(self):
        inst = ProblemInstance(np.ones((2, 1)), np.zeros((2, 0)), [1.0, 1.0],
                               binomial_scaled(2))
        assert not mle_domain_contains(inst)

    def test_gaussian_always_true(self):
        inst = ProblemInstance(np.ones((2, 1)), np.zeros((2, 0)),
                               [123.0, -5.0])
        assert mle_domain_contains(inst)

    def test_general_x0_uses_score_iteration(self):
        rng = np.random.default_rng(12)
        x0 = np.column_stack([np.ones(40), rng.standard_normal(40)])
        y = (rng.random(40) < 0.5).astype(float)
        inst = ProblemInstance(x0, np.zeros((40, 0)), y, BERNOULLI)
        assert mle_domain_contains(inst)


class TestPreconditions:
    def test_tv1d_needs_identity_design(self):
        rng = np.random.default_rng(13)
        inst = plain(rng.standard_normal((4, 4)), rng.standard_normal(4))
        with pytest.raises(IncompatiblePenaltyError):
            zero_threshold(inst, PenaltySpec.total_variation_1d())

    def test_orthonormal_branches_reject_general_design(self):
        rng = np.random.default_rng(14)
        inst = plain(rng.standard_normal((6, 3)), rng.standard_normal(6))
        with pytest.raises(IncompatiblePenaltyError):
            zero_threshold(inst, PenaltySpec.subbotin_orthonormal(0.5))
        with pytest.raises(IncompatiblePenaltyError):
            zero_threshold(inst, PenaltySpec.fused_lasso_orthonormal(0.1))

    def test_best_subset_cap(self):
        rng = np.random.default_rng(15)
        inst = plain(rng.standard_normal((5, 21)), rng.standard_normal(5))
        with pytest.raises(Exception, match="capped"):
            zero_threshold(inst, PenaltySpec.best_subset())

    def test_group_partition_validated(self):
        with pytest.raises(ValueError):
            PenaltySpec.group_lasso(((0, 1), (1, 2)))

    def test_generalized_lasso_needs_full_row_rank(self):
        with pytest.raises(ValueError):
            PenaltySpec.generalized_lasso(np.ones((2, 3)))


class TestBoundaryAgainstSolvers:
    """The defining identity: the fit is zero iff the penalty is at least
    the threshold, checked on both sides of the boundary."""

    @pytest.mark.parametrize("branch", ["lasso", "sqrt"])
    def test_gaussian_branches(self, branch):
        rng = np.random.default_rng(16)
        eps = 1e-3
        for _ in range(25):
            x = rng.standard_normal((9, 14))
            y = rng.standard_normal(9)
            inst = plain(x, y)
            if branch == "lasso":
                lam0 = zero_threshold(inst, PenaltySpec.lasso())
                fit_hi = lasso_fit(inst, lam0 * (1 + eps))
                fit_lo = lasso_fit(inst, lam0 * (1 - eps))
            else:
                lam0 = zero_threshold(inst, PenaltySpec.sqrt_lasso())
                fit_hi = sqrt_lasso_fit(inst, lam0 * (1 + eps))
                fit_lo = sqrt_lasso_fit(inst, lam0 * (1 - eps))
            assert fit_hi.s_hat == 0
            assert fit_lo.s_hat > 0

    def test_fused_lasso_l1_boundary(self):
        # On an orthonormal design the fused-lasso solution separates into
        # the TV denoiser of X'y followed by soft-thresholding at lam1, so
        # the lam1 boundary can be checked against that composed solver.
        rng = np.random.default_rng(17)
        eps = 1e-3
        for _ in range(100):
            n = int(rng.integers(4, 12))
            q_mat, _ = np.linalg.qr(rng.standard_normal((n, n)))
            y = rng.standard_normal(n)
            lam2 = float(rng.choice([0.05, 0.2, 1.0]))
            inst = plain(q_mat, y)
            lam0 = zero_threshold(inst,
                                  PenaltySpec.fused_lasso_orthonormal(lam2))
            denoised = tv1d_fit(q_mat.T @ y, lam2)

            def fused_beta(lam1):
                return np.sign(denoised) * np.maximum(
                    np.abs(denoised) - lam1, 0.0)

            assert np.all(fused_beta(lam0 * (1 + eps)) == 0.0)
            assert np.any(fused_beta(lam0 * (1 - eps)) != 0.0)
