"""Tests for the local quadratic smoother and the leave-one-out estimator."""

import numpy as np
import pytest

from fsim.kernel import smooth_kernel
from fsim.locfit import (
    EmptyWindowError,
    SingularFitError,
    curve_estimates,
    local_quad_fit,
    nw_estimate_loo,
    nw_loo_all,
    relocated_fit,
    smoother_matrix,
)


def weighted_sum_of_squares(z, y, u, h, a, b, c):
    d = z - u
    residual = y - a - b * d - c * d * d / 2.0
    return float(np.sum(residual**2 * smooth_kernel(d / h)))


def brute_force_abc(z, y, u, h, width=8.0):
    """Independent oracle: coarse 13x13x13 grid over (a, b, c) to localize,
    then Powell-style polish with exact parabolic line minimizations.  The
    cost is exactly quadratic in the parameters, so three-point line fits are
    exact and the direction updates terminate at the minimizer; no linear
    algebra involved."""
    def cost(theta):
        return weighted_sum_of_squares(z, y, u, h, *theta)

    axis = np.linspace(-width, width, 13)
    best, best_val = None, np.inf
    for a in axis:
        for b in axis:
            for c in axis:
                val = cost((a, b, c))
                if val < best_val:
                    best, best_val = np.array([a, b, c]), val

    def line_min(x, direction):
        lo, mid, hi = cost(x - direction), cost(x), cost(x + direction)
        curvature = lo - 2.0 * mid + hi
        if curvature <= 0.0:
            return x
        return x + 0.5 * (lo - hi) / curvature * direction

    directions = [np.eye(3)[k] for k in range(3)]
    x = best
    for _ in range(8):
        start = x.copy()
        for direction in directions:
            x = line_min(x, direction)
        displacement = x - start
        if np.linalg.norm(displacement) > 1e-14:
            directions = directions[1:] + [displacement]
            x = line_min(x, displacement)
    return x


class TestLocalQuadFit:
    def test_exact_quadratic_reproduced(self):
        rng = np.random.default_rng(0)
        z = rng.uniform(-1.0, 1.0, 40)
        u = 0.2
        d = z - u
        y = 4.0 + 2.0 * d + 3.0 * d * d / 2.0
        for h in (0.4, 0.9, 2.5):
            fit = local_quad_fit(z, y, u, h)
            assert fit.a_hat == pytest.approx(4.0, abs=1e-8)
            assert fit.b_hat == pytest.approx(2.0, abs=1e-8)
            assert fit.c_hat == pytest.approx(3.0, abs=1e-8)

    def test_constant_reproduced(self):
        z = np.linspace(-1.0, 1.0, 15)
        fit = local_quad_fit(z, np.full(15, 7.0), 0.1, 0.8)
        assert fit.a_hat == pytest.approx(7.0, abs=1e-10)
        assert fit.b_hat == pytest.approx(0.0, abs=1e-9)
        assert fit.c_hat == pytest.approx(0.0, abs=1e-9)

    def test_matches_brute_force_minimizer(self):
        rng = np.random.default_rng(42)
        z = rng.uniform(-1.0, 1.0, 5)
        y = rng.normal(0.0, 1.0, 5)
        u, h = 0.0, 1.2
        fit = local_quad_fit(z, y, u, h)
        a, b, c = brute_force_abc(z, y, u, h)
        assert fit.a_hat == pytest.approx(a, abs=1e-6)
        assert fit.b_hat == pytest.approx(b, abs=1e-6)
        assert fit.c_hat == pytest.approx(c, abs=1e-6)

    def test_smoother_rows_consistent_with_estimates(self):
        rng = np.random.default_rng(1)
        z = rng.uniform(0.0, 1.0, 30)
        y = rng.normal(0.0, 1.0, 30)
        fit = local_quad_fit(z, y, 0.5, 0.3)
        assert fit.a_hat == pytest.approx(fit.smoother_row_0 @ y, abs=1e-10)
        assert fit.b_hat == pytest.approx(fit.smoother_row_1 @ y, abs=1e-10)
        assert fit.c_hat == pytest.approx(fit.smoother_row_2 @ y, abs=1e-10)
        assert fit.smoother_row_0.sum() == pytest.approx(1.0, abs=1e-10)
        assert fit.effective_points >= 3

    def test_too_few_points_in_window(self):
        z = np.array([0.0, 0.01, 5.0, 6.0, 7.0])
        y = np.zeros(5)
        with pytest.raises(SingularFitError):
            local_quad_fit(z, y, 0.0, 0.1)

    def test_coincident_points_are_singular(self):
        z = np.full(10, 0.3)
        with pytest.raises(SingularFitError):
            local_quad_fit(z, np.zeros(10), 0.3, 1.0)

    def test_bad_bandwidth(self):
        with pytest.raises(ValueError):
            local_quad_fit(np.arange(5.0), np.zeros(5), 0.0, -1.0)

    def test_linearity_in_responses(self):
        rng = np.random.default_rng(2)
        z = rng.uniform(0.0, 1.0, 25)
        y1 = rng.normal(size=25)
        y2 = rng.normal(size=25)
        f1 = local_quad_fit(z, y1, 0.4, 0.35)
        f2 = local_quad_fit(z, y2, 0.4, 0.35)
        f12 = local_quad_fit(z, y1 + y2, 0.4, 0.35)
        assert f12.a_hat == pytest.approx(f1.a_hat + f2.a_hat, abs=1e-10)
        assert f12.b_hat == pytest.approx(f1.b_hat + f2.b_hat, abs=1e-10)
        assert f12.c_hat == pytest.approx(f1.c_hat + f2.c_hat, abs=1e-10)

    def test_shift_equivariance(self):
        rng = np.random.default_rng(3)
        z = rng.uniform(0.0, 1.0, 25)
        y = rng.normal(size=25)
        base = local_quad_fit(z, y, 0.5, 0.3)
        shifted = local_quad_fit(z + 17.25, y, 0.5 + 17.25, 0.3)
        assert shifted.a_hat == pytest.approx(base.a_hat, abs=1e-9)
        assert shifted.b_hat == pytest.approx(base.b_hat, abs=1e-9)
        assert shifted.c_hat == pytest.approx(base.c_hat, abs=1e-9)

    def test_scale_covariance(self):
        rng = np.random.default_rng(4)
        z = rng.uniform(0.0, 1.0, 25)
        y = rng.normal(size=25)
        lam = 3.5
        base = local_quad_fit(z, y, 0.5, 0.3)
        scaled = local_quad_fit(lam * z, y, lam * 0.5, lam * 0.3)
        assert scaled.a_hat == pytest.approx(base.a_hat, abs=1e-8)
        assert scaled.b_hat == pytest.approx(base.b_hat / lam, abs=1e-8)
        assert scaled.c_hat == pytest.approx(base.c_hat / lam**2, abs=1e-8)


class TestNadarayaWatson:
    def test_constant_responses(self):
        z = np.linspace(0.0, 1.0, 8)
        value = nw_estimate_loo(z, np.full(8, 4.5), 3, 0.5)
        assert value == pytest.approx(4.5, abs=1e-14)

    def test_single_neighbour(self):
        assert nw_estimate_loo([0.0, 0.1], [2.0, 4.0], 0, 1.0) == pytest.approx(4.0)

    def test_direct_sum_oracle(self):
        rng = np.random.default_rng(5)
        z = rng.uniform(0.0, 1.0, 6)
        y = rng.normal(size=6)
        h = 0.4
        for i in range(6):
            num = den = 0.0
            for j in range(6):
                if j == i:
                    continue
                weight = smooth_kernel((z[i] - z[j]) / h)
                num += weight * y[j]
                den += weight
            assert nw_estimate_loo(z, y, i, h) == pytest.approx(num / den, abs=1e-12)

    def test_empty_window_signal(self):
        z = np.array([0.0, 10.0, 20.0, 30.0])
        with pytest.raises(EmptyWindowError):
            nw_estimate_loo(z, np.zeros(4), 0, 0.5)

    def test_vectorized_matches_pointwise(self):
        rng = np.random.default_rng(6)
        z = rng.uniform(0.0, 1.0, 30)
        y = rng.normal(size=30)
        estimates, excluded = nw_loo_all(z, y, 0.15)
        for i in range(30):
            if excluded[i]:
                with pytest.raises(EmptyWindowError):
                    nw_estimate_loo(z, y, i, 0.15)
            else:
                # matrix and pointwise paths may differ in accumulation order
                assert estimates[i] == pytest.approx(nw_estimate_loo(z, y, i, 0.15), rel=1e-12)

    def test_exclusions_flagged(self):
        z = np.array([0.0, 0.01, 0.02, 9.0])
        estimates, excluded = nw_loo_all(z, np.ones(4), 0.1)
        assert list(excluded) == [False, False, False, True]
        assert np.isnan(estimates[3])


class TestSmootherMatrix:
    def test_rows_sum_to_one(self):
        rng = np.random.default_rng(7)
        z = rng.uniform(0.0, 1.0, 20)
        smoother = smoother_matrix(z, 0.5)
        np.testing.assert_allclose(smoother.sum(axis=1), np.ones(20), atol=1e-10)

    def test_matches_pointwise_fits(self):
        rng = np.random.default_rng(8)
        z = rng.uniform(0.0, 1.0, 20)
        y = rng.normal(size=20)
        smoother = smoother_matrix(z, 0.4)
        fitted = smoother @ y
        for j in range(20):
            assert fitted[j] == pytest.approx(local_quad_fit(z, y, z[j], 0.4).a_hat, abs=1e-10)

    def test_large_bandwidth_approaches_global_quadratic_hat(self):
        rng = np.random.default_rng(9)
        z = rng.uniform(0.0, 1.0, 12)
        design = np.column_stack([np.ones(12), z, z * z])
        hat = design @ np.linalg.solve(design.T @ design, design.T)
        smoother = smoother_matrix(z, 1e6)
        assert np.abs(smoother - hat).max() < 1e-8

    def test_singular_row_is_tagged(self):
        z = np.array([0.0, 0.01, 0.02, 0.03, 9.0])
        with pytest.raises(SingularFitError) as info:
            smoother_matrix(z, 0.1)
        assert info.value.row == 4


class TestCurveHelpers:
    def test_curve_estimates_gap_encoding(self):
        z = np.concatenate([np.linspace(0.0, 1.0, 30), [9.0, 9.01, 9.02]])
        y = np.sin(z)
        grid = np.array([0.5, 5.0, 9.01])
        values = curve_estimates(z, y, grid, 0.3, derivative=0)
        assert np.isfinite(values[0])
        assert np.isnan(values[1])
        assert values[0] == pytest.approx(local_quad_fit(z, y, 0.5, 0.3).a_hat)

    def test_relocated_fit_moves_inward(self):
        rng = np.random.default_rng(10)
        z = np.sort(rng.uniform(0.0, 1.0, 40))
        y = rng.normal(size=40)
        fit, moved = relocated_fit(z, y, z.max() + 0.5, 0.12)
        assert moved
        assert np.isfinite(fit.a_hat)
        fit2, moved2 = relocated_fit(z, y, 0.5, 0.4)
        assert not moved2

    def test_relocated_fit_gives_up(self):
        z = np.array([0.0, 10.0, 20.0])
        with pytest.raises(SingularFitError):
            relocated_fit(z, np.zeros(3), 0.0, 0.01, max_steps=4)
