import numpy as np
import pytest

from bilarx import (
    ArxOrders,
    change_points,
    fit_piecewise_constant,
    least_squares_arx,
    naive_identify,
    scenario,
    simulate_arx,
)

from _oracles import exhaustive_segmentation_cost


def segmentation_cost(y, u_hat):
    return float(np.sum((np.asarray(y) - np.asarray(u_hat)) ** 2))


class TestFitPiecewiseConstant:
    def test_constant_signal(self):
        y = np.full(7, 3.25)
        u_hat, cps = fit_piecewise_constant(y, 4)
        assert np.array_equal(u_hat, y)
        assert cps == []

    def test_exact_step(self):
        u_hat, cps = fit_piecewise_constant(np.array([0.0, 0.0, 4.0, 4.0]), 2)
        assert np.array_equal(u_hat, [0, 0, 4, 4])
        assert cps == [2]
        assert segmentation_cost([0, 0, 4, 4], u_hat) == 0.0

    def test_matches_exhaustive_enumeration(self):
        rng = np.random.default_rng(21)
        y = rng.normal(size=12)
        u_hat, _ = fit_piecewise_constant(y, 3)
        oracle = exhaustive_segmentation_cost(y, 3)
        assert segmentation_cost(y, u_hat) == pytest.approx(oracle, abs=1e-10)

    def test_exhaustive_across_sizes_and_budgets(self):
        rng = np.random.default_rng(22)
        for N in range(4, 13):
            for budget in (1, 2, 3):
                y = rng.normal(size=N)
                u_hat, _ = fit_piecewise_constant(y, budget)
                oracle = exhaustive_segmentation_cost(y, budget)
                assert segmentation_cost(y, u_hat) == pytest.approx(oracle, abs=1e-10)

    def test_cost_non_increasing_in_budget(self):
        rng = np.random.default_rng(23)
        y = rng.normal(size=15)
        costs = [segmentation_cost(y, fit_piecewise_constant(y, k)[0])
                 for k in range(1, 7)]
        assert all(b <= a + 1e-12 for a, b in zip(costs, costs[1:]))

    def test_segment_levels_are_means(self):
        y = np.array([1.0, 3.0, 10.0, 14.0])
        u_hat, cps = fit_piecewise_constant(y, 2)
        assert cps == [2]
        assert np.allclose(u_hat, [2.0, 2.0, 12.0, 12.0])

    def test_rejects_bad_budget(self):
        with pytest.raises(ValueError, match="max_segments"):
            fit_piecewise_constant(np.ones(5), 0)


class TestLeastSquaresArx:
    def test_plant_and_recover(self):
        rng = np.random.default_rng(30)
        orders = ArxOrders(n_a=2, n_b=3, n_k=1)
        a_true = np.array([0.4, -0.2])
        b_true = np.array([1.5, -2.0, 0.7])
        u = rng.normal(size=60)
        z = simulate_arx(a_true, b_true, orders, u)
        a_est, b_est = least_squares_arx(z, u, orders)
        assert np.max(np.abs(a_est - a_true)) <= 1e-8
        assert np.max(np.abs(b_est - b_true)) <= 1e-8

    def test_identity_system(self):
        rng = np.random.default_rng(31)
        u = rng.normal(size=20)
        orders = ArxOrders(n_a=0, n_b=1, n_k=0)
        y = simulate_arx((), (1.0,), orders, u)
        _, b_est = least_squares_arx(y, u, orders)
        assert b_est[0] == pytest.approx(1.0)

    def test_zero_input_rejected(self):
        orders = ArxOrders(n_a=0, n_b=2, n_k=0)
        with pytest.raises(ValueError, match="rank deficient"):
            least_squares_arx(np.random.default_rng(0).normal(size=15),
                              np.zeros(15), orders)

    def test_residual_orthogonal_to_regressors(self):
        rng = np.random.default_rng(32)
        orders = ArxOrders(n_a=1, n_b=2, n_k=0)
        u = rng.normal(size=40)
        y = simulate_arx((0.3,), (1.0, -0.5), orders, u) + rng.normal(size=40) * 0.1
        a_est, b_est = least_squares_arx(y, u, orders)
        from bilarx.baseline import _regressors

        phi, target = _regressors(y, u, orders)
        resid = target - phi @ np.concatenate([b_est, a_est])
        assert np.max(np.abs(phi.T @ resid)) <= 1e-9 * max(np.max(np.abs(phi)), 1.0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="equal length"):
            least_squares_arx(np.ones(10), np.ones(9), ArxOrders(n_a=0, n_b=1))


class TestNaiveIdentify:
    def test_fir_noisefree_recovers_b_direction(self):
        # The square-error segmentation places boundaries inside the 3-tap
        # transition of the output, which caps the agreement below exact.
        sc = scenario("scenario_fir_noisefree")
        a_est, b_est, u_hats = naive_identify(sc.spec, 4)
        b_true = sc.truth.b / np.linalg.norm(sc.truth.b)
        b_unit = b_est / np.linalg.norm(b_est)
        assert abs(float(b_unit @ b_true)) >= 0.9
        assert a_est.shape == (0,)

    def test_noisy_arx_change_points_differ_from_truth(self):
        sc = scenario("scenario_arx_noisy")
        _, _, u_hats = naive_identify(sc.spec, 4)
        cps = change_points(u_hats[0], 0.5)
        assert cps != list(sc.truth.change_points[0])

    def test_single_segment_budget_degenerates(self):
        sc = scenario("scenario_fir_noisefree")
        with pytest.raises(ValueError, match="rank deficient"):
            naive_identify(sc.spec, 1)

    def test_two_sequences_shared_fit(self):
        sc = scenario("scenario_two_sequences")
        a_est, b_est, u_hats = naive_identify(sc.spec, 4)
        assert len(u_hats) == 2
        assert b_est.shape == (3,)
        assert a_est.shape == (1,)
