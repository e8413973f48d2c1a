import numpy as np
import pytest

from segtrade import (ConvergenceError, EconomyParams, Numeraire,
                      ParameterError, SolverOptions, excess_residuals, solve,
                      walras_check)

from conftest import random_economy


def balanced_symmetric(n=3, tau_off=1.3, eta=1.0, nu=1.0):
    """Symmetric economy whose equilibrium is exactly w == 1.

    Needs alpha = 1/2, beta_m + beta_f = 1, nu = 1, zero endowment: male and
    female demand halves then match the identical supplies at unit wages.
    """
    return EconomyParams.symmetric(n, alpha=0.5, beta_m=0.7, beta_f=0.3,
                                   nu=nu, eta=eta, tau_off=tau_off, endowment=0.0)


class TestResiduals:
    def test_symmetric_unit_wages_are_fixed_point(self):
        params = balanced_symmetric()
        res = excess_residuals(params, np.ones(3), np.ones(3))
        assert np.abs(res).max() < 1e-12

    def test_wage_bump_gives_negative_residual(self, solved_asymmetric):
        params, eq, _ = solved_asymmetric
        wm = eq.wage_m.copy()
        wm[1] *= 1.01
        res = excess_residuals(params, wm, eq.wage_f)
        assert res[1] < 0  # male entry of region 1: excess supply

    def test_positive_wages_required(self):
        params = balanced_symmetric()
        with pytest.raises(ParameterError):
            excess_residuals(params, np.array([1.0, -1.0, 1.0]), np.ones(3))


class TestAutarkyClosedForm:
    @pytest.mark.parametrize("endowment", [0.0, 0.3])
    def test_full_segmentation_wage_ratio(self, endowment):
        # N=1, beta_m=1, beta_f=0. Clearing requires L_m w_m = alpha Y and
        # L_f w_f = (1-alpha) Y, so (L_f w_f)/(L_m w_m) = (1-alpha)/alpha.
        # The supply curve gives L_f/L_m = (x/nu)^(1/eta) with x = w_f/w_m,
        # hence x^((1+eta)/eta) = ((1-alpha)/alpha) nu^(1/eta), i.e.
        #   x = ((1-alpha)/alpha)^(eta/(1+eta)) * nu^(1/(1+eta)).
        # The transfer levy recycles endowment income one-for-one in autarky,
        # so the ratio is endowment-free.
        alpha, nu, eta = 0.6, 1.2, 0.8
        params = EconomyParams(sigma=3.0, alpha=[alpha], beta_m=[1.0],
                               beta_f=[0.0], nu=[nu], eta=[eta], z_m=[1.1],
                               z_f=[0.9], tau=np.ones((1, 1)),
                               endowment=[endowment])
        eq, report = solve(params)
        assert report.residual <= 1e-12
        expected = ((1 - alpha) / alpha) ** (eta / (1 + eta)) * nu ** (1 / (1 + eta))
        assert eq.wage_f[0] / eq.wage_m[0] == pytest.approx(expected, rel=1e-10)


class TestSolve:
    def test_symmetric_two_regions(self):
        # costless trade: identical wages and incomes, shares exactly 1/2
        params = balanced_symmetric(n=2, tau_off=1.0)
        eq, report = solve(params)
        assert report.converged and report.residual <= 1e-12
        np.testing.assert_allclose(eq.wage_m, eq.wage_m[0], rtol=1e-10)
        np.testing.assert_allclose(eq.income, eq.income[0], rtol=1e-10)
        np.testing.assert_allclose(eq.share_m, 0.5, rtol=1e-8)

    def test_symmetric_costly_trade_home_bias(self):
        params = balanced_symmetric(n=2, tau_off=1.3)
        eq, report = solve(params)
        assert report.residual <= 1e-12
        np.testing.assert_allclose(eq.income, eq.income[0], rtol=1e-10)
        assert eq.share_m[0, 0] > 0.5 > eq.share_m[1, 0]

    def test_random_battery(self, rng):
        for _ in range(60):
            params = random_economy(rng)
            eq, report = solve(params)
            n = params.n_regions
            assert report.residual <= 1e-12
            assert walras_check(params, eq) <= 1e-11
            assert np.abs(eq.share_m.sum(axis=0) - 1).max() <= 1e-10
            assert np.abs(eq.share_f.sum(axis=0) - 1).max() <= 1e-10
            # labor supply ratio invariant
            expected = ((eq.wage_f / eq.wage_m) / params.nu) ** (1 / params.eta)
            np.testing.assert_allclose(eq.labor_f / eq.labor_m, expected, rtol=1e-10)

    def test_multi_start_agreement(self, rng):
        params = random_economy(rng, n=4)
        eq1, _ = solve(params)
        w0 = np.concatenate([rng.uniform(0.3, 3.0, 4), rng.uniform(0.3, 3.0, 4)])
        eq2, _ = solve(params, SolverOptions(initial_wages=w0))
        np.testing.assert_allclose(eq1.wage_m, eq2.wage_m, rtol=1e-8)
        np.testing.assert_allclose(eq1.wage_f, eq2.wage_f, rtol=1e-8)

    def test_productivity_raises_relative_income(self, rng):
        params = random_economy(rng, n=3)
        eq_base, _ = solve(params)
        z_m = params.z_m.copy()
        z_m[0] *= 1.2
        from dataclasses import replace
        eq_up, _ = solve(replace(params, z_m=z_m))
        base_rel = eq_base.income[0] / eq_base.income.sum()
        up_rel = eq_up.income[0] / eq_up.income.sum()
        assert up_rel > base_rel

    def test_numeraire_invariance_of_real_objects(self, rng):
        params = random_economy(rng, n=4)
        eq_a, _ = solve(params, SolverOptions(numeraire=Numeraire.FIX_MALE_WAGE_REGION1))
        eq_b, _ = solve(params, SolverOptions(numeraire=Numeraire.FIX_WORLD_INCOME))
        np.testing.assert_allclose(eq_a.share_m, eq_b.share_m, atol=1e-8)
        np.testing.assert_allclose(eq_a.labor_m, eq_b.labor_m, rtol=1e-8)
        np.testing.assert_allclose(eq_a.labor_f, eq_b.labor_f, rtol=1e-8)
        np.testing.assert_allclose(eq_a.employment_ratio, eq_b.employment_ratio,
                                   rtol=1e-8)
        np.testing.assert_allclose(eq_a.wage_ratio, eq_b.wage_ratio, rtol=1e-8)
        np.testing.assert_allclose(eq_a.income / eq_a.price_ideal,
                                   eq_b.income / eq_b.price_ideal, rtol=1e-8)
        assert eq_b.income.sum() == pytest.approx(4.0, rel=1e-10)

    def test_homogeneity_of_residual_map(self, rng):
        # scaling all wages by lambda leaves the residuals unchanged
        params = random_economy(rng, n=3)
        wm = rng.uniform(0.5, 2.0, 3)
        wf = rng.uniform(0.5, 2.0, 3)
        r1 = excess_residuals(params, wm, wf)
        r2 = excess_residuals(params, 11.0 * wm, 11.0 * wf)
        np.testing.assert_allclose(r1, r2, atol=1e-10)

    def test_determinism_bitwise(self, rng):
        params = random_economy(rng, n=4)
        eq1, rep1 = solve(params)
        eq2, rep2 = solve(params)
        assert np.array_equal(eq1.wage_m, eq2.wage_m)
        assert np.array_equal(eq1.wage_f, eq2.wage_f)
        assert np.array_equal(eq1.income, eq2.income)
        assert rep1.iterations == rep2.iterations

    def test_nonconvergence_returns_best_iterate(self, rng):
        params = random_economy(rng, n=3)
        with pytest.raises(ConvergenceError) as excinfo:
            solve(params, SolverOptions(max_iterations=2))
        err = excinfo.value
        assert err.best_wages is not None and err.best_wages.shape == (6,)
        assert err.residual > 0

    def test_invalid_options(self):
        with pytest.raises(ParameterError):
            SolverOptions(damping=0.0)
        with pytest.raises(ParameterError):
            SolverOptions(tolerance=1e-18)


class TestWalras:
    def test_nonequilibrium_wages_fail_walras(self, solved_asymmetric):
        from dataclasses import replace as dc_replace
        params, eq, _ = solved_asymmetric
        wm = eq.wage_m.copy()
        wm[0] *= 1.15
        res = excess_residuals(params, wm, eq.wage_f)
        assert np.abs(res).max() > 1e-4  # clearly away from equilibrium

    def test_symmetric_exact_solution_zero(self):
        params = balanced_symmetric()
        eq, _ = solve(params)
        assert walras_check(params, eq) < 1e-13


class TestBruteForceGrid:
    def test_two_region_full_segmentation_matches_grid_search(self):
        # independent oracle: two-stage dense grid over log wages (numeraire
        # log w_m1 = 0) minimizing the residual max-norm
        ones = np.ones(2)
        params = EconomyParams(
            sigma=3.0, alpha=np.array([0.45, 0.6]), beta_m=ones * 1.0,
            beta_f=ones * 0.0, nu=np.array([1.1, 0.9]), eta=ones * 1.0,
            z_m=np.array([1.0, 1.2]), z_f=np.array([0.9, 1.0]),
            tau=np.array([[1.0, 1.25], [1.25, 1.0]]), endowment=ones * 0.0,
        ).validate()
        eq, _ = solve(params)
        target = np.log(np.concatenate([eq.wage_m, eq.wage_f]))

        def residual_norm(grid_point):
            w = np.exp(np.concatenate([[0.0], grid_point]))
            return np.abs(excess_residuals(params, w[:2], w[2:])).max()

        center = np.zeros(3)
        width = 1.0
        best = None
        for _ in range(3):  # successive refinement: resolution 2w/20 per pass
            axes = [np.linspace(c - width, c + width, 21) for c in center]
            best = None
            for a in axes[0]:
                for b in axes[1]:
                    for c in axes[2]:
                        val = residual_norm(np.array([a, b, c]))
                        if best is None or val < best[0]:
                            best = (val, np.array([a, b, c]))
            center = best[1]
            width /= 10.0
        grid_wages = np.concatenate([[0.0], center])
        assert np.abs(grid_wages - target).max() < 2e-2  # final grid resolution
