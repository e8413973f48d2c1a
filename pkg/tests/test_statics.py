import numpy as np
import pytest

from segtrade import (DomainError, EconomyParams, ParameterError,
                      ShockExperiment, Sign, analytic_ratio_derivative,
                      classify_shock_sign, demand_shift_derivative,
                      finite_difference_derivative, ho_contrast, male_income,
                      male_income_share, solve)

from conftest import random_economy


def three_region(alpha_d=0.9, tau_od=1.1, beta_m=0.85, beta_f=0.25, eta=1.0):
    """Asymmetric 3-region testbed: origin 0, shocked destination 1."""
    n = 3
    ones = np.ones(n)
    alpha = np.array([0.5, alpha_d, 0.5])
    tau = np.array([[1.0, tau_od, 1.4],
                    [tau_od, 1.0, 1.4],
                    [1.4, 1.4, 1.0]])
    return EconomyParams(sigma=4.0, alpha=alpha, beta_m=beta_m * ones,
                         beta_f=beta_f * ones, nu=ones, eta=eta * ones,
                         z_m=ones, z_f=ones, tau=tau,
                         endowment=0.05 * ones).validate()


class TestMaleIncome:
    def test_identity_with_equilibrium_object(self, rng):
        for _ in range(10):
            params = random_economy(rng)
            eq, _ = solve(params)
            for o in range(params.n_regions):
                value = male_income(o, eq, params)
                direct = eq.labor_m[o] * eq.wage_m[o]
                assert value == pytest.approx(direct, rel=1e-10)

    def test_symmetric_equality(self):
        params = EconomyParams.symmetric(3, tau_off=1.2, endowment=0.1)
        eq, _ = solve(params)
        values = [male_income(o, eq, params) for o in range(3)]
        assert max(values) - min(values) < 1e-10 * values[0]

    def test_autarky_closed_form(self):
        # N=1, beta_m=1, beta_f=0: male income = alpha * Y and Y equals total
        # labor income in autarky, so the male share is alpha exactly
        alpha = 0.6
        params = EconomyParams(sigma=3.0, alpha=[alpha], beta_m=[1.0],
                               beta_f=[0.0], nu=[1.0], eta=[1.0], z_m=[1.0],
                               z_f=[1.0], tau=np.ones((1, 1)), endowment=[0.2])
        eq, _ = solve(params)
        assert male_income_share(0, eq, params) == pytest.approx(alpha, rel=1e-10)
        assert male_income(0, eq, params) == pytest.approx(
            alpha * eq.income[0], rel=1e-10)

    def test_share_strictly_between_betas(self, rng):
        # the male income share is a revenue-weighted mix of beta_f and beta_m
        for _ in range(5):
            params = random_economy(rng)
            eq, _ = solve(params)
            for o in range(params.n_regions):
                share = male_income_share(o, eq, params)
                assert params.beta_f[o] < share < params.beta_m[o]


class TestDerivatives:
    def test_analytic_matches_finite_difference(self, rng):
        for _ in range(12):
            params = random_economy(rng, n=int(rng.integers(2, 5)))
            eq, _ = solve(params)
            o, d = 0, 1
            an = analytic_ratio_derivative(o, d, eq, params)
            step = 1e-5 * (1 + params.endowment[d])
            fd = finite_difference_derivative(params, o, d, step)
            assert np.sign(an) == np.sign(fd)
            if abs(fd) > 1e-6:
                assert an == pytest.approx(fd, rel=5e-2)

    def test_demand_shift_sign_alignment(self, rng):
        # the envelope prediction usually carries the response sign, but
        # cross-region wage feedback can overturn it near the boundary of the
        # sign regions; on unstructured random economies we ask for a strong
        # majority, and the exact derivative must nail every instance
        hits = 0
        total = 0
        for _ in range(12):
            params = random_economy(rng, n=3)
            eq, _ = solve(params)
            shift = demand_shift_derivative(0, 1, eq, params)
            an = analytic_ratio_derivative(0, 1, eq, params)
            fd = finite_difference_derivative(params, 0, 1,
                                              1e-5 * (1 + params.endowment[1]))
            assert np.sign(an) == np.sign(fd)
            if abs(fd) > 1e-8:
                total += 1
                hits += (np.sign(shift) == np.sign(fd))
        assert total >= 8 and hits >= 0.8 * total

    def test_equal_intensity_zero_derivative(self):
        # with beta_f ~= beta_m the income share is pinned between them, both
        # brackets collapse, and the equilibrium ratio cannot move
        n = 3
        ones = np.ones(n)
        params = EconomyParams(sigma=4.0, alpha=np.array([0.5, 0.9, 0.45]),
                               beta_m=0.6 * ones + 1e-9, beta_f=0.6 * ones,
                               nu=ones, eta=ones, z_m=ones, z_f=ones,
                               tau=three_region().tau, endowment=0.05 * ones)
        eq, _ = solve(params)
        assert abs(demand_shift_derivative(0, 1, eq, params)) < 1e-7
        assert abs(analytic_ratio_derivative(0, 1, eq, params)) < 1e-7

    def test_own_region_rejected(self, solved_asymmetric):
        params, eq, _ = solved_asymmetric
        with pytest.raises(ParameterError):
            analytic_ratio_derivative(1, 1, eq, params)
        with pytest.raises(ParameterError):
            demand_shift_derivative(1, 1, eq, params)

    def test_zero_step_rejected(self, solved_asymmetric):
        params, _, _ = solved_asymmetric
        with pytest.raises(DomainError):
            finite_difference_derivative(params, 0, 1, 0.0)

    def test_symmetric_twins_equal_derivatives(self):
        params = EconomyParams.symmetric(4, tau_off=1.2, endowment=0.1)
        d1 = finite_difference_derivative(params, 1, 0, 1e-4)
        d2 = finite_difference_derivative(params, 2, 0, 1e-4)
        assert d1 == pytest.approx(d2, abs=1e-10)

    def test_richardson_step_halving(self):
        # central differences converge at O(h^2): successive halvings shrink
        # the difference between estimates by about 4x
        params = three_region(alpha_d=0.9, tau_od=1.1)
        d1 = finite_difference_derivative(params, 0, 1, 4e-2)
        d2 = finite_difference_derivative(params, 0, 1, 2e-2)
        d3 = finite_difference_derivative(params, 0, 1, 1e-2)
        ratio = abs(d1 - d2) / abs(d2 - d3)
        assert 2.5 < ratio < 6.0

    def test_monotone_in_alpha(self):
        # holding everything else fixed, the envelope derivative falls as the
        # destination's spending tilts male
        values = []
        for alpha_d in np.linspace(0.1, 0.9, 7):
            params = three_region(alpha_d=alpha_d)
            eq, _ = solve(params)
            values.append(demand_shift_derivative(0, 1, eq, params))
        assert all(a > b for a, b in zip(values, values[1:]))


class TestClassification:
    def test_male_intensive_destination_negative(self):
        report = classify_shock_sign(three_region(alpha_d=0.95, tau_od=1.05),
                                     0, 1, 1e-3)
        assert report.predicted_sign is Sign.NEGATIVE
        assert report.realized_sign is Sign.NEGATIVE
        assert report.condition_holds
        assert report.agreement

    def test_female_intensive_destination_positive(self):
        report = classify_shock_sign(three_region(alpha_d=0.05, tau_od=1.05),
                                     0, 1, 1e-3)
        assert report.predicted_sign is Sign.POSITIVE
        assert report.realized_sign is Sign.POSITIVE

    def test_null_shock_is_zero_zero(self):
        report = classify_shock_sign(three_region(), 0, 1, 0.0)
        assert report.predicted_sign is Sign.ZERO
        assert report.realized_sign is Sign.ZERO

    def test_report_fields(self):
        report = classify_shock_sign(three_region(), 0, 1, 1e-3)
        assert report.xi > 0
        assert 0 < report.threshold < 1
        assert report.origin == 0 and report.dest == 1


class TestHOContrast:
    def test_decomposition_identity_random(self, rng):
        for _ in range(5):
            params = random_economy(rng, n=3)
            experiment = ShockExperiment.run(params, 1, 0.01)
            for origin in range(3):
                contrast = ho_contrast(experiment, origin)  # raises if broken
                mu = contrast.male_share_m_sector_base
                recon = (mu * contrast.ratio_m_base
                         + (1 - mu) * contrast.ratio_f_base)
                assert recon == pytest.approx(contrast.aggregate_base, rel=1e-10)

    def test_male_skewed_shock_pattern(self):
        # aggregate falls, both within-sector ratios rise, the male-intensive
        # sector's employment share rises
        params = three_region(alpha_d=0.9, tau_od=1.05)
        experiment = ShockExperiment.run(params, 1, 0.02)
        contrast = ho_contrast(experiment, 0)
        assert contrast.aggregate_shocked < contrast.aggregate_base
        assert contrast.ratio_m_shocked > contrast.ratio_m_base
        assert contrast.ratio_f_shocked > contrast.ratio_f_base
        assert contrast.male_share_m_sector_shocked > contrast.male_share_m_sector_base

    def test_zero_shock_no_change(self):
        params = three_region()
        experiment = ShockExperiment.run(params, 1, 0.0)
        contrast = ho_contrast(experiment, 0)
        assert contrast.aggregate_shocked == pytest.approx(
            contrast.aggregate_base, abs=1e-12)
        assert contrast.ratio_m_shocked == pytest.approx(
            contrast.ratio_m_base, abs=1e-12)

    def test_within_sector_ratio_law(self):
        # (L_f/L_m per sector) * (w_f/w_m) equals (1-beta)/beta in any
        # equilibrium of the same parameters
        params = three_region(beta_m=0.8, beta_f=0.3)
        experiment = ShockExperiment.run(params, 1, 0.05)
        for eq in (experiment.equilibrium_base, experiment.equilibrium_shocked):
            contrast = ho_contrast(ShockExperiment(params, 1, 0.0, eq, eq), 0)
            x = eq.wage_ratio[0]
            assert contrast.ratio_m_base * x == pytest.approx(0.2 / 0.8, rel=1e-10)
            assert contrast.ratio_f_base * x == pytest.approx(0.7 / 0.3, rel=1e-10)

    def test_full_segmentation_reports_none(self):
        ones = np.ones(2)
        params = EconomyParams(sigma=3.0, alpha=0.6 * ones, beta_m=ones * 1.0,
                               beta_f=ones * 0.0, nu=ones, eta=ones, z_m=ones,
                               z_f=ones, tau=np.array([[1.0, 1.2], [1.2, 1.0]]),
                               endowment=0.05 * ones)
        experiment = ShockExperiment.run(params, 1, 0.01)
        contrast = ho_contrast(experiment, 0)
        assert contrast.ratio_m_base is None and contrast.ratio_f_base is None
        assert "unchanged by assumption" in contrast.note
        assert 0 < contrast.male_share_m_sector_base <= 1
