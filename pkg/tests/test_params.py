import numpy as np
import pytest

from segtrade import EconomyParams, ParameterError, dump_economy
from segtrade.params import economy_from_dict, load_economy

from conftest import random_economy


def test_symmetric_constructor_validates():
    params = EconomyParams.symmetric(3, tau_off=1.2).validate()
    assert params.n_regions == 3
    assert np.all(np.diag(params.tau) == 1.0)


def test_tau_diagonal_must_be_one():
    params = EconomyParams.symmetric(2)
    tau = params.tau.copy()
    tau[0, 0] = 1.01
    with pytest.raises(ParameterError, match="diagonal"):
        EconomyParams.symmetric(2).with_endowment([0, 0]).__class__(
            sigma=params.sigma, alpha=params.alpha, beta_m=params.beta_m,
            beta_f=params.beta_f, nu=params.nu, eta=params.eta,
            z_m=params.z_m, z_f=params.z_f, tau=tau,
            endowment=params.endowment,
        ).validate()


def test_triangle_inequality_violation_rejected():
    # direct route cheaper bound: tau[0,2] must be <= tau[0,1] * tau[1,2] = 1.21
    tau = np.array([
        [1.0, 1.1, 2.0],
        [1.1, 1.0, 1.1],
        [2.0, 1.1, 1.0],
    ])
    ones = np.ones(3)
    with pytest.raises(ParameterError, match="triangle"):
        EconomyParams(sigma=3.0, alpha=0.5 * ones, beta_m=0.7 * ones,
                      beta_f=0.3 * ones, nu=ones, eta=ones, z_m=ones,
                      z_f=ones, tau=tau).validate()


def test_beta_ordering_enforced():
    ones = np.ones(2)
    with pytest.raises(ParameterError, match="beta_m"):
        EconomyParams(sigma=3.0, alpha=0.5 * ones, beta_m=0.3 * ones,
                      beta_f=0.5 * ones, nu=ones, eta=ones, z_m=ones,
                      z_f=ones, tau=np.eye(2) * 0 + [[1, 1.2], [1.2, 1]]).validate()


def test_sigma_one_rejected():
    with pytest.raises(ParameterError, match="sigma"):
        EconomyParams.symmetric(2, sigma=1.0).validate()


@pytest.mark.parametrize("field,value", [
    ("alpha", [0.0, 0.5]),
    ("alpha", [1.0, 0.5]),
    ("nu", [0.0, 1.0]),
    ("eta", [-1.0, 1.0]),
    ("z_m", [0.0, 1.0]),
    ("endowment", [-0.1, 0.0]),
])
def test_domain_violations(field, value):
    base = EconomyParams.symmetric(2, tau_off=1.2)
    kwargs = {name: getattr(base, name) for name in
              ("sigma", "alpha", "beta_m", "beta_f", "nu", "eta", "z_m", "z_f",
               "tau", "endowment")}
    kwargs[field] = value
    with pytest.raises(ParameterError):
        EconomyParams(**kwargs).validate()


def test_vector_length_mismatch():
    ones = np.ones(2)
    with pytest.raises(ParameterError, match="length"):
        EconomyParams(sigma=3.0, alpha=[0.5, 0.5, 0.5], beta_m=0.7 * ones,
                      beta_f=0.3 * ones, nu=ones, eta=ones, z_m=ones,
                      z_f=ones, tau=np.array([[1, 1.2], [1.2, 1]]))


def test_toml_round_trip(tmp_path, rng):
    params = random_economy(rng, n=4)
    path = tmp_path / "economy.toml"
    dump_economy(params, path)
    loaded = load_economy(path)
    for name in ("alpha", "beta_m", "beta_f", "nu", "eta", "z_m", "z_f",
                 "endowment"):
        np.testing.assert_array_equal(getattr(loaded, name), getattr(params, name))
    np.testing.assert_array_equal(loaded.tau, params.tau)
    assert loaded.sigma == params.sigma


def test_unknown_key_rejected():
    with pytest.raises(ParameterError, match="unknown"):
        economy_from_dict({"sigma": 3.0, "bogus": 1})


def test_missing_key_rejected():
    with pytest.raises(ParameterError, match="missing"):
        economy_from_dict({"sigma": 3.0})


def test_shock_endowment_only_touches_target():
    params = EconomyParams.symmetric(3, endowment=0.1)
    shocked = params.shock_endowment(1, 0.05)
    assert shocked.endowment[1] == pytest.approx(0.15)
    assert shocked.endowment[0] == pytest.approx(0.1)
    np.testing.assert_array_equal(shocked.tau, params.tau)
