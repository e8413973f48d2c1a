import numpy as np
import pytest

from segtrade import EconomyParams, SolverOptions, solve


def random_economy(rng, n=None, endowment_scale=0.1):
    """A random valid economy with interior cost shares and sane trade costs."""
    if n is None:
        n = int(rng.integers(2, 7))
    gap = rng.uniform(0.15, 0.4, n)
    mid = rng.uniform(0.3, 0.7, n)
    beta_m = np.clip(mid + gap / 2, 0.05, 0.97)
    beta_f = np.minimum(np.clip(mid - gap / 2, 0.02, 0.9), beta_m - 0.05)
    tau = 1.0 + rng.uniform(0.05, 0.6, (n, n))
    tau = np.maximum(tau, tau.T)
    log_tau = np.log(tau)
    for k in range(n):
        log_tau = np.minimum(log_tau, log_tau[:, [k]] + log_tau[[k], :])
    tau = np.exp(log_tau)
    np.fill_diagonal(tau, 1.0)
    return EconomyParams(
        sigma=float(rng.uniform(2.0, 6.0)),
        alpha=rng.uniform(0.25, 0.75, n),
        beta_m=beta_m,
        beta_f=beta_f,
        nu=rng.uniform(0.7, 1.5, n),
        eta=rng.uniform(0.5, 2.0, n),
        z_m=rng.uniform(0.7, 1.4, n),
        z_f=rng.uniform(0.7, 1.4, n),
        tau=tau,
        endowment=rng.uniform(0.0, endowment_scale, n),
    ).validate()


@pytest.fixture
def rng():
    return np.random.default_rng(20240811)


@pytest.fixture
def solved_asymmetric():
    """One asymmetric 3-region economy with its equilibrium, shared by tests."""
    params = random_economy(np.random.default_rng(7), n=3)
    eq, report = solve(params, SolverOptions())
    return params, eq, report
