"""Closed-form pricing, trade-share, and labor formulas.

Everything here is a pure function of parameters and wages: no iteration, no
state. Products of powers are evaluated in the log domain so that extreme
iceberg costs or large N cannot overflow, and so that boundary cost shares
(beta of exactly 0 or 1) contribute an exact zero term instead of a 0^0
power.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DegenerateEconomyError, DomainError
from .params import EconomyParams

SECTORS = ("m", "f")


def _check_sector(sector: str) -> str:
    if sector not in SECTORS:
        raise DomainError(f"sector must be one of {SECTORS}, got {sector!r}")
    return sector


def ideal_price_index(price_m, price_f, alpha):
    """Cobb-Douglas ideal price index A * Pm^alpha * Pf^(1-alpha).

    A = alpha^(-alpha) * (1-alpha)^(-(1-alpha)) makes one unit of the index
    buy one unit of the optimal consumption bundle.
    """
    price_m = np.asarray(price_m, dtype=float)
    price_f = np.asarray(price_f, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    if np.any(price_m <= 0) or np.any(price_f <= 0):
        raise DomainError("sector price indices must be strictly positive")
    if np.any(alpha <= 0) or np.any(alpha >= 1):
        raise DomainError("alpha must lie strictly inside (0, 1)")
    log_a = -(alpha * np.log(alpha) + (1 - alpha) * np.log1p(-alpha))
    out = np.exp(log_a + alpha * np.log(price_m) + (1 - alpha) * np.log(price_f))
    return float(out) if out.ndim == 0 else out


def unit_cost_logs(params: EconomyParams, log_wage_m, log_wage_f):
    """Log marginal cost per origin for both sectors: (cost_m, cost_f)."""
    lc_m = params.beta_m * log_wage_m + (1 - params.beta_m) * log_wage_f - np.log(params.z_m)
    lc_f = params.beta_f * log_wage_m + (1 - params.beta_f) * log_wage_f - np.log(params.z_f)
    return lc_m, lc_f


def landed_price(origin: int, dest: int, sector: str, params: EconomyParams,
                 wage_m, wage_f) -> float:
    """Delivered price of origin's variety in dest: tau * unit cost / TFP."""
    _check_sector(sector)
    wage_m = np.asarray(wage_m, dtype=float)
    wage_f = np.asarray(wage_f, dtype=float)
    if np.any(wage_m <= 0) or np.any(wage_f <= 0):
        raise DomainError("wages must be strictly positive")
    beta = params.beta_m[origin] if sector == "m" else params.beta_f[origin]
    z = params.z_m[origin] if sector == "m" else params.z_f[origin]
    log_p = (np.log(params.tau[origin, dest])
             + beta * np.log(wage_m[origin]) + (1 - beta) * np.log(wage_f[origin])
             - np.log(z))
    return float(np.exp(log_p))


def sector_price_index(landed_prices, sigma: float) -> float:
    """CES price index (sum p^(1-sigma))^(1/(1-sigma)), log-domain.

    sigma = 1 is rejected: the Cobb-Douglas variety limit is out of scope.
    """
    prices = np.asarray(landed_prices, dtype=float)
    if sigma == 1.0:
        raise DomainError("sigma = 1 is not supported (Cobb-Douglas variety limit)")
    if np.any(prices <= 0):
        raise DomainError("landed prices must be strictly positive")
    a = (1.0 - sigma) * np.log(prices)
    amax = a.max()
    return float(np.exp((amax + np.log(np.exp(a - amax).sum())) / (1.0 - sigma)))


def _log_share_matrix(params: EconomyParams, log_wage_m, log_wage_f, sector: str):
    """Log trade-share matrix for one sector; element (o, d)."""
    lc_m, lc_f = unit_cost_logs(params, log_wage_m, log_wage_f)
    lc = lc_m if sector == "m" else lc_f
    a = (1.0 - params.sigma) * (np.log(params.tau) + lc[:, None])  # (o, d)
    amax = a.max(axis=0, keepdims=True)
    log_denom = amax + np.log(np.exp(a - amax).sum(axis=0, keepdims=True))
    return a - log_denom


def trade_share_matrix(params: EconomyParams, wage_m, wage_f, sector: str) -> np.ndarray:
    """N x N matrix of expenditure shares pi[o, d]; columns sum to one."""
    _check_sector(sector)
    wage_m = np.asarray(wage_m, dtype=float)
    wage_f = np.asarray(wage_f, dtype=float)
    if np.any(wage_m <= 0) or np.any(wage_f <= 0):
        raise DomainError("wages must be strictly positive")
    return np.exp(_log_share_matrix(params, np.log(wage_m), np.log(wage_f), sector))


def trade_share(origin: int, dest: int, sector: str, params: EconomyParams,
                wage_m, wage_f) -> float:
    """Origin's share of dest's sector expenditure."""
    return float(trade_share_matrix(params, wage_m, wage_f, sector)[origin, dest])


def labor_supply_levels(wage_m, wage_f, price_ideal, nu, eta):
    """Household labor supplies implied by the first-order conditions.

    The household trades one unit of the consumption bundle (price P) against
    the marginal disutility of each labor type, giving

        L_m = (w_m / P)^(1/eta),   L_f = (w_f / (nu P))^(1/eta),

    whose ratio reproduces the relative supply curve
    L_f/L_m = ((1/nu) (w_f/w_m))^(1/eta). The levels follow from the
    optimality conditions rather than from a displayed equation; the relative
    curve is the primitive object.
    """
    wage_m = np.asarray(wage_m, dtype=float)
    wage_f = np.asarray(wage_f, dtype=float)
    price_ideal = np.asarray(price_ideal, dtype=float)
    nu = np.asarray(nu, dtype=float)
    eta = np.asarray(eta, dtype=float)
    if np.any(eta == 0):
        raise DomainError("eta = 0 (perfectly elastic hours) is rejected")
    if (np.any(wage_m <= 0) or np.any(wage_f <= 0) or np.any(price_ideal <= 0)
            or np.any(nu <= 0) or np.any(eta < 0)):
        raise DomainError("labor supply inputs must be strictly positive")
    l_m = np.exp((np.log(wage_m) - np.log(price_ideal)) / eta)
    l_f = np.exp((np.log(wage_f) - np.log(nu) - np.log(price_ideal)) / eta)
    if l_m.ndim == 0:
        return float(l_m), float(l_f)
    return l_m, l_f


def sector_revenues(params: EconomyParams, share_m, share_f, incomes):
    """Revenue of each origin's sectors given shares and destination spending.

    Returns (revenue_m, revenue_f): revenue_m[o] = sum_d pi_m[o,d] * alpha_d * Y_d.
    """
    incomes = np.asarray(incomes, dtype=float)
    rev_m = share_m @ (params.alpha * incomes)
    rev_f = share_f @ ((1 - params.alpha) * incomes)
    return rev_m, rev_f


def sector_labor_incomes(origin: int, params: EconomyParams, share_m, share_f,
                         incomes):
    """Demand-side labor income by gender for one origin.

    Competitive Cobb-Douglas production pays the male cost share beta of each
    sector's revenue to male labor and 1 - beta to female labor:

        female = (1-beta_f) * revenue_f + (1-beta_m) * revenue_m
        male   =    beta_f  * revenue_f +    beta_m  * revenue_m
    """
    rev_m, rev_f = sector_revenues(params, share_m, share_f, incomes)
    female = ((1 - params.beta_f[origin]) * rev_f[origin]
              + (1 - params.beta_m[origin]) * rev_m[origin])
    male = (params.beta_f[origin] * rev_f[origin]
            + params.beta_m[origin] * rev_m[origin])
    return float(female), float(male)


def labor_demand_ratio(origin: int, params: EconomyParams, equilibrium) -> float:
    """Relative labor demand L_f/L_m at given aggregates and relative wage.

    Female labor income over male labor income, deflated by the wage ratio.
    Decreasing in w_f/w_m both directly and through the income composition.
    """
    female, male = sector_labor_incomes(
        origin, params, equilibrium.share_m, equilibrium.share_f, equilibrium.income
    )
    if male <= 0:
        raise DegenerateEconomyError(
            "male labor income is zero (all-beta-zero economy); demand ratio undefined"
        )
    wage_ratio = equilibrium.wage_f[origin] / equilibrium.wage_m[origin]
    return (female / male) / wage_ratio


class PriceBlock(NamedTuple):
    """Log sector indices and log ideal index per destination."""

    log_price_m: np.ndarray
    log_price_f: np.ndarray
    log_price_ideal: np.ndarray


def price_indices(params: EconomyParams, log_wage_m, log_wage_f) -> PriceBlock:
    """All destination price indices from log wages, fully vectorized."""
    lc_m, lc_f = unit_cost_logs(params, log_wage_m, log_wage_f)
    one_minus_sigma = 1.0 - params.sigma

    def ces(lc):
        a = one_minus_sigma * (np.log(params.tau) + lc[:, None])
        amax = a.max(axis=0)
        return (amax + np.log(np.exp(a - amax).sum(axis=0))) / one_minus_sigma

    lp_m = ces(lc_m)
    lp_f = ces(lc_f)
    alpha = params.alpha
    log_a = -(alpha * np.log(alpha) + (1 - alpha) * np.log1p(-alpha))
    return PriceBlock(lp_m, lp_f, log_a + alpha * lp_m + (1 - alpha) * lp_f)
