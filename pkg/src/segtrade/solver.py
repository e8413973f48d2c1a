"""Equilibrium solver for the two-sector gender-segmented world economy.

Given wages, everything else is closed form: prices, labor supplies, incomes,
trade shares, and the demand-side labor incomes implied by destination
spending. An equilibrium is a wage vector at which demand-side labor income
equals supply-side labor income for every (region, gender), up to a
numeraire.

Transfer closure. Endowment income enters the budget as P_d * e_d, which is
purchasing power not backed by production. Summing the labor-income equations
against the budget identities shows that the raw system only balances when
sum_d P_d e_d = 0, so positive endowments would make the equations globally
infeasible. We close the system with a uniform levy on world labor income
that finances the transfers:

    t = sum_d P_d e_d / sum_o (L_o,m w_o,m + L_o,f w_o,f)
    Y_d = (1 - t) * (L_d,m w_d,m + L_d,f w_d,f) + P_d e_d

World spending then equals world factor income for any wage vector, the
system is exactly solvable, and with zero endowments the levy vanishes and
the equations reduce to the undistorted ones. Because the levy scales every
destination's spending by a common factor, it leaves relative labor demand
(and hence the female-to-male ratio mechanics) unchanged to first order in
the transfer share.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from enum import Enum
from typing import NamedTuple, Optional

import numpy as np

from . import core
from .errors import ConvergenceError, NumericalError, ParameterError
from .params import EconomyParams


class Numeraire(str, Enum):
    """Normalization resolving the price-level indeterminacy."""

    FIX_MALE_WAGE_REGION1 = "fix_male_wage_region1"   # w_m of region 0 equals 1
    FIX_WORLD_INCOME = "fix_world_income"             # sum of incomes equals N


@dataclass(frozen=True)
class SolverOptions:
    tolerance: float = 1e-12          # max-norm of log residuals
    max_iterations: int = 10_000
    damping: float = 0.5              # in (0, 1]
    initial_wages: Optional[np.ndarray] = None  # length 2N: male block then female
    numeraire: Numeraire = Numeraire.FIX_MALE_WAGE_REGION1

    def __post_init__(self):
        if not (0.0 < self.damping <= 1.0):
            raise ParameterError(f"damping must be in (0, 1], got {self.damping}")
        if self.tolerance <= 100 * np.finfo(float).eps:
            raise ParameterError("tolerance is below 100 * machine epsilon")
        if self.max_iterations < 1:
            raise ParameterError("max_iterations must be positive")


@dataclass(frozen=True)
class SolveReport:
    iterations: int
    residual: float
    converged: bool
    wall_time_s: float

    def render(self, include_wall_time: bool = True) -> str:
        lines = [
            f"converged: {str(self.converged).lower()}",
            f"iterations: {self.iterations}",
            f"residual: {self.residual:.3e}",
        ]
        if include_wall_time:
            lines.append(f"wall_time_s: {self.wall_time_s:.3f}")
        return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Equilibrium:
    """Solved objects; shares are (origin, destination) with unit column sums."""

    wage_m: np.ndarray
    wage_f: np.ndarray
    income: np.ndarray
    labor_m: np.ndarray
    labor_f: np.ndarray
    price_m: np.ndarray
    price_f: np.ndarray
    price_ideal: np.ndarray
    share_m: np.ndarray
    share_f: np.ndarray
    levy: float
    numeraire_tag: str

    @property
    def n_regions(self) -> int:
        return self.wage_m.size

    @property
    def employment_ratio(self) -> np.ndarray:
        return self.labor_f / self.labor_m

    @property
    def wage_ratio(self) -> np.ndarray:
        return self.wage_f / self.wage_m


class _State(NamedTuple):
    residuals: np.ndarray      # length 2N: male block, then female block
    log_price_m: np.ndarray
    log_price_f: np.ndarray
    log_price_ideal: np.ndarray
    labor_m: np.ndarray
    labor_f: np.ndarray
    income: np.ndarray
    share_m: np.ndarray
    share_f: np.ndarray
    demand_income_m: np.ndarray
    demand_income_f: np.ndarray
    levy: float


def _evaluate(params: EconomyParams, log_wage_m, log_wage_f) -> _State:
    prices = core.price_indices(params, log_wage_m, log_wage_f)
    labor_m = np.exp((log_wage_m - prices.log_price_ideal) / params.eta)
    labor_f = np.exp((log_wage_f - np.log(params.nu) - prices.log_price_ideal) / params.eta)
    supply_m = labor_m * np.exp(log_wage_m)
    supply_f = labor_f * np.exp(log_wage_f)
    transfer = np.exp(prices.log_price_ideal) * params.endowment
    levy = transfer.sum() / (supply_m + supply_f).sum()
    income = (1.0 - levy) * (supply_m + supply_f) + transfer
    share_m = np.exp(core._log_share_matrix(params, log_wage_m, log_wage_f, "m"))
    share_f = np.exp(core._log_share_matrix(params, log_wage_m, log_wage_f, "f"))
    rev_m, rev_f = core.sector_revenues(params, share_m, share_f, income)
    demand_f = (1 - params.beta_f) * rev_f + (1 - params.beta_m) * rev_m
    demand_m = params.beta_f * rev_f + params.beta_m * rev_m
    with np.errstate(divide="ignore", invalid="ignore"):
        res = np.concatenate([
            np.log(demand_m) - np.log(supply_m),
            np.log(demand_f) - np.log(supply_f),
        ])
    if not np.all(np.isfinite(res)):
        idx = int(np.argmax(~np.isfinite(res)))
        raise NumericalError(
            f"non-finite residual at entry {idx} "
            f"({'male' if idx < params.n_regions else 'female'} block)",
            index=idx,
        )
    return _State(res, prices.log_price_m, prices.log_price_f,
                  prices.log_price_ideal, labor_m, labor_f, income,
                  share_m, share_f, demand_m, demand_f, levy)


def excess_residuals(params: EconomyParams, wage_m, wage_f) -> np.ndarray:
    """log(demand labor income) - log(supply labor income), per (region, gender).

    Entry o is the male condition of region o; entry N + o the female one.
    Positive residual = excess demand for that labor type (its wage is too
    low); perturbing one wage above equilibrium makes its entry negative.
    """
    wage_m = np.asarray(wage_m, dtype=float)
    wage_f = np.asarray(wage_f, dtype=float)
    if np.any(wage_m <= 0) or np.any(wage_f <= 0):
        raise ParameterError("wages must be strictly positive")
    return _evaluate(params, np.log(wage_m), np.log(wage_f)).residuals


def _jacobian(params: EconomyParams, lw: np.ndarray, base: np.ndarray) -> np.ndarray:
    n2 = lw.size
    jac = np.empty((n2, n2))
    h = 1e-7
    n = n2 // 2
    for k in range(n2):
        bumped = lw.copy()
        bumped[k] += h
        jac[:, k] = (_evaluate(params, bumped[:n], bumped[n:]).residuals - base) / h
    return jac


def _newton_step(params: EconomyParams, lw: np.ndarray, state: _State) -> np.ndarray:
    n2 = lw.size
    jac = _jacobian(params, lw, state.residuals)
    # homogeneity makes the system rank deficient by one; pin the scale by
    # appending the numeraire direction as an extra least-squares row
    rows = np.vstack([jac, np.eye(n2)[:1]])
    rhs = np.concatenate([-state.residuals, [0.0]])
    step, *_ = np.linalg.lstsq(rows, rhs, rcond=None)
    norm = np.abs(step).max()
    if norm > 2.0:
        step *= 2.0 / norm
    return step


def _renormalize(lw: np.ndarray) -> np.ndarray:
    return lw - lw[0]


def solve(params: EconomyParams, options: SolverOptions | None = None):
    """Solve for equilibrium wages; returns (Equilibrium, SolveReport).

    Damped multiplicative updating in log-wage space (step scaled by the
    labor-market stiffness eta/(1+eta)) until the residual is small, then
    Newton with a finite-difference Jacobian and backtracking. Raises
    ConvergenceError carrying the best iterate when the budget is exhausted.
    """
    options = options or SolverOptions()
    params.validate()
    n = params.n_regions
    start = time.perf_counter()

    if options.initial_wages is not None:
        w0 = np.asarray(options.initial_wages, dtype=float)
        if w0.shape != (2 * n,) or np.any(w0 <= 0):
            raise ParameterError("initial_wages must be 2N positive values")
        lw = _renormalize(np.log(w0))
    else:
        lw = np.zeros(2 * n)

    stiffness = np.concatenate([params.eta, params.eta])
    stiffness = stiffness / (1.0 + stiffness)

    best_lw, best_res = lw.copy(), np.inf
    state = _evaluate(params, lw[:n], lw[n:])
    newton_mode = False
    iterations = 0
    for iterations in range(1, options.max_iterations + 1):
        rmax = float(np.abs(state.residuals).max())
        if rmax < best_res:
            best_res, best_lw = rmax, lw.copy()
        if rmax <= options.tolerance:
            break
        if not newton_mode and (rmax < 1e-3 or iterations > 400):
            newton_mode = True
        if newton_mode:
            step = _newton_step(params, lw, state)
            scale = 1.0
            for _ in range(8):
                trial = _renormalize(lw + scale * step)
                try:
                    trial_state = _evaluate(params, trial[:n], trial[n:])
                except NumericalError:
                    scale *= 0.5
                    continue
                if np.abs(trial_state.residuals).max() < rmax:
                    lw, state = trial, trial_state
                    break
                scale *= 0.5
            else:
                # Newton stalled; fall back to damped stepping for a while
                newton_mode = False
                lw = _renormalize(lw + options.damping * stiffness * state.residuals)
                state = _evaluate(params, lw[:n], lw[n:])
        else:
            lw = _renormalize(lw + options.damping * stiffness * state.residuals)
            state = _evaluate(params, lw[:n], lw[n:])
    else:
        raise ConvergenceError(
            f"no convergence after {options.max_iterations} iterations "
            f"(best residual {best_res:.3e})",
            best_wages=np.exp(best_lw), residual=best_res,
            iterations=options.max_iterations,
        )

    # numeraire rescaling: all equilibrium objects are homogeneous of degree
    # one (values) or zero (shares, labor), so a common wage shift suffices
    if options.numeraire is Numeraire.FIX_WORLD_INCOME:
        shift = np.log(float(n) / state.income.sum())
        lw = lw + shift
        state = _evaluate(params, lw[:n], lw[n:])

    wall = time.perf_counter() - start
    eq = Equilibrium(
        wage_m=np.exp(lw[:n]),
        wage_f=np.exp(lw[n:]),
        income=state.income,
        labor_m=state.labor_m,
        labor_f=state.labor_f,
        price_m=np.exp(state.log_price_m),
        price_f=np.exp(state.log_price_f),
        price_ideal=np.exp(state.log_price_ideal),
        share_m=state.share_m,
        share_f=state.share_f,
        levy=float(state.levy),
        numeraire_tag=options.numeraire.value,
    )
    report = SolveReport(iterations=iterations, residual=float(np.abs(state.residuals).max()),
                         converged=True, wall_time_s=wall)
    return eq, report


def walras_check(params: EconomyParams, eq: Equilibrium) -> float:
    """Max relative gap between regional spending and regional receipts.

    Receipts are after-levy factor income from sales plus the transfer;
    spending is Y. Zero at an exact equilibrium, strictly positive away from
    one.
    """
    rev_m, rev_f = core.sector_revenues(params, eq.share_m, eq.share_f, eq.income)
    demand_f = (1 - params.beta_f) * rev_f + (1 - params.beta_m) * rev_m
    demand_m = params.beta_f * rev_f + params.beta_m * rev_m
    receipts = (1.0 - eq.levy) * (demand_m + demand_f) + eq.price_ideal * params.endowment
    return float(np.max(np.abs(receipts - eq.income) / eq.income))
