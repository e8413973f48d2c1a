"""Synthetic region x industry x year panels generated from the model.

The industry dimension replicates the two-sector world economy across
industry blocks: each industry is its own small world (home regions plus
foreign destinations) whose cost shares put it somewhere on the
female-intensity spectrum. Home regions load differently on industries
(their region-industry affinities), which is what gives the shift-share
design its cross-region variation. Foreign demand follows exogenous GDP
paths: each year, destination endowments are set proportional to GDP (in
bundle units at base-year prices) and every industry economy is re-solved.

The observable panel is four frames: employment counts by region, industry,
year, and gender; industry exports by destination and year in USD;
destination GDP in USD; and two regional demographic controls.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import pandas as pd

from .errors import ParameterError, PanelFormatError, SimulationError
from .params import EconomyParams
from .solver import ConvergenceError, Numeraire, SolverOptions, solve

EMPLOYMENT_COLUMNS = ["region", "industry", "year", "emp_female", "emp_male"]
EXPORT_COLUMNS = ["industry", "destination", "year", "exports_usd"]
GDP_COLUMNS = ["destination", "year", "gdp_usd"]
CONTROL_COLUMNS = ["region", "year", "urban_share", "highschool_share"]

PANEL_FILES = {
    "employment": ("employment.csv", EMPLOYMENT_COLUMNS),
    "exports": ("exports.csv", EXPORT_COLUMNS),
    "gdp": ("gdp.csv", GDP_COLUMNS),
    "controls": ("controls.csv", CONTROL_COLUMNS),
}


@dataclass
class Panel:
    employment: pd.DataFrame
    exports: pd.DataFrame
    gdp: pd.DataFrame
    controls: pd.DataFrame

    def years(self) -> list:
        return sorted(self.employment["year"].unique().tolist())

    def regions(self) -> list:
        return sorted(self.employment["region"].unique().tolist())

    def industries(self) -> list:
        return sorted(self.employment["industry"].unique().tolist())

    def destinations(self) -> list:
        return sorted(self.gdp["destination"].unique().tolist())

    def validate(self) -> "Panel":
        for name, (frame, cols, keys) in {
            "employment": (self.employment, EMPLOYMENT_COLUMNS, ["region", "industry", "year"]),
            "exports": (self.exports, EXPORT_COLUMNS, ["industry", "destination", "year"]),
            "gdp": (self.gdp, GDP_COLUMNS, ["destination", "year"]),
            "controls": (self.controls, CONTROL_COLUMNS, ["region", "year"]),
        }.items():
            missing = [c for c in cols if c not in frame.columns]
            if missing:
                raise PanelFormatError(f"{name}: missing column(s) {missing}")
            dup = frame.duplicated(subset=keys)
            if dup.any():
                row = int(np.argmax(dup.values))
                raise PanelFormatError(f"{name}: duplicate key at row {row}: "
                                       f"{frame.iloc[row][keys].to_dict()}")
            _require_balanced(name, frame, keys)
        if (self.employment[["emp_female", "emp_male"]] < 0).any().any():
            raise PanelFormatError("employment: negative counts")
        if (self.exports["exports_usd"] < 0).any():
            raise PanelFormatError("exports: negative values")
        if (self.gdp["gdp_usd"] <= 0).any():
            raise PanelFormatError("gdp: non-positive values")
        for col in ("urban_share", "highschool_share"):
            if ((self.controls[col] < 0) | (self.controls[col] > 1)).any():
                raise PanelFormatError(f"controls: {col} outside [0, 1]")
        emp_years = set(self.employment["year"].unique())
        if emp_years != set(self.controls["year"].unique()):
            raise PanelFormatError("employment and controls cover different years")
        return self


def _require_balanced(name: str, frame: pd.DataFrame, keys: list) -> None:
    """Every combination of key values must be present exactly once."""
    sizes = [frame[k].nunique() for k in keys]
    expected = int(np.prod(sizes))
    if len(frame) != expected:
        counts = frame.groupby(keys[:-1], sort=True).size()
        bad = counts[counts != counts.max()]
        detail = f" (first gap near {bad.index[0]})" if len(bad) else ""
        raise PanelFormatError(
            f"{name}: unbalanced panel, {len(frame)} rows but "
            f"{expected} key combinations{detail}"
        )


def write_panel(panel: Panel, directory, header_lines=()) -> dict:
    """Write the four CSV files; returns {name: path}.

    ``header_lines`` are prepended to every file as '# ' comments, which the
    reader skips.
    """
    import os

    os.makedirs(directory, exist_ok=True)
    paths = {}
    for name, (fname, cols) in PANEL_FILES.items():
        frame = getattr(panel, name)[list(cols)]
        path = os.path.join(directory, fname)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            for line in header_lines:
                fh.write(f"# {line}\n")
            frame.to_csv(fh, index=False, lineterminator="\n")
        paths[name] = path
    return paths


def _read_csv(path, columns):
    try:
        frame = pd.read_csv(path, comment="#")
    except FileNotFoundError:
        raise PanelFormatError(f"missing panel file: {path}")
    missing = [c for c in columns if c not in frame.columns]
    if missing:
        raise PanelFormatError(f"{path}: missing column(s) {missing}")
    return frame


def read_panel(directory) -> Panel:
    """Read and validate the four panel CSVs from a directory."""
    import os

    frames = {}
    for name, (fname, cols) in PANEL_FILES.items():
        frames[name] = _read_csv(os.path.join(directory, fname), cols)
    return Panel(**frames).validate()


# --- simulation ---------------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    """Generator configuration; defaults reproduce the male-skewed benchmark.

    GDP paths follow a growth-momentum process: per-destination log growth is
    an AR(1) with persistence ``gdp_growth_persistence`` around a drift, and
    the level accumulates the growth. Under ``male_skew`` both the drift and
    the innovation volatility of a destination rise with the average
    male-intensity of the industries it is a niche market for, so
    male-intensive industries face systematically larger and more volatile
    foreign demand.
    """

    n_regions_home: int = 24
    n_industries: int = 16
    n_foreign: int = 12
    n_years: int = 8
    seed: int = 1
    start_year: int = 2009

    gdp_growth_persistence: float = 0.55    # AR(1) coefficient on growth
    gdp_volatility: float = 0.03            # innovation s.d., all destinations
    gdp_volatility_skew: float = 0.20       # extra s.d. per unit destination maleness
    gdp_drift_skew: float = 0.04            # drift per unit destination maleness
    gdp_base_log_mean: float = 1.2
    gdp_base_log_sigma: float = 0.15

    male_skew: bool = True
    female_intensity_range: tuple = (0.01, 0.75)
    intensity_gap_max: float = 0.45
    alpha_home: float = 0.42
    alpha_foreign_base: float = 0.55
    alpha_foreign_skew: float = 0.35
    niche_destinations: int = 3
    affinity_sigma: float = 1.0

    trade_elasticity: float = 3.0
    eta_home: float = 0.5
    eta_foreign: float = 1.0
    z_foreign: float = 6.0
    tau_home: float = 1.25
    tau_export_niche: float = 1.10
    tau_export_other: float = 1.60
    tau_import: float = 2.3
    tau_foreign: float = 1.45

    transfer_scale: float = 3.0             # endowment value per unit GDP (level map)
    employment_scale: float = 20_000.0      # persons per model labor unit
    usd_per_model_unit: float = 1e9

    confounded: bool = False
    confound_strength: float = 0.6

    solver_tolerance: float = 1e-12

    def validate(self) -> "SimConfig":
        for name in ("n_regions_home", "n_industries", "n_foreign", "n_years"):
            if getattr(self, name) < 2:
                raise ParameterError(f"{name} must be at least 2")
        if not (0.0 <= self.gdp_growth_persistence < 1.0):
            raise ParameterError("gdp_growth_persistence must lie in [0, 1)")
        if self.gdp_volatility < 0 or self.gdp_volatility_skew < 0:
            raise ParameterError("volatilities must be non-negative")
        lo, hi = self.female_intensity_range
        if not (0.0 < lo < hi < 1.0):
            raise ParameterError("female_intensity_range must satisfy 0 < lo < hi < 1")
        if self.niche_destinations < 1 or self.niche_destinations > self.n_foreign:
            raise ParameterError("niche_destinations must lie in [1, n_foreign]")
        for name in ("transfer_scale", "employment_scale", "usd_per_model_unit"):
            if getattr(self, name) <= 0:
                raise ParameterError(f"{name} must be positive")
        return self


@dataclass
class SimulationModels:
    """Model internals kept for invariant checks and debugging."""

    economies: list                 # per industry: baseline EconomyParams
    equilibria: list                # [industry][year] -> Equilibrium
    female_intensity: np.ndarray    # per industry
    niches: np.ndarray              # (industry, destination) bool
    gdp_paths: np.ndarray           # (destination, year), model units
    base_price_anchor: list         # per industry: baseline foreign price indices


def _industry_economy(cfg: SimConfig, fem: float, affinity: np.ndarray,
                      niche_row: np.ndarray) -> EconomyParams:
    r, d = cfg.n_regions_home, cfg.n_foreign
    n = r + d
    center = 1.0 - fem
    gap = min(cfg.intensity_gap_max, 1.9 * min(center, 1.0 - center))
    beta_m = np.full(n, min(center + gap / 2, 0.985))
    beta_f = np.full(n, max(center - gap / 2, 0.015))
    if cfg.male_skew:
        alpha_foreign = np.clip(cfg.alpha_foreign_base
                                + cfg.alpha_foreign_skew * (1.0 - fem), 0.05, 0.95)
    else:
        alpha_foreign = 0.5
    alpha = np.concatenate([np.full(r, cfg.alpha_home), np.full(d, alpha_foreign)])
    z = np.concatenate([affinity, np.full(d, cfg.z_foreign)])
    eta = np.concatenate([np.full(r, cfg.eta_home), np.full(d, cfg.eta_foreign)])
    tau = np.full((n, n), max(cfg.tau_import, cfg.tau_export_other))
    tau[:r, :r] = cfg.tau_home
    for j in range(d):
        tau[:r, r + j] = cfg.tau_export_niche if niche_row[j] else cfg.tau_export_other
        tau[r + j, :r] = cfg.tau_import
    tau[r:, r:] = cfg.tau_foreign
    np.fill_diagonal(tau, 1.0)
    # min-plus closure in logs enforces the triangle inequality
    log_tau = np.log(tau)
    for k in range(n):
        log_tau = np.minimum(log_tau, log_tau[:, [k]] + log_tau[[k], :])
    tau = np.exp(log_tau)
    np.fill_diagonal(tau, 1.0)
    return EconomyParams(
        sigma=cfg.trade_elasticity, alpha=alpha, beta_m=beta_m, beta_f=beta_f,
        nu=np.ones(n), eta=eta, z_m=z, z_f=z, tau=tau, endowment=np.zeros(n),
    ).validate()


def _gdp_paths(cfg: SimConfig, dest_maleness: np.ndarray, rng) -> np.ndarray:
    d, t_n = cfg.n_foreign, cfg.n_years
    drift = (cfg.gdp_drift_skew * dest_maleness) if cfg.male_skew else np.zeros(d)
    vol = cfg.gdp_volatility + (cfg.gdp_volatility_skew * dest_maleness
                                if cfg.male_skew else 0.0)
    growth = np.zeros((d, t_n))
    level = np.zeros((d, t_n))
    rho = cfg.gdp_growth_persistence
    for t in range(1, t_n):
        growth[:, t] = (rho * growth[:, t - 1] + (1 - rho) * drift
                        + vol * rng.standard_normal(d))
        level[:, t] = level[:, t - 1] + growth[:, t]
    base = np.exp(rng.normal(cfg.gdp_base_log_mean, cfg.gdp_base_log_sigma, d))
    return base[:, None] * np.exp(level)


def simulate_panel(cfg: SimConfig) -> Panel:
    """Generate a panel; deterministic given the config (seed included)."""
    panel, _ = simulate_panel_details(cfg)
    return panel


def simulate_panel_details(cfg: SimConfig):
    """Generate a panel plus the model internals behind it."""
    cfg.validate()
    rng = np.random.default_rng(cfg.seed)
    r_n, i_n, d_n, t_n = (cfg.n_regions_home, cfg.n_industries,
                          cfg.n_foreign, cfg.n_years)
    years = [cfg.start_year + t for t in range(t_n)]

    lo, hi = cfg.female_intensity_range
    fem = np.linspace(hi, lo, i_n)
    affinity = np.exp(rng.normal(0.0, cfg.affinity_sigma, (r_n, i_n)))
    affinity /= affinity.mean(axis=0, keepdims=True)

    niches = np.zeros((i_n, d_n), dtype=bool)
    for k in range(i_n):
        for j in range(cfg.niche_destinations):
            niches[k, (k * cfg.niche_destinations + j) % d_n] = True
    niche_counts = niches.sum(axis=0)
    dest_maleness = np.zeros(d_n)
    covered = niche_counts > 0
    dest_maleness[covered] = ((niches * (1 - fem)[:, None]).sum(axis=0)[covered]
                              / niche_counts[covered])

    gdp = _gdp_paths(cfg, dest_maleness, rng)

    # region-year controls: smooth AR(1) demographics; optionally loaded on
    # the region's contemporaneous niche-demand shocks (the confounder)
    urban_ar = np.zeros((r_n, t_n))
    school_ar = np.zeros((r_n, t_n))
    for t in range(1, t_n):
        urban_ar[:, t] = 0.7 * urban_ar[:, t - 1] + rng.normal(0, 0.25, r_n)
        school_ar[:, t] = 0.7 * school_ar[:, t - 1] + rng.normal(0, 0.25, r_n)
    confounder = np.zeros((r_n, t_n))
    if cfg.confounded:
        share0 = affinity / affinity.sum(axis=1, keepdims=True)
        dest_weight = share0 @ (niches / np.maximum(niches.sum(axis=1, keepdims=True), 1))
        dlog_gdp = np.zeros((d_n, t_n))
        dlog_gdp[:, 1:] = np.diff(np.log(gdp), axis=1)
        confounder = np.cumsum(dest_weight @ dlog_gdp, axis=1) * cfg.confound_strength

    urban = np.clip(0.55 + 0.05 * urban_ar + confounder * 0.25, 0.0, 1.0)
    school = np.clip(0.30 + 0.04 * school_ar + confounder * 0.15, 0.0, 1.0)

    economies, equilibria, anchors = [], [], []
    emp = np.zeros((r_n, i_n, t_n, 2))      # female, male (model units)
    exports = np.zeros((i_n, d_n, t_n))     # model money units
    for k in range(i_n):
        econ = _industry_economy(cfg, fem[k], affinity[:, k], niches[k])
        economies.append(econ)
        eq_by_year = []
        warm = None
        anchor = None
        for t in range(t_n):
            endow = np.zeros(r_n + d_n)
            endow[r_n:] = cfg.transfer_scale * gdp[:, t] / (anchor if anchor is not None else 1.0)
            options = SolverOptions(
                tolerance=cfg.solver_tolerance,
                initial_wages=warm,
                numeraire=Numeraire.FIX_MALE_WAGE_REGION1,
            )
            try:
                eq, _ = solve(econ.with_endowment(endow), options)
                if anchor is None:
                    # convert USD-scale GDP into bundle units at baseline prices
                    anchor = eq.price_ideal[r_n:].copy()
                    endow[r_n:] = cfg.transfer_scale * gdp[:, t] / anchor
                    eq, _ = solve(econ.with_endowment(endow), options)
            except ConvergenceError as exc:
                raise SimulationError(
                    f"industry {k}, year {years[t]}: solver failed "
                    f"(residual {exc.residual:.2e})"
                ) from exc
            warm = np.concatenate([eq.wage_m, eq.wage_f])
            eq_by_year.append(eq)
            emp[:, k, t, 0] = eq.labor_f[:r_n]
            emp[:, k, t, 1] = eq.labor_m[:r_n]
            spend_m = econ.alpha * eq.income
            spend_f = (1 - econ.alpha) * eq.income
            for j in range(d_n):
                col = r_n + j
                exports[k, j, t] = (eq.share_m[:r_n, col].sum() * spend_m[col]
                                    + eq.share_f[:r_n, col].sum() * spend_f[col])
        equilibria.append(eq_by_year)
        anchors.append(anchor)

    if cfg.confounded:
        # measurement distortion on female counts, absorbed by the controls
        emp = emp.copy()
        emp[:, :, :, 0] *= np.exp(0.08 * confounder)[:, None, :]

    emp_rows = []
    for rr in range(r_n):
        for k in range(i_n):
            for t in range(t_n):
                emp_rows.append((rr, k, years[t],
                                 emp[rr, k, t, 0] * cfg.employment_scale,
                                 emp[rr, k, t, 1] * cfg.employment_scale))
    export_rows = []
    for k in range(i_n):
        for j in range(d_n):
            for t in range(t_n):
                export_rows.append((k, j, years[t],
                                    exports[k, j, t] * cfg.usd_per_model_unit))
    gdp_rows = [(j, years[t], gdp[j, t] * cfg.usd_per_model_unit)
                for j in range(d_n) for t in range(t_n)]
    control_rows = [(rr, years[t], urban[rr, t], school[rr, t])
                    for rr in range(r_n) for t in range(t_n)]

    panel = Panel(
        employment=pd.DataFrame(emp_rows, columns=EMPLOYMENT_COLUMNS),
        exports=pd.DataFrame(export_rows, columns=EXPORT_COLUMNS),
        gdp=pd.DataFrame(gdp_rows, columns=GDP_COLUMNS),
        controls=pd.DataFrame(control_rows, columns=CONTROL_COLUMNS),
    ).validate()
    models = SimulationModels(
        economies=economies, equilibria=equilibria, female_intensity=fem,
        niches=niches, gdp_paths=gdp, base_price_anchor=anchors,
    )
    return panel, models
