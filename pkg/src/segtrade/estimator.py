"""Shift-share exposure construction and fixed-effects 2SLS estimation.

Exposure to export growth is the lagged-employment-share weighted average of
industry export changes; the instrument replaces each industry's realized
export change with the lagged-destination-share weighted average of
destination GDP changes. Estimation is exact two-stage least squares on
within-transformed data with region-clustered and exposure-robust
(shock-level) standard errors.

Timing. Survey years need not be evenly spaced; a change always means "to
the next available year". One observation is a (region, transition) pair.
Shares are taken ``share_lag`` surveys before the transition start (default
2, which on an eight-year panel yields the 120-row design: differencing
costs one year and lagging the shares two more).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from .errors import EstimationError, ParameterError, SingularDesignError
from .panel import Panel

BILLION = 1e9

OUTCOMES = ("ratio_change", "female_emp_change", "male_emp_change")


class _PanelArrays:
    """Dense array view of a validated panel, keyed by sorted ids."""

    def __init__(self, panel: Panel):
        self.years = panel.years()
        self.regions = panel.regions()
        self.industries = panel.industries()
        self.destinations = panel.destinations()
        emp = panel.employment.pivot_table(
            index=["region", "industry"], columns="year",
            values=["emp_female", "emp_male"], sort=True)
        shape = (len(self.regions), len(self.industries), len(self.years))
        self.emp_f = emp["emp_female"].to_numpy().reshape(shape)
        self.emp_m = emp["emp_male"].to_numpy().reshape(shape)
        exp = panel.exports.pivot_table(
            index=["industry", "destination"], columns="year",
            values="exports_usd", sort=True)
        self.exports = exp.to_numpy().reshape(
            (len(self.industries), len(self.destinations), len(self.years)))
        self.gdp = (panel.gdp.pivot_table(index="destination", columns="year",
                                          values="gdp_usd", sort=True)
                    .to_numpy())
        ctl = panel.controls.pivot_table(index="region", columns="year",
                                         values=["urban_share", "highschool_share"],
                                         sort=True)
        self.urban = ctl["urban_share"].to_numpy()
        self.school = ctl["highschool_share"].to_numpy()

    def employment_shares(self, region_idx: int, year_idx: int) -> np.ndarray:
        emp = self.emp_f[region_idx, :, year_idx] + self.emp_m[region_idx, :, year_idx]
        total = emp.sum()
        if total <= 0:
            raise EstimationError(
                f"region {self.regions[region_idx]} has zero employment in "
                f"{self.years[year_idx]}; exposure undefined"
            )
        return emp / total


def _year_index(arrays: _PanelArrays, year) -> int:
    try:
        return arrays.years.index(year)
    except ValueError:
        raise EstimationError(f"year {year} not present in the panel")


def export_exposure_change(panel: Panel, region, t) -> float:
    """Exposure to export growth over the transition ending at year ``t``.

    Lagged-employment-share weighted industry export changes, in billions of
    USD. Shares come from the previous available survey year.
    """
    arrays = _PanelArrays(panel)
    j = _year_index(arrays, t)
    if j == 0:
        raise EstimationError(f"no year precedes {t}; change undefined")
    r = arrays.regions.index(region)
    shares = arrays.employment_shares(r, j - 1)
    industry_exports = arrays.exports.sum(axis=1)       # (industry, year)
    change = industry_exports[:, j] - industry_exports[:, j - 1]
    return float(shares @ change) / BILLION


def foreign_demand_instrument(panel: Panel, region, t) -> float:
    """Share-weighted foreign GDP growth over the transition ending at ``t``.

    Industries with zero lagged exports contribute zero: their destination
    weights are undefined, and a no-exports industry transmits no foreign
    demand. Units: billions of USD of destination GDP change.
    """
    arrays = _PanelArrays(panel)
    j = _year_index(arrays, t)
    if j == 0:
        raise EstimationError(f"no year precedes {t}; change undefined")
    r = arrays.regions.index(region)
    shares = arrays.employment_shares(r, j - 1)
    gdp_change = (arrays.gdp[:, j] - arrays.gdp[:, j - 1]) / BILLION
    total = 0.0
    for i in range(len(arrays.industries)):
        lagged = arrays.exports[i, :, j - 1]
        lagged_total = lagged.sum()
        if lagged_total <= 0:
            continue
        total += shares[i] * float((lagged / lagged_total) @ gdp_change)
    return total


@dataclass
class DesignMatrixBundle:
    """One row per (region, transition); everything the estimators need."""

    outcome: np.ndarray             # (n,)
    endogenous: np.ndarray          # (n,) exposure change, billions USD
    instrument: np.ndarray          # (n,) foreign demand exposure change
    controls: np.ndarray            # (n, k)
    control_names: list
    region_id: np.ndarray           # (n,) int codes; also the cluster ids
    time_id: np.ndarray             # (n,) transition codes
    cluster_id: np.ndarray          # (n,)
    shock_shares: np.ndarray        # (n, S) lagged share x destination-share weights
    shock_index: list               # S keys (industry, destination, transition)
    row_keys: list                  # n keys (region, transition end year)
    outcome_name: str = "ratio_change"

    @property
    def n_obs(self) -> int:
        return self.outcome.size


def build_bundle(panel: Panel, outcome: str = "ratio_change", share_lag: int = 2,
                 extra_controls: Optional[dict] = None) -> DesignMatrixBundle:
    """Assemble the estimation rows from a validated panel.

    ``outcome`` is one of ``ratio_change`` (female-to-male employment ratio),
    ``female_emp_change`` / ``male_emp_change`` (job counts), or
    ``exposure`` (the endogenous regressor itself, for self-regression
    checks). ``extra_controls`` maps names to {(region, transition_end_year):
    value} lookups, e.g. a lagged manufacturing share.
    """
    if share_lag < 0:
        raise ParameterError("share_lag must be non-negative")
    arrays = _PanelArrays(panel)
    n_years = len(arrays.years)
    if n_years < share_lag + 2:
        raise EstimationError("not enough years for the requested share lag")
    industry_exports = arrays.exports.sum(axis=1)
    gdp_change = np.diff(arrays.gdp, axis=1) / BILLION   # (dest, window)

    rows_out, rows_x, rows_z, rows_ctl = [], [], [], []
    rows_region, rows_time, row_keys = [], [], []
    shock_rows = []
    shock_index = []
    shock_pos = {}

    emp_f_tot = arrays.emp_f.sum(axis=1)     # (region, year)
    emp_m_tot = arrays.emp_m.sum(axis=1)
    ratio = emp_f_tot / emp_m_tot

    extra_controls = extra_controls or {}
    windows = range(share_lag, n_years - 1)   # window j: years[j] -> years[j+1]
    for j in windows:
        base = j - share_lag
        for r in range(len(arrays.regions)):
            shares = arrays.employment_shares(r, base)
            x_change = industry_exports[:, j + 1] - industry_exports[:, j]
            exposure = float(shares @ x_change) / BILLION
            instrument = 0.0
            weights = {}
            for i in range(len(arrays.industries)):
                lagged = arrays.exports[i, :, base]
                lagged_total = lagged.sum()
                if lagged_total <= 0:
                    continue
                dest_w = lagged / lagged_total
                instrument += shares[i] * float(dest_w @ gdp_change[:, j])
                for d in range(len(arrays.destinations)):
                    w = shares[i] * dest_w[d]
                    if w > 0:
                        weights[(i, d, j)] = w
            if outcome == "ratio_change":
                y = ratio[r, j + 1] - ratio[r, j]
            elif outcome == "female_emp_change":
                y = emp_f_tot[r, j + 1] - emp_f_tot[r, j]
            elif outcome == "male_emp_change":
                y = emp_m_tot[r, j + 1] - emp_m_tot[r, j]
            elif outcome == "exposure":
                y = exposure
            else:
                raise ParameterError(f"unknown outcome {outcome!r}")
            ctl = [arrays.urban[r, j + 1] - arrays.urban[r, j],
                   arrays.school[r, j + 1] - arrays.school[r, j]]
            for name in extra_controls:
                ctl.append(extra_controls[name][(arrays.regions[r], arrays.years[j + 1])])
            rows_out.append(y)
            rows_x.append(exposure)
            rows_z.append(instrument)
            rows_ctl.append(ctl)
            rows_region.append(r)
            rows_time.append(j)
            row_keys.append((arrays.regions[r], arrays.years[j + 1]))
            shock_rows.append(weights)

    for weights in shock_rows:
        for key in weights:
            if key not in shock_pos:
                shock_pos[key] = len(shock_index)
                shock_index.append(key)
    shock_shares = np.zeros((len(shock_rows), len(shock_index)))
    for row, weights in enumerate(shock_rows):
        for key, w in weights.items():
            shock_shares[row, shock_pos[key]] = w

    control_names = ["d_urban_share", "d_highschool_share", *extra_controls]
    return DesignMatrixBundle(
        outcome=np.asarray(rows_out, dtype=float),
        endogenous=np.asarray(rows_x, dtype=float),
        instrument=np.asarray(rows_z, dtype=float),
        controls=np.asarray(rows_ctl, dtype=float).reshape(len(rows_out), -1),
        control_names=control_names,
        region_id=np.asarray(rows_region, dtype=int),
        time_id=np.asarray(rows_time, dtype=int),
        cluster_id=np.asarray(rows_region, dtype=int),
        shock_shares=shock_shares,
        shock_index=shock_index,
        row_keys=row_keys,
        outcome_name=outcome,
    )


def within_transform(matrix: np.ndarray, groups: list, tol: float = 1e-12,
                     max_sweeps: int = 10_000):
    """Iterated group demeaning until the largest cell change is below tol.

    ``groups`` is a list of integer id vectors (one per fixed-effect
    dimension). Groups with a single observation are dropped (with a
    warning): their outcome is absorbed entirely by their own effect.
    Returns (transformed matrix, boolean keep mask).
    """
    x = np.array(matrix, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    keep = np.ones(x.shape[0], dtype=bool)
    # dropping a singleton can orphan a row in another dimension; iterate
    while True:
        dropped = False
        for ids in groups:
            ids = np.asarray(ids)
            counts = np.bincount(ids[keep], minlength=ids.max() + 1)
            singleton = keep & (counts[ids] == 1)
            if singleton.any():
                warnings.warn(f"dropping {int(singleton.sum())} singleton-group "
                              "row(s) from the within transform")
                keep &= ~singleton
                dropped = True
        if not dropped:
            break
    x = x[keep]
    ids_kept = [np.asarray(g)[keep] for g in groups]
    for _ in range(max_sweeps):
        delta = 0.0
        for ids in ids_kept:
            means = np.zeros((ids.max() + 1, x.shape[1]))
            np.add.at(means, ids, x)
            counts = np.bincount(ids, minlength=ids.max() + 1)[:, None]
            with np.errstate(invalid="ignore"):
                means = means / counts
            adjust = means[ids]
            x = x - adjust
            delta = max(delta, float(np.abs(adjust).max(initial=0.0)))
        if delta < tol:
            break
    return x, keep


@dataclass
class EstimationResult:
    beta_hat: float
    gamma_hat: float
    se_cluster: float
    se_aae: float
    first_stage_f: float
    n_obs: int
    n_params: int
    spec: str
    outcome_name: str
    first_stage_residuals: np.ndarray
    second_stage_residuals: np.ndarray
    shock_scores: Optional[np.ndarray] = None   # exposure-robust scores, for audit

    def tstat(self, which: str = "cluster") -> float:
        se = self.se_cluster if which == "cluster" else self.se_aae
        return self.beta_hat / se if se > 0 else np.inf


_SPEC_FE = {"none": (), "fe": ("time", "region"), "fe_controls": ("time", "region")}


def _demeaned_design(bundle: DesignMatrixBundle, spec: str):
    if spec not in _SPEC_FE:
        raise ParameterError(f"unknown spec {spec!r}; use one of {sorted(_SPEC_FE)}")
    use_controls = spec == "fe_controls"
    cols = [bundle.outcome, bundle.endogenous, bundle.instrument]
    names = ["outcome", "exposure", "instrument"]
    if use_controls:
        for k in range(bundle.controls.shape[1]):
            cols.append(bundle.controls[:, k])
            names.append(bundle.control_names[k])
    stacked = np.column_stack(cols)
    if spec == "none":
        # plain intercept: grand-mean demeaning is exactly the constant fit
        transformed = stacked - stacked.mean(axis=0, keepdims=True)
        keep = np.ones(stacked.shape[0], dtype=bool)
        absorbed = 1
    else:
        groups = [bundle.time_id, bundle.region_id]
        transformed, keep = within_transform(stacked, groups)
        absorbed = (len(np.unique(bundle.time_id[keep]))
                    + len(np.unique(bundle.region_id[keep])) - 1)
    return transformed, names, keep, absorbed


def _rank_check(z: np.ndarray, x: np.ndarray, names: list):
    a = z.T @ x
    if np.linalg.matrix_rank(a, tol=1e-10 * max(1.0, float(np.abs(a).max()))) < a.shape[0]:
        # name columns whose demeaned variation is (near) zero first
        degen = [names[i] for i in range(x.shape[1])
                 if float(np.std(x[:, i])) < 1e-14 or float(np.std(z[:, i])) < 1e-14]
        raise SingularDesignError(
            "singular design: instrument/regressor cross-moment is rank deficient"
            + (f"; degenerate columns: {degen}" if degen else ""),
            columns=degen or names,
        )
    return a


def _cluster_meat(z: np.ndarray, resid: np.ndarray, cluster_ids: np.ndarray):
    meat = np.zeros((z.shape[1], z.shape[1]))
    for cid in np.unique(cluster_ids):
        score = (z[cluster_ids == cid] * resid[cluster_ids == cid, None]).sum(axis=0)
        meat += np.outer(score, score)
    return meat


def _small_sample(n: int, k: int, g: int) -> float:
    return g / (g - 1) * (n - 1) / (n - k)


def cluster_robust_vcov(z: np.ndarray, x: np.ndarray, resid: np.ndarray,
                        cluster_ids: np.ndarray, n_params: int) -> np.ndarray:
    """Cluster sandwich for the IV moment E[z (y - x b)] = 0.

    Applies the G/(G-1) * (n-1)/(n-k) small-sample factor. Requires at least
    two clusters.
    """
    groups = np.unique(cluster_ids)
    if groups.size < 2:
        raise EstimationError("cluster-robust variance needs at least 2 clusters")
    a = z.T @ x
    a_inv = np.linalg.inv(a)
    meat = _cluster_meat(z, resid, cluster_ids)
    factor = _small_sample(len(resid), n_params, groups.size)
    return factor * a_inv @ meat @ a_inv.T


def hetero_robust_vcov(z: np.ndarray, x: np.ndarray, resid: np.ndarray,
                       n_params: int) -> np.ndarray:
    """HC1-style sandwich (observation-level scores, n/(n-k) factor)."""
    a_inv = np.linalg.inv(z.T @ x)
    meat = (z * resid[:, None]).T @ (z * resid[:, None])
    n = len(resid)
    return n / (n - n_params) * a_inv @ meat @ a_inv.T


def shock_level_vcov(z: np.ndarray, x: np.ndarray, resid: np.ndarray,
                     shock_shares: np.ndarray, n_params: int):
    """Exposure-robust sandwich: scores aggregated to the shock level.

    Observation scores z_i * u_i are pooled across rows in proportion to
    their lagged shock shares, then a sandwich is applied at the shock level.
    Regions with identical share rows are thereby fully pooled; shares that
    put each row on its own shock reproduce shock-clustered errors exactly.
    Returns (vcov, shock scores) so the per-shock residual contributions can
    be audited.
    """
    active = shock_shares.sum(axis=0) > 0
    n_shocks = int(active.sum())
    if n_shocks <= n_params:
        raise EstimationError(
            f"only {n_shocks} active shocks for {n_params} parameters"
        )
    scores = shock_shares[:, active].T @ (z * resid[:, None])   # (S, k)
    a_inv = np.linalg.inv(z.T @ x)
    meat = scores.T @ scores
    factor = _small_sample(len(resid), n_params, n_shocks)
    return factor * a_inv @ meat @ a_inv.T, scores


def tsls(bundle: DesignMatrixBundle, spec: str = "fe_controls") -> EstimationResult:
    """Exact just-identified 2SLS on the within-transformed design.

    First stage regresses the exposure change on the instrument and
    controls; the reported F is the heteroskedasticity-robust Wald statistic
    on the excluded instrument. Second stage solves the IV normal equations
    directly, which collapses to OLS when the instrument equals the
    regressor.
    """
    transformed, names, keep, absorbed = _demeaned_design(bundle, spec)
    y = transformed[:, 0]
    x_endog = transformed[:, 1]
    z_excl = transformed[:, 2]
    controls = transformed[:, 3:]
    n = y.size
    n_params = 1 + controls.shape[1] + absorbed
    if n <= n_params:
        raise EstimationError(f"{n} rows cannot identify {n_params} parameters")

    x_mat = np.column_stack([x_endog, controls])
    z_mat = np.column_stack([z_excl, controls])
    col_names = ["exposure"] + names[3:]
    _rank_check(z_mat, x_mat, col_names)

    # first stage
    zz = z_mat.T @ z_mat
    try:
        first_coefs = np.linalg.solve(zz, z_mat.T @ x_endog)
    except np.linalg.LinAlgError:
        raise SingularDesignError("first-stage design is singular", columns=col_names)
    gamma = float(first_coefs[0])
    u1 = x_endog - z_mat @ first_coefs
    zz_inv = np.linalg.inv(zz)
    meat1 = (z_mat * u1[:, None]).T @ (z_mat * u1[:, None])
    v1 = n / (n - n_params) * zz_inv @ meat1 @ zz_inv
    var_gamma = float(v1[0, 0])
    first_stage_f = gamma ** 2 / var_gamma if var_gamma > 0 else np.inf

    # second stage via the IV normal equations
    a = z_mat.T @ x_mat
    coefs = np.linalg.solve(a, z_mat.T @ y)
    beta = float(coefs[0])
    u2 = y - x_mat @ coefs

    clusters = bundle.cluster_id[keep]
    v_cluster = cluster_robust_vcov(z_mat, x_mat, u2, clusters, n_params)
    se_cluster = float(np.sqrt(v_cluster[0, 0]))
    try:
        v_shock, scores = shock_level_vcov(z_mat, x_mat, u2,
                                           bundle.shock_shares[keep], n_params)
        se_aae = float(np.sqrt(v_shock[0, 0]))
    except EstimationError:
        se_aae, scores = float("nan"), None

    return EstimationResult(
        beta_hat=beta, gamma_hat=gamma, se_cluster=se_cluster, se_aae=se_aae,
        first_stage_f=float(first_stage_f), n_obs=n, n_params=n_params,
        spec=spec, outcome_name=bundle.outcome_name,
        first_stage_residuals=u1, second_stage_residuals=u2,
        shock_scores=scores,
    )


SUITE_SPECS = ("none", "fe", "fe_controls")


def manufacturing_share_control(panel: Panel, manufacturing_industries,
                                share_lag: int = 2) -> dict:
    """Lagged manufacturing employment share, keyed like bundle rows."""
    arrays = _PanelArrays(panel)
    man = [arrays.industries.index(i) for i in manufacturing_industries]
    lookup = {}
    for j in range(share_lag, len(arrays.years) - 1):
        base = j - share_lag
        for r, region in enumerate(arrays.regions):
            shares = arrays.employment_shares(r, base)
            lookup[(region, arrays.years[j + 1])] = float(shares[man].sum())
    return lookup


def estimate_suite(panel: Panel, outcomes=OUTCOMES, share_lag: int = 2,
                   manufacturing_industries=None) -> pd.DataFrame:
    """Run the three-column specification layout for each outcome.

    Columns (1) intercept only, (2) time and region fixed effects, (3) fixed
    effects plus demographic controls; with ``manufacturing_industries`` a
    fourth column adds the lagged manufacturing employment share to (3).
    """
    records = []
    results = {}
    for outcome in outcomes:
        bundle = build_bundle(panel, outcome=outcome, share_lag=share_lag)
        for spec in SUITE_SPECS:
            res = tsls(bundle, spec=spec)
            results[(outcome, spec)] = res
            records.append((outcome, spec, res.beta_hat, res.se_cluster,
                            res.se_aae, res.first_stage_f, res.n_obs))
        if manufacturing_industries:
            control = manufacturing_share_control(panel, manufacturing_industries,
                                                  share_lag)
            bundle4 = build_bundle(panel, outcome=outcome, share_lag=share_lag,
                                   extra_controls={"lagged_manufacturing_share": control})
            res = tsls(bundle4, spec="fe_controls")
            results[(outcome, "fe_controls_manufacturing")] = res
            records.append((outcome, "fe_controls_manufacturing", res.beta_hat,
                            res.se_cluster, res.se_aae, res.first_stage_f, res.n_obs))
    table = pd.DataFrame(records, columns=["outcome", "spec", "beta", "se_cluster",
                                           "se_aae", "f_stat", "n"])
    table.attrs["results"] = results
    return table
