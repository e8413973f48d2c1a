"""Structural parameters of the world economy.

An economy has N regions and two sectors per region: an m-sector whose
production is relatively male-intensive and an f-sector that is relatively
female-intensive. Households in each region consume a Cobb-Douglas bundle of
the two sector composites, supply male and female labor, and may receive a
transfer denominated in units of their local consumption bundle (the
``endowment`` income shifter).
"""

from __future__ import annotations

import io
import sys
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import ParameterError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

_VECTOR_FIELDS = ("alpha", "beta_m", "beta_f", "nu", "eta", "z_m", "z_f", "endowment")


@dataclass(frozen=True)
class EconomyParams:
    """All structural primitives of an N-region world economy.

    Vectors are indexed by region; ``tau[o, d]`` is the iceberg factor on
    shipments from origin ``o`` to destination ``d``.
    """

    sigma: float                 # elasticity of substitution across origin varieties
    alpha: np.ndarray            # m-good expenditure share per destination, in (0,1)
    beta_m: np.ndarray           # male cost share in the m-sector, per origin
    beta_f: np.ndarray           # male cost share in the f-sector, per origin
    nu: np.ndarray               # female labor disutility shifter, > 0
    eta: np.ndarray              # inverse labor supply elasticity, > 0
    z_m: np.ndarray              # m-sector TFP, > 0
    z_f: np.ndarray              # f-sector TFP, > 0
    tau: np.ndarray              # N x N iceberg costs, >= 1, unit diagonal
    endowment: np.ndarray = field(default=None)  # transfer in bundle units, >= 0

    def __post_init__(self):
        n = None
        for name in _VECTOR_FIELDS:
            value = getattr(self, name)
            if value is None and name == "endowment":
                value = np.zeros(len(self.alpha))
            arr = np.asarray(value, dtype=float).copy()
            if arr.ndim != 1:
                raise ParameterError(f"{name} must be a vector, got shape {arr.shape}")
            if n is None:
                n = arr.size
            elif arr.size != n:
                raise ParameterError(f"{name} has length {arr.size}, expected {n}")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        tau = np.asarray(self.tau, dtype=float).copy()
        if tau.shape != (n, n):
            raise ParameterError(f"tau must be {n}x{n}, got {tau.shape}")
        tau.setflags(write=False)
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "sigma", float(self.sigma))

    @property
    def n_regions(self) -> int:
        return self.alpha.size

    def validate(self) -> "EconomyParams":
        """Check every invariant, including the O(N^3) triangle inequality.

        Returns self so calls can be chained. Raises ParameterError naming
        the offending field.
        """
        n = self.n_regions
        if n < 1:
            raise ParameterError("economy needs at least one region")
        if not np.isfinite(self.sigma) or self.sigma <= 0:
            raise ParameterError(f"sigma must be > 0, got {self.sigma}")
        if self.sigma == 1.0:
            raise ParameterError("sigma = 1 (Cobb-Douglas variety limit) is not supported")
        for name in _VECTOR_FIELDS:
            if not np.all(np.isfinite(getattr(self, name))):
                raise ParameterError(f"{name} contains non-finite values")
        if np.any(self.alpha <= 0) or np.any(self.alpha >= 1):
            raise ParameterError("alpha must lie strictly inside (0, 1)")
        for name in ("beta_m", "beta_f"):
            b = getattr(self, name)
            if np.any(b < 0) or np.any(b > 1):
                raise ParameterError(f"{name} must lie in [0, 1]")
        if np.any(self.beta_m <= self.beta_f):
            bad = int(np.argmax(self.beta_m <= self.beta_f))
            raise ParameterError(
                f"beta_m must exceed beta_f in every region; violated at region {bad}"
            )
        for name in ("nu", "eta", "z_m", "z_f"):
            if np.any(getattr(self, name) <= 0):
                raise ParameterError(f"{name} must be strictly positive")
        if np.any(self.endowment < 0):
            raise ParameterError("endowment must be non-negative")
        if not np.all(np.isfinite(self.tau)):
            raise ParameterError("tau contains non-finite values")
        if np.any(self.tau < 1.0):
            raise ParameterError("tau must be >= 1 everywhere")
        if np.any(np.diag(self.tau) != 1.0):
            raise ParameterError("tau diagonal must be exactly 1 (self-trade is costless)")
        # triangle inequality tau[o,d] <= tau[o,k] * tau[k,d]; small float slack
        for k in range(n):
            bound = np.outer(self.tau[:, k], self.tau[k, :])
            if np.any(self.tau > bound * (1 + 1e-12)):
                o, d = np.unravel_index(np.argmax(self.tau / bound), (n, n))
                raise ParameterError(
                    f"tau violates the triangle inequality at ({o}, {d}) via {k}"
                )
        return self

    def with_endowment(self, endowment: np.ndarray) -> "EconomyParams":
        return replace(self, endowment=np.asarray(endowment, dtype=float))

    def shock_endowment(self, region: int, delta: float) -> "EconomyParams":
        """Return a copy with ``endowment[region]`` shifted by ``delta``."""
        e = self.endowment.copy()
        e[region] += delta
        return self.with_endowment(e)

    @classmethod
    def symmetric(cls, n_regions: int, sigma: float = 4.0, alpha: float = 0.5,
                  beta_m: float = 0.75, beta_f: float = 0.25, nu: float = 1.0,
                  eta: float = 1.0, z: float = 1.0, tau_off: float = 1.0,
                  endowment: float = 0.0) -> "EconomyParams":
        """Fully symmetric economy, the workhorse fixture for exactness tests."""
        ones = np.ones(n_regions)
        tau = np.full((n_regions, n_regions), float(tau_off))
        np.fill_diagonal(tau, 1.0)
        return cls(sigma=sigma, alpha=alpha * ones, beta_m=beta_m * ones,
                   beta_f=beta_f * ones, nu=nu * ones, eta=eta * ones,
                   z_m=z * ones, z_f=z * ones, tau=tau, endowment=endowment * ones)


# --- config file round trip -------------------------------------------------
#
# Economies are stored as a TOML table:
#
#   [economy]
#   sigma = 4.0
#   alpha = [0.5, 0.5]
#   beta_m = [0.75, 0.75]
#   beta_f = [0.25, 0.25]
#   nu = [1.0, 1.0]
#   eta = [1.0, 1.0]
#   z_m = [1.0, 1.0]
#   z_f = [1.0, 1.0]
#   endowment = [0.0, 0.0]
#   tau = [[1.0, 1.2], [1.2, 1.0]]

_ECONOMY_KEYS = {"sigma", "tau", *_VECTOR_FIELDS}


def economy_from_dict(table: dict) -> EconomyParams:
    unknown = set(table) - _ECONOMY_KEYS
    if unknown:
        raise ParameterError(f"unknown economy key(s): {sorted(unknown)}")
    missing = _ECONOMY_KEYS - set(table) - {"endowment"}
    if missing:
        raise ParameterError(f"missing economy key(s): {sorted(missing)}")
    return EconomyParams(**table).validate()


def load_economy(path) -> EconomyParams:
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    if "economy" not in doc:
        raise ParameterError("config file has no [economy] table")
    return economy_from_dict(doc["economy"])


def _toml_value(value) -> str:
    if isinstance(value, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_toml_value(v) for v in value) + "]"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return repr(value)


def dump_economy(params: EconomyParams, path=None) -> str:
    """Serialize to TOML text; write to ``path`` when given."""
    out = io.StringIO()
    out.write("[economy]\n")
    out.write(f"sigma = {_toml_value(params.sigma)}\n")
    for name in _VECTOR_FIELDS:
        out.write(f"{name} = {_toml_value(list(getattr(params, name)))}\n")
    out.write("tau = [\n")
    for row in params.tau:
        out.write(f"    {_toml_value(list(row))},\n")
    out.write("]\n")
    text = out.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
