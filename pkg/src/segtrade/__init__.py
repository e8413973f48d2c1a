"""Gender-segmented Armington trade laboratory.

Solves an N-region, two-sector world economy with gender-specific labor,
classifies how foreign income shocks move the female-to-male employment
ratio, generates synthetic labor and trade panels from the model, and
recovers the mechanism with a shift-share 2SLS estimator.
"""

__version__ = "0.1.0"

from .concordance import Concordance, map_code
from .core import (ideal_price_index, labor_demand_ratio, labor_supply_levels,
                   landed_price, sector_labor_incomes, sector_price_index,
                   trade_share, trade_share_matrix)
from .errors import (ConvergenceError, DegenerateEconomyError, DomainError,
                     EstimationError, InternalConsistencyError, NumericalError,
                     PanelFormatError, ParameterError, SegtradeError,
                     SimulationError, SingularDesignError, UnmappedCodeError)
from .estimator import (DesignMatrixBundle, EstimationResult, build_bundle,
                        cluster_robust_vcov, estimate_suite,
                        export_exposure_change, foreign_demand_instrument,
                        hetero_robust_vcov, shock_level_vcov, tsls,
                        within_transform)
from .montecarlo import MCConfig, MCReport, run_coverage_study
from .panel import Panel, SimConfig, read_panel, simulate_panel, write_panel
from .params import EconomyParams, dump_economy, load_economy
from .solver import (Equilibrium, Numeraire, SolveReport, SolverOptions,
                     excess_residuals, solve, walras_check)
from .statics import (ShockExperiment, ShockSignReport, Sign,
                      analytic_ratio_derivative, classify_shock_sign,
                      demand_shift_derivative, finite_difference_derivative,
                      ho_contrast, male_income, male_income_share)
