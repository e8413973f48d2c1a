"""Command-line entry point.

Subcommands: ``solve``, ``prop1-sweep``, ``simulate``, ``estimate``, ``mc``.
Every run is driven by a TOML config (strictly checked: unknown keys are
rejected) plus ``--out``, ``--seed``, and ``--jobs``. Every output file
starts with comment lines recording the tool version, the SHA-256 of the
config file, and the seed, and repeated runs with the same inputs are
byte-identical.

Exit codes: 0 success, 2 validation error, 3 convergence error,
4 estimation error.
"""

from __future__ import annotations

import argparse
import hashlib
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import __version__
from .errors import (ConvergenceError, EstimationError, PanelFormatError,
                     ParameterError, SegtradeError, SimulationError)
from .estimator import estimate_suite
from .montecarlo import MCConfig, run_coverage_study
from .panel import SimConfig, read_panel, simulate_panel, write_panel
from .params import EconomyParams, economy_from_dict
from .solver import Numeraire, SolverOptions, solve, walras_check
from .statics import classify_shock_sign

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_CONVERGENCE = 3
EXIT_ESTIMATION = 4


def _load_config(path: str) -> tuple[dict, str]:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise ParameterError(f"cannot read config {path}: {exc}")
    try:
        doc = tomllib.loads(raw.decode("utf-8"))
    except tomllib.TOMLDecodeError as exc:
        raise ParameterError(f"malformed config {path}: {exc}")
    return doc, hashlib.sha256(raw).hexdigest()


def _check_keys(table: dict, allowed: set, context: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ParameterError(f"unknown key(s) in {context}: {sorted(unknown)}")


def _require_table(doc: dict, name: str) -> dict:
    if name not in doc:
        raise ParameterError(f"config is missing the [{name}] table")
    return doc[name]


def _header_lines(config_hash: str, seed: int) -> list:
    return [f"segtrade {__version__}", f"config-sha256: {config_hash}",
            f"seed: {seed}"]


def _open_out(out_dir: str, name: str, header: list):
    os.makedirs(out_dir, exist_ok=True)
    fh = open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n")
    for line in header:
        fh.write(f"# {line}\n")
    return fh


_SOLVER_KEYS = {"tolerance", "max_iterations", "damping", "numeraire"}


def _solver_options(doc: dict) -> SolverOptions:
    table = doc.get("solver", {})
    _check_keys(table, _SOLVER_KEYS, "[solver]")
    kwargs = dict(table)
    if "numeraire" in kwargs:
        try:
            kwargs["numeraire"] = Numeraire(kwargs["numeraire"])
        except ValueError:
            raise ParameterError(
                f"unknown numeraire {kwargs['numeraire']!r}; use one of "
                f"{[n.value for n in Numeraire]}")
    return SolverOptions(**kwargs)


def cmd_solve(args) -> int:
    doc, config_hash = _load_config(args.config)
    _check_keys(doc, {"economy", "solver"}, "config")
    params = economy_from_dict(_require_table(doc, "economy"))
    options = _solver_options(doc)
    eq, report = solve(params, options)
    header = _header_lines(config_hash, args.seed)

    with _open_out(args.out, "equilibrium.csv", header) as fh:
        fh.write("region,wage_m,wage_f,income,labor_m,labor_f,"
                 "price_m,price_f,price_ideal\n")
        for o in range(eq.n_regions):
            fields = (eq.wage_m[o], eq.wage_f[o], eq.income[o], eq.labor_m[o],
                      eq.labor_f[o], eq.price_m[o], eq.price_f[o], eq.price_ideal[o])
            fh.write(str(o) + "," + ",".join(repr(float(v)) for v in fields) + "\n")
    for name, share in (("shares_m.csv", eq.share_m), ("shares_f.csv", eq.share_f)):
        with _open_out(args.out, name, header) as fh:
            fh.write("origin,dest,share\n")
            for o in range(eq.n_regions):
                for d in range(eq.n_regions):
                    fh.write(f"{o},{d},{share[o, d]!r}\n")
    with _open_out(args.out, "report.txt", header) as fh:
        # wall time stays off the file so reruns are byte-identical
        fh.write(report.render(include_wall_time=False))
        fh.write(f"numeraire: {eq.numeraire_tag}\n")
        fh.write(f"levy: {eq.levy!r}\n")
        fh.write(f"walras_check: {walras_check(params, eq):.3e}\n")
    print(f"solved {eq.n_regions}-region economy in {report.iterations} iterations "
          f"(residual {report.residual:.2e})", file=sys.stderr)
    return EXIT_OK


_SWEEP_KEYS = {"origin", "dest", "alpha_min", "alpha_max", "alpha_count",
               "tau_min", "tau_max", "tau_count", "delta"}


def _sweep_point(task):
    base_table, origin, dest, alpha_d, tau_od, delta, solver_table = task
    params = economy_from_dict(base_table)
    alpha = params.alpha.copy()
    alpha[dest] = alpha_d
    tau = params.tau.copy()
    tau[origin, dest] = tau_od
    tau[dest, origin] = tau_od
    point = replace(params, alpha=alpha, tau=tau)
    options = _solver_options({"solver": solver_table})
    try:
        point.validate()
        report = classify_shock_sign(point, origin, dest, delta, options)
    except (ParameterError, ConvergenceError) as exc:
        return (alpha_d, tau_od, None, str(exc))
    return (alpha_d, tau_od, report, "")


def cmd_prop1_sweep(args) -> int:
    doc, config_hash = _load_config(args.config)
    _check_keys(doc, {"economy", "sweep", "solver"}, "config")
    economy_table = _require_table(doc, "economy")
    economy_from_dict(economy_table)  # validate once up front
    sweep = _require_table(doc, "sweep")
    _check_keys(sweep, _SWEEP_KEYS, "[sweep]")
    missing = _SWEEP_KEYS - set(sweep)
    if missing:
        raise ParameterError(f"[sweep] is missing {sorted(missing)}")
    alphas = np.linspace(sweep["alpha_min"], sweep["alpha_max"], int(sweep["alpha_count"]))
    taus = np.linspace(sweep["tau_min"], sweep["tau_max"], int(sweep["tau_count"]))
    solver_table = doc.get("solver", {})
    tasks = [(economy_table, int(sweep["origin"]), int(sweep["dest"]),
              float(a), float(t), float(sweep["delta"]), solver_table)
             for a in alphas for t in taus]

    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            points = list(pool.map(_sweep_point, tasks, chunksize=8))
    else:
        points = [_sweep_point(t) for t in tasks]

    header = _header_lines(config_hash, args.seed)
    with _open_out(args.out, "sweep.csv", header) as fh:
        fh.write("alpha_d,tau_od,converged,xi,threshold,condition_holds,"
                 "demand_shift,analytic_derivative,predicted_sign,realized_sign\n")
        for alpha_d, tau_od, report, err in points:
            if report is None:
                fh.write(f"{alpha_d!r},{tau_od!r},false,,,,,,,\n")
                continue
            fh.write(",".join([
                repr(float(alpha_d)), repr(float(tau_od)), "true",
                repr(report.xi), repr(report.threshold),
                str(report.condition_holds).lower(),
                repr(report.demand_shift), repr(report.analytic_derivative),
                report.predicted_sign.value, report.realized_sign.value,
            ]) + "\n")
    n_ok = sum(1 for *_, rep, _err in points if rep is not None)
    print(f"sweep: {n_ok}/{len(points)} grid points converged", file=sys.stderr)
    return EXIT_OK


def cmd_simulate(args) -> int:
    doc, config_hash = _load_config(args.config)
    _check_keys(doc, {"simulate"}, "config")
    table = dict(_require_table(doc, "simulate"))
    _check_keys(table, set(SimConfig.__dataclass_fields__), "[simulate]")
    if args.seed is not None:
        table["seed"] = args.seed
    for tuple_key in ("female_intensity_range",):
        if tuple_key in table:
            table[tuple_key] = tuple(table[tuple_key])
    cfg = SimConfig(**table).validate()
    panel = simulate_panel(cfg)
    write_panel(panel, args.out, header_lines=_header_lines(config_hash, cfg.seed))
    print(f"simulated panel: {len(panel.employment)} employment rows, "
          f"{len(panel.exports)} export rows", file=sys.stderr)
    return EXIT_OK


_ESTIMATE_KEYS = {"panel_dir", "outcomes", "share_lag", "manufacturing_industries"}


def cmd_estimate(args) -> int:
    doc, config_hash = _load_config(args.config)
    _check_keys(doc, {"estimate"}, "config")
    table = _require_table(doc, "estimate")
    _check_keys(table, _ESTIMATE_KEYS, "[estimate]")
    if "panel_dir" not in table:
        raise ParameterError("[estimate] needs panel_dir")
    panel = read_panel(table["panel_dir"])
    results = estimate_suite(
        panel,
        outcomes=tuple(table.get("outcomes", ("ratio_change", "female_emp_change",
                                              "male_emp_change"))),
        share_lag=int(table.get("share_lag", 2)),
        manufacturing_industries=table.get("manufacturing_industries"),
    )
    header = _header_lines(config_hash, args.seed)
    with _open_out(args.out, "results.csv", header) as fh:
        results.to_csv(fh, index=False, lineterminator="\n")
    print(results.to_string(index=False), file=sys.stderr)
    return EXIT_OK


def cmd_mc(args) -> int:
    doc, config_hash = _load_config(args.config)
    _check_keys(doc, {"mc"}, "config")
    table = dict(_require_table(doc, "mc"))
    _check_keys(table, set(MCConfig.__dataclass_fields__), "[mc]")
    if args.seed is not None:
        table["seed"] = args.seed
    cfg = MCConfig(**table).validate()
    report = run_coverage_study(cfg, jobs=args.jobs)
    header = _header_lines(config_hash, cfg.seed)
    with _open_out(args.out, "mc_report.txt", header) as fh:
        fh.write(report.render())
    print(report.render(), end="", file=sys.stderr)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="segtrade",
        description="Gender-segmented trade model laboratory",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "solve": (cmd_solve, "solve an economy config and write the equilibrium"),
        "prop1-sweep": (cmd_prop1_sweep,
                        "classify the employment-ratio response over an "
                        "(alpha, trade-cost) grid"),
        "simulate": (cmd_simulate, "generate synthetic panel CSVs"),
        "estimate": (cmd_estimate, "run the shift-share 2SLS suite on a panel"),
        "mc": (cmd_mc, "Monte Carlo coverage study of the estimator"),
    }
    for name, (func, help_text) in specs.items():
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--config", required=True, help="TOML config file")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, default=None,
                       help="seed override (recorded in output headers)")
        p.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                       help="worker processes for sweep/mc commands")
        p.set_defaults(func=func)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None and args.command in ("solve", "prop1-sweep", "estimate"):
        args.seed = 0
    try:
        return args.func(args)
    except (ParameterError, PanelFormatError) as exc:
        print(f"validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (ConvergenceError, SimulationError) as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except EstimationError as exc:
        print(f"estimation error: {exc}", file=sys.stderr)
        return EXIT_ESTIMATION
    except SegtradeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
