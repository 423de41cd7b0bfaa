import argparse
import json
import logging
import math
import sys

import numpy as np
import pandas as pd
from joblib import Parallel, delayed

from chebyprod import analytic, conic, generic_bounds, portfolio, primal_oracle
from chebyprod.config_loader import ConfigLoader, SolverSettings
from chebyprod.errors import (ChebyprodError, GridInfeasibleError, InfeasibleSpecError,
                              InvalidSpecError, SolverError)
from chebyprod.events import Event
from chebyprod.logging_facility import LoggingFacility
from chebyprod.moments import MomentSpec, covariance_eigenvalues, validate
from chebyprod.product_bounds import LEFT, RIGHT, BoundQuery, left_bound, product_bound

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_SOLVER = 4
EXIT_GAP = 5

SWEEP_BOUNDS = ("exact_left", "exact_right", "relaxed_right", "mo",
                "sum_leq", "sum_geq", "min_leq", "min_geq", "max_leq", "max_geq")
DEFAULT_SWEEP = "exact_left,exact_right,relaxed_right,mo"
DEFAULT_RETURNS = "data/synthetic_returns.csv"


def _common_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=str, default=None,
                        help="JSON configuration file (default: ./config/chebyprod.json when present)")
    common.add_argument("--output", type=str, default=None, help="Output file (default: standard output)")
    common.add_argument("--notify", action="store_true", help="Post the result summary to Slack")
    common.add_argument("--verbose", action="store_true", help="Show solver progress")
    return common


def _spec_parser() -> argparse.ArgumentParser:
    spec = argparse.ArgumentParser(add_help=False)
    spec.add_argument("--T", type=int, required=True, help="Number of random variables")
    spec.add_argument("--mu", type=float, required=True, help="Common mean")
    spec.add_argument("--sigma", type=float, required=True, help="Common standard deviation")
    spec.add_argument("--rho", type=float, default=0.0, help="Common pairwise correlation (default: 0)")
    return spec


def build_parser() -> argparse.ArgumentParser:
    common, spec = _common_parser(), _spec_parser()
    parser = argparse.ArgumentParser(
        prog="chebyprod",
        description="Worst-case (Chebyshev) bounds for products, sums, minima and maxima of "
                    "non-negative random variables with symmetric moment data.")
    commands = parser.add_subparsers(dest="command", required=True)

    bound = commands.add_parser("bound", parents=[common, spec], help="Left or right product-tail bound")
    bound.add_argument("--side", choices=(LEFT, RIGHT), required=True)
    bound.add_argument("--gamma", type=float, required=True)
    bound.add_argument("--relaxed", action="store_true",
                       help="Use the relaxed ambiguity set (closed form on the right)")
    bound.add_argument("--no-shortcuts", action="store_true", help="Always solve the semi-infinite program")

    sweep = commands.add_parser("sweep", parents=[common, spec], help="Bounds on a grid of thresholds")
    sweep.add_argument("--gamma-min", type=float, required=True)
    sweep.add_argument("--gamma-max", type=float, required=True)
    sweep.add_argument("--points", type=int, default=20)
    sweep.add_argument("--spacing", choices=("geometric", "linear"), default="geometric")
    sweep.add_argument("--bounds", type=str, default=DEFAULT_SWEEP,
                       help=f"Comma-separated columns from {', '.join(SWEEP_BOUNDS)}")

    generic = commands.add_parser("generic", parents=[common, spec], help="Sum, min or max event bound")
    generic.add_argument("--event", type=str, required=True, help="e.g. min_leq, max_geq, sum_geq")
    generic.add_argument("--gamma", type=float, required=True)

    verify = commands.add_parser("verify", parents=[common, spec], help="Primal-dual sandwich of a product bound")
    verify.add_argument("--side", choices=(LEFT, RIGHT), required=True)
    verify.add_argument("--gamma", type=float, required=True)
    verify.add_argument("--grid-points", type=int, default=None)
    verify.add_argument("--tol", type=float, default=None, help="Largest accepted dual-primal gap")

    export = commands.add_parser("export-sdp", parents=[common, spec], help="Write the conic formulation")
    export.add_argument("--side", choices=(LEFT, RIGHT), required=True)
    export.add_argument("--gamma", type=float, required=True)

    folio = commands.add_parser("portfolio", parents=[common], help="Worst-case VaR along the efficient frontier")
    folio.add_argument("--returns", type=str, default=DEFAULT_RETURNS)
    folio.add_argument("--horizon", type=int, required=True)
    folio.add_argument("--epsilon", type=float, required=True)
    folio.add_argument("--points", type=int, default=11)
    folio.add_argument("--tau-max", type=float, default=None)
    folio.add_argument("--rho", type=float, default=0.0)

    commands.add_parser("validate", parents=[common, spec], help="Check the moment data")
    return parser


def _spec(args) -> MomentSpec:
    return MomentSpec(args.T, args.mu, args.sigma, args.rho)


def _resolved(args, config: dict) -> dict:
    echo = {k: v for k, v in vars(args).items() if k not in ("notify", "verbose")}
    settings = {k: v for k, v in config.items() if k != "SLACK_WEBHOOK_URL"}
    settings["SLACK_ENABLED"] = bool(config.get("SLACK_WEBHOOK_URL"))
    echo["settings"] = settings
    return echo


class Output:
    def __init__(self, path: str = None):
        self.path = path

    def write(self, text: str) -> None:
        if self.path is None:
            sys.stdout.write(text)
            return
        with open(self.path, "w") as file:
            file.write(text)

    def json(self, command: str, config: dict, result: dict) -> None:
        document = {"schema_version": SCHEMA_VERSION, "command": command, "config": config, "result": result}
        self.write(json.dumps(document, indent=2) + "\n")

    def csv(self, config: dict, frame: pd.DataFrame) -> None:
        header = f"# config: {json.dumps(config, sort_keys=True)}\n"
        self.write(header + frame.to_csv(index=False))


def cmd_bound(args, settings: SolverSettings) -> tuple:
    query = BoundQuery(_spec(args), args.gamma, args.side)
    if args.relaxed and args.side == RIGHT:
        closed = analytic.relaxed_right_bound(query.spec, args.gamma)
        result = {"value": closed.value, "shortcut": f"relaxed_{closed.regime}", "dual": None,
                  "diagnostics": {}}
    elif args.relaxed:
        result = left_bound(query, settings, use_shortcuts=not args.no_shortcuts,
                            gamma1_nonnegative=True).to_dict()
        result["note"] = "the relaxed left bound equals the exact left bound"
    else:
        result = product_bound(query, settings, use_shortcuts=not args.no_shortcuts).to_dict()
    result["query"] = query.to_dict()
    return result, EXIT_OK


def _sweep_cell(name: str, spec: MomentSpec, gamma: float, settings: SolverSettings) -> float:
    try:
        if name == "exact_left":
            return left_bound(BoundQuery(spec, gamma, LEFT), settings).value
        if name == "exact_right":
            return product_bound(BoundQuery(spec, gamma, RIGHT), settings).value
        if name == "relaxed_right":
            return analytic.relaxed_right_bound(spec, gamma).value
        if name == "mo":
            return analytic.mo_bound(spec, gamma).value
        if name.startswith("sum_"):
            return analytic.sum_bound(spec, gamma, name[4:]).value
        return generic_bounds.generic_bound(spec, Event.parse(name, gamma), settings).value
    except ChebyprodError as e:
        logging.warning("%s at gamma=%g failed: %s", name, gamma, e)
        return math.nan


def _sweep_row(spec: MomentSpec, gamma: float, names: list, settings: SolverSettings) -> dict:
    row = {"gamma": gamma}
    for name in names:
        row[name] = _sweep_cell(name, spec, gamma, settings)
    return row


def sweep_frame(spec: MomentSpec, gammas, names: list, settings: SolverSettings) -> pd.DataFrame:
    unknown = [n for n in names if n not in SWEEP_BOUNDS]
    if unknown:
        raise InvalidSpecError(f"Unknown sweep columns {unknown}, expected a subset of {SWEEP_BOUNDS}")
    validate(spec)
    rows = Parallel(n_jobs=max(settings.threads, 1))(
        delayed(_sweep_row)(spec, float(g), names, settings) for g in gammas)
    return pd.DataFrame(rows, columns=["gamma"] + list(names))


def gamma_grid(gamma_min: float, gamma_max: float, points: int, spacing: str) -> np.ndarray:
    if gamma_min <= 0 or gamma_max < gamma_min or points < 1:
        raise InvalidSpecError(f"Need 0 < gamma-min <= gamma-max and points >= 1, "
                               f"got {gamma_min}, {gamma_max}, {points}")
    if points == 1:
        return np.array([gamma_min])
    if spacing == "linear":
        return np.linspace(gamma_min, gamma_max, points)
    return np.geomspace(gamma_min, gamma_max, points)


def cmd_sweep(args, settings: SolverSettings) -> pd.DataFrame:
    names = [n.strip() for n in args.bounds.split(",") if n.strip()]
    gammas = gamma_grid(args.gamma_min, args.gamma_max, args.points, args.spacing)
    return sweep_frame(_spec(args), gammas, names, settings)


def cmd_export_sdp(args) -> conic.ConicProblem:
    return conic.assemble_sdp(BoundQuery(_spec(args), args.gamma, args.side))


def cmd_verify(args, settings: SolverSettings) -> tuple:
    query = BoundQuery(_spec(args), args.gamma, args.side)
    tol = settings.verify_gap_tol if args.tol is None else args.tol
    dual = product_bound(query, settings)
    try:
        primal = primal_oracle.lower_bound_lp(
            query.spec, query.event, grid_points=args.grid_points or settings.grid_points,
            span_sigmas=settings.grid_span_sigmas, lp_tol=settings.lp_tol,
            extra_atoms=primal_oracle.witness_atoms(query, dual, settings.grid_span_sigmas))
    except GridInfeasibleError as e:
        return {"dual": dual.to_dict(), "primal": None, "error": str(e)}, EXIT_SOLVER
    gap = dual.value - primal.value
    report = {"dual": dual.to_dict(), "primal": primal.to_dict(), "gap": gap, "tol": tol,
              "query": query.to_dict()}
    return report, EXIT_OK if gap <= tol else EXIT_GAP


def cmd_validate(args) -> tuple:
    spec = _spec(args)
    report = validate(spec).to_dict()
    report["covariance_eigenvalues"] = list(covariance_eigenvalues(spec))
    if report["slater_strict"]:
        report["absorption_threshold"] = analytic.absorption_threshold(spec)
        threshold = analytic.gamma_bar_threshold(spec)
        report["gamma_bar"] = threshold.value if threshold.hypothesis_holds else None
    return report, EXIT_OK if report["feasible"] else EXIT_INFEASIBLE


def cmd_portfolio(args, settings: SolverSettings) -> pd.DataFrame:
    panel = portfolio.ReturnPanel.from_csv(args.returns)
    mean, cov = portfolio.estimate_moments(panel)
    points = portfolio.frontier_sweep(mean, cov, args.horizon, args.epsilon, args.points,
                                      tau_max=args.tau_max, settings=settings, rho=args.rho)
    frame = pd.DataFrame([p.to_row() for p in points],
                         columns=["tau", "weights", "mean", "stdev", "wvar", "growth_rate", "tag"])
    frame["best"] = False
    if len(frame):
        frame.loc[frame["wvar"].idxmax(), "best"] = True
    return frame


def _run(args, config: dict, logger: LoggingFacility) -> int:
    settings = SolverSettings.from_config(config)
    out = Output(args.output)
    echo = _resolved(args, config)

    if args.command == "export-sdp":
        problem = cmd_export_sdp(args)
        out.write(problem.to_text(echo))
        logger.log(f"✅ Exported {args.side} conic problem with {len(problem.variables)} variables.")
        return EXIT_OK

    if args.command in ("sweep", "portfolio"):
        if args.command == "sweep":
            frame = cmd_sweep(args, settings)
            summary = f"✅ Sweep finished: {len(frame)} rows, columns {', '.join(frame.columns[1:])}."
        else:
            frame = cmd_portfolio(args, settings)
            best = frame[frame["best"]].iloc[0] if len(frame) else None
            summary = (f"✅ Frontier finished: {len(frame)} portfolios"
                       + (f", best WVaR {best['wvar']:.6g} at weights {best['weights']}." if best is not None else "."))
        out.csv(echo, frame)
        logger.log(summary, to_slack=args.notify, results_only=True)
        return EXIT_OK

    if args.command == "bound":
        result, code = cmd_bound(args, settings)
        summary = f"✅ {args.side} bound at gamma={args.gamma:g}: {result['value']:.10g}"
    elif args.command == "generic":
        result = generic_bounds.generic_bound(_spec(args), Event.parse(args.event, args.gamma), settings).to_dict()
        code = EXIT_OK
        summary = f"✅ {args.event} bound at gamma={args.gamma:g}: {result['value']:.10g}"
    elif args.command == "verify":
        result, code = cmd_verify(args, settings)
        if code == EXIT_OK:
            summary = f"✅ Verified: gap {result['gap']:.3g} within {result['tol']:.3g}"
        elif code == EXIT_GAP:
            summary = f"⚠️ Gap {result['gap']:.3g} exceeds {result['tol']:.3g}"
        else:
            summary = f"❌ Verification failed: {result['error']}"
    else:
        result, code = cmd_validate(args)
        summary = "✅ Moment data feasible." if code == EXIT_OK else \
            "⚠️ Moment data infeasible: need mu^2 + rho*sigma^2 >= 0."
    out.json(args.command, echo, result)
    logger.log(summary, to_slack=args.notify, results_only=True)
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        config = ConfigLoader.load_settings(args.config)
    except (FileNotFoundError, json.JSONDecodeError) as e:
        print(f"❌ Could not load configuration: {e}", file=sys.stderr)
        return EXIT_USAGE
    logger = LoggingFacility(config, verbose=args.verbose)
    logger.log(f"🚀 chebyprod {args.command} started.")
    try:
        return _run(args, config, logger)
    except InvalidSpecError as e:
        logger.log(f"❌ Invalid input: {e}")
        return EXIT_USAGE
    except InfeasibleSpecError as e:
        logger.log(f"❌ Infeasible moment data: {e}")
        return EXIT_INFEASIBLE
    except (SolverError, GridInfeasibleError) as e:
        logger.log(f"❌ Solver failure: {e}")
        return EXIT_SOLVER
    except ChebyprodError as e:
        logger.log(f"❌ {e}")
        return EXIT_SOLVER
