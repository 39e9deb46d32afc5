"""
Command-line entry point: simulate | fit | benchmark | diagnose.

Exit codes: 0 success, 1 configuration or input-role error, 2 runtime or
stage error, 3 benchmark finished with failed replications.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional

from config.settings import build_run_config, load_config
from core.exceptions import (
    ConfigurationError,
    EmptyDataError,
    ParseError,
    RoleError,
    TabCFError,
)
from services.monitor_service import configure_telemetry
from workflows import BenchmarkWorkflow, DiagnoseWorkflow, FitCurveWorkflow, SimulateWorkflow

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_RUNTIME = 2
EXIT_PARTIAL = 3

WORKFLOWS = {
    "simulate": SimulateWorkflow,
    "fit": FitCurveWorkflow,
    "benchmark": BenchmarkWorkflow,
    "diagnose": DiagnoseWorkflow,
}

INPUT_ERRORS = (ConfigurationError, RoleError, ParseError, EmptyDataError)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tabcf",
        description="Control-function estimation of interventional distributions.",
        formatter_class=argparse.ArgumentDefaultsHelpFormatter,
    )
    common = argparse.ArgumentParser(add_help=False, formatter_class=argparse.ArgumentDefaultsHelpFormatter)
    common.add_argument("--config", help="Run file (YAML or JSON) merged over config/base_config.yaml")
    common.add_argument("--output-dir", help="Parent directory of the run folder (default: runs, or TABCF_OUTPUT_DIR)")
    common.add_argument("--run-name", help="Run folder name (default: <command>-<timestamp>)")
    common.add_argument("--seed", type=int, help="Root seed (default: 0)")
    common.add_argument("--n", type=int, help="Observational sample size for synthetic settings (default: 4000)")
    common.add_argument("--treatment", help="T1 | T2 | linear-sanity | weak-T1 | weak-T2 (default: T1)")
    common.add_argument("--outcome", help="O1 | O2 | O3 | linear-sanity | BO1-BO4 (default: O2)")
    common.add_argument("--kappa", type=float, help="Weak-IV instrument strength")
    common.add_argument("--rho-eps", type=float, help="Outcome-noise correlation for BO1-BO4 (default: 0)")
    common.add_argument("--uniform-instrument", action="store_true", help="Draw Z ~ Unif(0, 3)")
    common.add_argument("--covariate", action="store_true", help="Add the observed covariate W")
    common.add_argument("--csv", help="Observational CSV; column roles come from the run file")
    common.add_argument("--backbone", help="gaussian-linear | kernel-empirical | binned-histogram")
    common.add_argument("--cross-fit-folds", type=int, help="0 = full-sample controls (default: 0)")
    common.add_argument("--log-level", help="DEBUG | INFO | WARNING | ERROR (default: INFO)")

    estimation = argparse.ArgumentParser(add_help=False)
    estimation.add_argument(
        "--estimator", action="append", help="tabcf | tabcf-independence | naive | linear-cf (repeatable)"
    )
    estimation.add_argument("--functional", action="append", help="mean | quantile | gini | joint (repeatable)")
    estimation.add_argument("--tau", type=float, action="append", help="Quantile level (repeatable; default 0.1..0.9)")
    estimation.add_argument("--v-integration", help="empirical | quadrature (default: empirical)")
    estimation.add_argument("--grid-x", type=int, help="Intervention levels (default: 200)")
    estimation.add_argument("--grid-y", type=int, help="Outcome grid points (default: 512)")
    estimation.add_argument("--joint-x", type=int, help="Intervention levels for joint laws (default: 13)")
    estimation.add_argument(
        "--copula-scores", help="Copula pseudo-scores: interventional | conditional (default: interventional)"
    )

    replicated = argparse.ArgumentParser(add_help=False)
    replicated.add_argument("--replications", type=int, help="Replications per setting (default: 1)")
    replicated.add_argument("--workers", type=int, help="Worker processes (default: TABCF_WORKERS or CPU count)")

    commands = parser.add_subparsers(dest="command", required=True)
    commands.add_parser("simulate", parents=[common, replicated], help="Write observational datasets")
    fit = commands.add_parser("fit", parents=[common, estimation], help="Estimate interventional curves")
    fit.add_argument("--save-models", action="store_true", help="Persist fitted backbones as JSON")
    fit.add_argument("--load-models", help="Reuse backbones saved by an earlier fit (run folder or its models/)")
    commands.add_parser("benchmark", parents=[common, estimation, replicated], help="Replicated scored sweeps")
    diagnose = commands.add_parser("diagnose", parents=[common], help="Check the control variable")
    diagnose.add_argument("--conditional", action="store_true", help="Also run the stratified Y-Z check")
    diagnose.add_argument("--bins", type=int, help="Equal-mass bins per stratified axis (default: 4)")
    diagnose.add_argument("--permutations", type=int, help="Permutations for distance correlation (default: 199)")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """CLI flags as a nested mapping; unset flags are None and do not override."""
    values = vars(args)

    def get(name: str):
        return values.get(name)

    def flag(name: str):
        return True if values.get(name) else None

    return {
        "output_dir": get("output_dir"),
        "seed": get("seed"),
        "n": get("n"),
        "csv_path": get("csv"),
        "setting": {
            "treatment": get("treatment"),
            "outcome": get("outcome"),
            "kappa": get("kappa"),
            "rho_eps": get("rho_eps"),
            "instrument_law": "uniform" if get("uniform_instrument") else None,
            "covariate_augmented": flag("covariate"),
        },
        "backbone": {"kind": get("backbone")},
        "cross_fit_folds": get("cross_fit_folds"),
        "estimators": get("estimator"),
        "functionals": get("functional"),
        "taus": get("tau"),
        "v_integration": get("v_integration"),
        "copula_score_mode": get("copula_scores"),
        "grid": {"n_x": get("grid_x"), "n_y": get("grid_y"), "joint_x": get("joint_x")},
        "replications": get("replications"),
        "workers": get("workers"),
        "save_models": flag("save_models"),
        "load_models": get("load_models"),
        "diagnostics": {
            "conditional": flag("conditional"),
            "bins": get("bins"),
            "permutations": get("permutations"),
        },
        "logging": {"level": get("log_level")},
    }


def configure_logging(raw: Dict[str, Any]) -> None:
    settings = raw.get("logging") or {}
    configure_telemetry((raw.get("telemetry") or {}).get("connection_string"))

    level = str(settings.get("level") or "INFO").upper()
    root_logger = logging.getLogger()
    if not root_logger.handlers:
        logging.basicConfig(
            level=level,
            format=settings.get("format", "%(asctime)s - %(name)s - %(levelname)s - %(message)s"),
            force=False,  # Preserve OpenTelemetry handlers
        )
    else:
        root_logger.setLevel(level)


def run(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        raw = load_config(args.config, overrides_from_args(args))
        configure_logging(raw)
        if raw.get("csv_path"):
            raw["setting"] = None
        config = build_run_config(raw)

        workflow = WORKFLOWS[args.command](config, raw_config=raw, run_name=args.run_name)
        result = workflow.execute()
    except INPUT_ERRORS as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_CONFIG
    except TabCFError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_RUNTIME

    if args.command == "diagnose":
        print(result.summary())
    elif args.command == "benchmark":
        print(f"Benchmark written to {result.run_dir} ({result.replications} replications, {result.failed} failed)")
        if result.partial_failure:
            return EXIT_PARTIAL
    else:
        print(f"Run written to {result}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(run())
