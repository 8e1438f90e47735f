"""gapscope command-line interface."""
import argparse
import logging
import sys
from typing import Optional, Sequence

from pydantic import ValidationError

from gapscope.core.config import get_settings
from gapscope.core.exceptions import GapscopeError, SolverError
from gapscope.core.logging_config import setup_logging
from gapscope.schemas.experiment import Experiment, load_config
from gapscope.services.experiments import run_fit_exponent, run_gap_scaling, run_ground_state, run_spectrum
from gapscope.services.verification import run_verify

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

RUNNERS = {
    Experiment.SPECTRUM: run_spectrum,
    Experiment.GAP_SCALING: run_gap_scaling,
    Experiment.FIT_EXPONENT: run_fit_exponent,
    Experiment.GROUND_STATE: run_ground_state,
    Experiment.VERIFY: run_verify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gapscope",
        description="Spectral gap experiments for Schroedinger operators on weighted path graphs.",
    )
    parser.add_argument("--config", help="flat key=value config file; flags override its values")
    parser.add_argument(
        "--experiment",
        help="spectrum | gap_scaling | fit_exponent | ground_state | verify",
    )
    parser.add_argument("--k", help="single half-length k (N = 2k+1)")
    parser.add_argument("--k-grid", dest="k_grid", help="k0:ratio:count or a comma-separated list")
    parser.add_argument("--u", help="potential strength at the zero vertex")
    parser.add_argument("--weights", help="unit | powerlaw | explicit")
    parser.add_argument("--C", dest="C", help="power-law prefactor")
    parser.add_argument("--mu", help="power-law decay exponent (> 1)")
    parser.add_argument("--weights-file", dest="weights_file", help="explicit half-weights for edges (v, v+1), v = 0..k-1")
    parser.add_argument("--tol", help="bisection tolerance relative to the max row sum (default 1e-14)")
    parser.add_argument("--out", help="result file (default stdout)")
    parser.add_argument("--format", help="csv | json")
    parser.add_argument("--plot", help="SVG figure path")
    parser.add_argument("--fit-window", dest="fit_window", help="Nmin:Nmax for exponent fits")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run one experiment and return its exit code.

    Exit codes: 0 success, 1 verification failure, 2 usage or config error,
    3 solver failure.
    """
    parser = build_parser()
    args = parser.parse_args(argv)

    settings = get_settings()
    setup_logging(settings.log_level, settings.log_dir)

    overrides = {key: value for key, value in vars(args).items() if key != "config" and value is not None}
    try:
        cfg = load_config(args.config, overrides)
        logger.info(f"Running experiment {cfg.experiment.value}")
        return RUNNERS[cfg.experiment](cfg)
    except SolverError as exc:
        logger.error(f"Solver failure: {exc}")
        print(f"gapscope: solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except ValidationError as exc:
        detail = exc.errors()[0]
        print(f"gapscope: invalid instance: {detail.get('msg', exc)}", file=sys.stderr)
        return EXIT_USAGE
    except (GapscopeError, ValueError, OSError) as exc:
        logger.error(f"Experiment aborted: {exc}")
        print(f"gapscope: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    raise SystemExit(main())
