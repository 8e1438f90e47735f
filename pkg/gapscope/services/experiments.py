"""Experiment runners behind the command-line interface.

Each runner takes a validated :class:`ExperimentConfig`, writes its result
table (and optional SVG figure) and returns the process exit code. Errors
propagate to the caller, which maps them to exit codes.
"""
import logging
import math

import pandas as pd

from gapscope.core.exceptions import ArgumentError
from gapscope.schemas.experiment import ExperimentConfig
from gapscope.services.asymptotics import (
    MIN_SERIES_POINTS,
    Quantity,
    estimate_limit,
    exact_gap_series,
    fit_exponent,
    series_from_summaries,
    solve_grid,
)
from gapscope.utils.helpers import write_table
from gapscope.utils.plotting import plot_series

logger = logging.getLogger(__name__)

SPECTRUM_COLUMNS = ["N", "k", "u", "weights", "lambda0", "lambda1", "gap", "residual0", "residual1"]
GAP_SCALING_COLUMNS = ["N", "k", "u", "weights", "lambda0", "lambda1", "gap", "n2gap", "n_u0_center"]
FIT_COLUMNS = ["weights", "u", "exponent", "intercept", "prefactor", "rms_residual", "n_min", "n_max", "points"]
GROUND_STATE_COLUMNS = [
    "N", "k", "u", "weights", "positive", "symmetric_defect", "monotone_defect",
    "center_value", "n_u0_center", "tail_mass", "gap",
]


def run_spectrum(cfg: ExperimentConfig) -> int:
    """Two lowest eigenpairs per size: N,k,u,weights,lambda0,lambda1,gap,residual0,residual1."""
    summaries = solve_grid(cfg.family(), cfg.grid(), tol_rel=cfg.tol)
    frame = pd.DataFrame([
        {
            "N": s.N, "k": s.k, "u": s.u, "weights": s.weights,
            "lambda0": s.lambda0, "lambda1": s.lambda1, "gap": s.gap,
            "residual0": s.residual0, "residual1": s.residual1,
        }
        for s in summaries
    ])
    write_table(frame, cfg.out, cfg.format.value, SPECTRUM_COLUMNS)
    return 0


def run_gap_scaling(cfg: ExperimentConfig) -> int:
    """N^2 * gap over a grid, with an optional log-log plot against the free path.

    Raises:
        ArgumentError: With fewer than five grid sizes
    """
    grid = cfg.grid()
    if len(grid) < MIN_SERIES_POINTS:
        raise ArgumentError(f"gap scaling needs at least {MIN_SERIES_POINTS} sizes, got {len(grid)}")

    family = cfg.family()
    summaries = solve_grid(family, grid, tol_rel=cfg.tol)
    frame = pd.DataFrame([
        {
            "N": s.N, "k": s.k, "u": s.u, "weights": s.weights,
            "lambda0": s.lambda0, "lambda1": s.lambda1, "gap": s.gap,
            "n2gap": s.quantity(Quantity.GAP_TIMES_N2),
            "n_u0_center": s.quantity(Quantity.CENTER_VALUE_TIMES_N),
        }
        for s in summaries
    ])
    write_table(frame, cfg.out, cfg.format.value, GAP_SCALING_COLUMNS)

    series = series_from_summaries(summaries, Quantity.GAP_TIMES_N2, family.description)
    limit, trend = estimate_limit(series)
    logger.info(f"N^2 gap for {family.description}: limit estimate {limit:.10g}, trend {trend.value}")

    if cfg.plot:
        plot_series(
            cfg.plot,
            [exact_gap_series(grid), series],
            reference_level=math.pi ** 2,
            reference_label="pi^2",
            title="N^2 * spectral gap",
        )
    return 0


def run_fit_exponent(cfg: ExperimentConfig) -> int:
    """Fit gap ~ B * N^(-exponent) over ``fit_window`` and write one record."""
    family = cfg.family()
    summaries = solve_grid(family, cfg.grid(), tol_rel=cfg.tol)
    series = series_from_summaries(summaries, Quantity.GAP, family.description)
    fit = fit_exponent(series, cfg.fit_window)
    frame = pd.DataFrame([{
        "weights": family.weights.label,
        "u": family.u,
        "exponent": fit.exponent,
        "intercept": fit.intercept,
        "prefactor": fit.prefactor,
        "rms_residual": fit.rms_residual,
        "n_min": fit.window[0],
        "n_max": fit.window[1],
        "points": fit.points,
    }])
    write_table(frame, cfg.out, cfg.format.value, FIT_COLUMNS)

    if cfg.plot:
        plot_series(cfg.plot, [series], fit=fit, title="spectral gap")
    return 0


def run_ground_state(cfg: ExperimentConfig) -> int:
    """Ground-state structure report per size."""
    summaries = solve_grid(cfg.family(), cfg.grid(), tol_rel=cfg.tol)
    frame = pd.DataFrame([
        {
            "N": s.N, "k": s.k, "u": s.u, "weights": s.weights,
            "positive": s.ground.positive,
            "symmetric_defect": s.ground.symmetric_defect,
            "monotone_defect": s.ground.monotone_defect,
            "center_value": s.center_value,
            "n_u0_center": s.quantity(Quantity.CENTER_VALUE_TIMES_N),
            "tail_mass": s.tail_mass,
            "gap": s.gap,
        }
        for s in summaries
    ])
    write_table(frame, cfg.out, cfg.format.value, GROUND_STATE_COLUMNS)

    failed = frame.loc[~frame["positive"], "k"].tolist()
    if failed:
        logger.warning(f"ground state not strictly positive for k={failed}")
    return 0
