"""Scaling series over growing path lengths, limit estimates and decay-exponent fits.

Instances of one family are solved independently (in a process pool when
more than one worker is configured) and collected in ascending N before any
extrapolation or fitting.
"""
import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import stats

from gapscope.core.config import get_settings
from gapscope.core.exceptions import ArgumentError, DomainError, SolverError
from gapscope.schemas.instance import PathSpec, SpecFamily
from gapscope.services.eigensolve import default_tolerance, smallest_eigenvalues
from gapscope.services.path_model import assemble
from gapscope.services.theory import (
    GroundStateReport,
    check_ground_state_structure,
    dirichlet_restriction,
    exact_unweighted_eigenvalue,
    tail_mass,
)

logger = logging.getLogger(__name__)

MIN_SERIES_POINTS = 5
DECREASE_RATIO = 0.5
EXTRAPOLATION_AGREEMENT = 1e-3


class Quantity(str, Enum):
    """Scaled quantity recorded along a series."""
    GAP_TIMES_N2 = "n2gap"
    LAMBDA1_TIMES_N2 = "n2lambda1"
    LAMBDA0_TIMES_N2 = "n2lambda0"
    GAP = "gap"
    CENTER_VALUE_TIMES_N = "n_u0_center"
    DIRICHLET_MU0_TIMES_N2 = "n2mu0"


class Trend(str, Enum):
    """Tail behaviour of a series."""
    CONVERGES_TO = "converges_to"
    DECREASES_TOWARD_ZERO = "decreases_toward_zero"
    INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class InstanceSummary:
    """Everything the experiments read off one solved instance."""
    N: int
    k: int
    u: float
    weights: str
    lambda0: float
    lambda1: float
    gap: float
    residual0: float
    residual1: float
    tol: float
    center_value: float
    tail_mass: float
    ground: GroundStateReport
    mu0: Optional[float] = None

    def quantity(self, quantity: Quantity) -> float:
        n2 = float(self.N) ** 2
        if quantity == Quantity.GAP_TIMES_N2:
            return n2 * self.gap
        if quantity == Quantity.LAMBDA1_TIMES_N2:
            return n2 * self.lambda1
        if quantity == Quantity.LAMBDA0_TIMES_N2:
            return n2 * self.lambda0
        if quantity == Quantity.GAP:
            return self.gap
        if quantity == Quantity.CENTER_VALUE_TIMES_N:
            return self.N * self.center_value
        if self.mu0 is None:
            raise ArgumentError(f"instance k={self.k} was solved without the Dirichlet restriction")
        return n2 * self.mu0


@dataclass(frozen=True)
class ScalingSeries:
    """A scaled quantity sampled at strictly increasing N."""
    quantity: Quantity
    points: Tuple[Tuple[int, float], ...]
    spec_family: str

    def __post_init__(self):
        sizes = [n for n, _ in self.points]
        if any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ArgumentError(f"series sizes must be strictly increasing, got {sizes}")
        bad = [n for n, value in self.points if not math.isfinite(value)]
        if bad:
            raise ArgumentError(f"series has non-finite values at N={bad}")

    @property
    def sizes(self) -> np.ndarray:
        return np.array([n for n, _ in self.points], dtype=float)

    @property
    def values(self) -> np.ndarray:
        return np.array([value for _, value in self.points], dtype=float)

    def __len__(self) -> int:
        return len(self.points)

    def to_frame(self) -> pd.DataFrame:
        return pd.DataFrame({"N": [n for n, _ in self.points], self.quantity.value: self.values})


@dataclass(frozen=True)
class ExponentFit:
    """Least-squares line through (log N, log value).

    Attributes:
        exponent: Negated slope, so value ~ N^(-exponent)
        intercept: Intercept of the log-log line
        rms_residual: Root-mean-square residual of the fit in log space
        window: (N_min, N_max) of the points actually used
        points: Number of points used
    """
    exponent: float
    intercept: float
    rms_residual: float
    window: Tuple[int, int]
    points: int

    @property
    def prefactor(self) -> float:
        """Empirical constant B in value ~ B * N^(-exponent)."""
        return math.exp(self.intercept)


def solve_instance(spec: PathSpec, tol_rel: Optional[float] = None, dirichlet: bool = False) -> InstanceSummary:
    """Solve the two lowest eigenpairs of one instance and summarize them.

    Args:
        spec: Problem instance
        tol_rel: Bisection tolerance relative to the max row sum
        dirichlet: Also compute the lowest Dirichlet-restriction eigenvalue

    Raises:
        SolverError: If the eigensolver fails
    """
    op = assemble(spec)
    tol = default_tolerance(op, tol_rel)
    spectrum = smallest_eigenvalues(op, count=2, tol=tol, vectors=True)
    ground, first = spectrum[0], spectrum[1]

    mu0 = None
    if dirichlet:
        restricted = dirichlet_restriction(spec)
        mu0 = smallest_eigenvalues(
            restricted, count=1, tol=default_tolerance(restricted, tol_rel), vectors=False
        )[0].value

    return InstanceSummary(
        N=spec.N,
        k=spec.k,
        u=spec.u,
        weights=spec.weights.label,
        lambda0=ground.value,
        lambda1=first.value,
        gap=spectrum.gap,
        residual0=ground.residual,
        residual1=first.residual,
        tol=tol,
        center_value=float(ground.vector[spec.center]),
        tail_mass=tail_mass(ground.vector, spec.k),
        ground=check_ground_state_structure(spec, ground, spectrum.gap, tol),
        mu0=mu0,
    )


def _check_grid(k_grid: Sequence[int]) -> List[int]:
    grid = [int(k) for k in k_grid]
    if not grid or any(k < 1 for k in grid):
        raise ArgumentError(f"k grid must be non-empty with every k >= 1, got {grid}")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ArgumentError(f"k grid must be strictly increasing, got {grid}")
    return grid


def solve_grid(
    family: SpecFamily,
    k_grid: Sequence[int],
    tol_rel: Optional[float] = None,
    dirichlet: bool = False,
    workers: Optional[int] = None,
) -> List[InstanceSummary]:
    """Solve every instance of a family on a k grid.

    Args:
        family: Weights and potential shared by all instances
        k_grid: Strictly increasing half-lengths
        tol_rel: Relative bisection tolerance
        dirichlet: Also compute the Dirichlet-restriction eigenvalue
        workers: Process count (defaults to settings; 1 runs serially)

    Returns:
        Summaries ordered by N

    Raises:
        ArgumentError: If the grid is not strictly increasing
        SolverError: From the first failing instance, with its k attached
    """
    grid = _check_grid(k_grid)
    specs = [family.instance(k) for k in grid]
    if workers is None:
        workers = get_settings().worker_count()
    workers = max(1, min(workers, len(specs)))
    logger.info(f"Solving {len(specs)} instances ({family.description}) with {workers} worker(s)")

    results: Dict[int, InstanceSummary] = {}
    if workers == 1:
        for spec in specs:
            try:
                results[spec.k] = solve_instance(spec, tol_rel, dirichlet)
            except SolverError as exc:
                raise exc.with_context(k=spec.k) from exc
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = {pool.submit(solve_instance, spec, tol_rel, dirichlet): spec.k for spec in specs}
            for future in as_completed(futures):
                k = futures[future]
                try:
                    results[k] = future.result()
                except SolverError as exc:
                    for pending in futures:
                        pending.cancel()
                    raise exc.with_context(k=k) from exc

    return [results[k] for k in grid]


def series_from_summaries(
    summaries: Sequence[InstanceSummary], quantity: Quantity, description: str
) -> ScalingSeries:
    points = tuple((item.N, item.quantity(quantity)) for item in sorted(summaries, key=lambda s: s.N))
    return ScalingSeries(quantity=quantity, points=points, spec_family=description)


def build_series(
    family: SpecFamily,
    quantity: Quantity,
    k_grid: Sequence[int],
    tol_rel: Optional[float] = None,
    workers: Optional[int] = None,
) -> ScalingSeries:
    """Solve a family over a grid and record one scaled quantity per size."""
    summaries = solve_grid(
        family,
        k_grid,
        tol_rel=tol_rel,
        dirichlet=quantity == Quantity.DIRICHLET_MU0_TIMES_N2,
        workers=workers,
    )
    return series_from_summaries(summaries, quantity, family.description)


def gap_scaling_series(family: SpecFamily, k_grid: Sequence[int], tol_rel: Optional[float] = None) -> ScalingSeries:
    return build_series(family, Quantity.GAP_TIMES_N2, k_grid, tol_rel)


def lambda0_lower_bound_series(
    family: SpecFamily, k_grid: Sequence[int], tol_rel: Optional[float] = None
) -> ScalingSeries:
    return build_series(family, Quantity.LAMBDA0_TIMES_N2, k_grid, tol_rel)


def center_decay_series(family: SpecFamily, k_grid: Sequence[int], tol_rel: Optional[float] = None) -> ScalingSeries:
    return build_series(family, Quantity.CENTER_VALUE_TIMES_N, k_grid, tol_rel)


def dirichlet_mu0_series(family: SpecFamily, k_grid: Sequence[int], tol_rel: Optional[float] = None) -> ScalingSeries:
    return build_series(family, Quantity.DIRICHLET_MU0_TIMES_N2, k_grid, tol_rel)


def exact_gap_series(k_grid: Sequence[int]) -> ScalingSeries:
    """N^2 (2 - 2cos(pi/N)) of the unweighted free path, no solver involved."""
    grid = _check_grid(k_grid)
    points = tuple((2 * k + 1, (2 * k + 1) ** 2 * exact_unweighted_eigenvalue(1, 2 * k + 1)) for k in grid)
    return ScalingSeries(quantity=Quantity.GAP_TIMES_N2, points=points, spec_family="unit, u=0 (exact)")


def _richardson(sizes: np.ndarray, values: np.ndarray, a: int, b: int) -> float:
    # one step assuming value(N) = L + c/N^2
    na2, nb2 = sizes[a] ** 2, sizes[b] ** 2
    return values[b] + (values[b] - values[a]) * na2 / (nb2 - na2)


def estimate_limit(series: ScalingSeries) -> Tuple[float, Trend]:
    """Extrapolated limit of a series and its tail trend.

    The estimate is the last value plus one Richardson step in 1/N^2.
    DecreasesTowardZero needs the last five values strictly decreasing and
    last/first <= 0.5; ConvergesTo needs the last three pairwise
    extrapolations to agree within 1e-3 relative.

    Raises:
        ArgumentError: With fewer than five points
    """
    if len(series) < MIN_SERIES_POINTS:
        raise ArgumentError(f"limit estimate needs at least {MIN_SERIES_POINTS} points, got {len(series)}")

    sizes, values = series.sizes, series.values
    limit = _richardson(sizes, values, -2, -1)

    tail = values[-MIN_SERIES_POINTS:]
    if np.all(np.diff(tail) < 0) and values[0] > 0 and values[-1] / values[0] <= DECREASE_RATIO:
        return limit, Trend.DECREASES_TOWARD_ZERO

    extrapolations = np.array([_richardson(sizes, values, i - 1, i) for i in (-3, -2, -1)])
    spread = float(extrapolations.max() - extrapolations.min())
    if spread <= EXTRAPOLATION_AGREEMENT * float(np.max(np.abs(extrapolations))):
        return limit, Trend.CONVERGES_TO
    return limit, Trend.INCONCLUSIVE


def fit_exponent(series: ScalingSeries, window: Optional[Tuple[int, int]] = None) -> ExponentFit:
    """Fit value ~ B * N^(-exponent) on the points inside ``window``.

    Args:
        series: Series to fit
        window: Inclusive (N_min, N_max), or None for every point

    Raises:
        ArgumentError: If fewer than five points fall inside the window
        DomainError: If a value inside the window is not positive
    """
    sizes, values = series.sizes, series.values
    if window is not None:
        mask = (sizes >= window[0]) & (sizes <= window[1])
        sizes, values = sizes[mask], values[mask]
    if sizes.size < MIN_SERIES_POINTS:
        raise ArgumentError(f"exponent fit needs at least {MIN_SERIES_POINTS} points in window {window}, got {sizes.size}")
    if np.any(values <= 0):
        raise DomainError(f"log-log fit needs positive values, got {values.min():.3e} in window {window}")

    log_n, log_v = np.log(sizes), np.log(values)
    regression = stats.linregress(log_n, log_v)
    residuals = log_v - (regression.intercept + regression.slope * log_n)
    fit = ExponentFit(
        exponent=-float(regression.slope),
        intercept=float(regression.intercept),
        rms_residual=float(np.sqrt(np.mean(residuals ** 2))),
        window=(int(sizes[0]), int(sizes[-1])),
        points=int(sizes.size),
    )
    logger.info(
        f"Fitted exponent {fit.exponent:.4f} (B={fit.prefactor:.4e}, rms={fit.rms_residual:.2e}) "
        f"on N in [{fit.window[0]}, {fit.window[1]}] for {series.spec_family}"
    )
    return fit
