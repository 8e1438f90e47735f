"""Closed-form results and structural checks for the path-graph operator.

Covers the exact unweighted spectrum, the ground-state structure report, the
interior eigenvector recurrence and its characteristic-root solution, the
Dirichlet restriction at the zero vertex, and the block test vectors behind
the upper bound for decaying weights.
"""
import cmath
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Optional, Tuple

import numpy as np

from gapscope.core.exceptions import (
    ArgumentError,
    DegenerateSystemError,
    DimensionError,
    DomainError,
    RegimeError,
)
from gapscope.schemas.instance import PathSpec
from gapscope.services.eigensolve import EigenPair
from gapscope.services.path_model import TridiagonalOperator, quadratic_form

logger = logging.getLogger(__name__)

DOUBLE_ROOT_TOLERANCE = 1e-14
TWO_PI = 2.0 * math.pi


class TestVectorVariant(str, Enum):
    """Block test vectors on the two ends of the path."""
    SYMMETRIC = "symmetric"
    ANTISYMMETRIC = "antisymmetric"


@dataclass(frozen=True)
class RecurrenceModel:
    """Characteristic-root description of the interior ground-state recurrence.

    Attributes:
        lambda0: Ground eigenvalue entering p(x) = x^2 - (2 - lambda0) x + 1
        roots: The two roots of p
        alpha: Closed-form coefficients, None until fitted to data
        angles: Complex angles in [0, 2pi) of alpha_1 (nan until fitted) and root_1
        degenerate: True at the double root lambda0 = 0
    """
    lambda0: float
    roots: Tuple[complex, complex]
    alpha: Optional[Tuple[complex, complex]] = None
    angles: Tuple[float, float] = (math.nan, math.nan)
    degenerate: bool = False


@dataclass(frozen=True)
class GroundStateReport:
    """Structural properties of a computed ground state."""
    positive: bool
    symmetric_defect: float
    monotone_defect: float
    center_value: float
    non_degenerate: Optional[bool] = None


def _angle(z: complex) -> float:
    return cmath.phase(z) % TWO_PI


def exact_unweighted_eigenvalue(j: int, N: int) -> float:
    """j-th eigenvalue 2 - 2cos(pi j / N) of the unweighted path Laplacian on N vertices.

    Evaluated as 4 sin^2(pi j / 2N) to avoid cancellation for small j/N.

    Raises:
        DomainError: If N is even or below 3, or j lies outside 0..N-1
    """
    if N < 3 or N % 2 == 0:
        raise DomainError(f"N must be an odd integer >= 3, got {N}")
    if not 0 <= j <= N - 1:
        raise DomainError(f"index j must lie in [0, {N - 1}], got {j}")
    return 4.0 * math.sin(math.pi * j / (2.0 * N)) ** 2


def check_ground_state_structure(
    spec: PathSpec,
    ground: EigenPair,
    gap: Optional[float] = None,
    tol: Optional[float] = None,
) -> GroundStateReport:
    """Positivity, symmetry and outward monotonicity of a ground state.

    Args:
        spec: Instance the ground state belongs to
        ground: Index-0 eigenpair with its vector
        gap: Spectral gap of the instance, to witness non-degeneracy
        tol: Solver tolerance the gap is compared against

    Raises:
        ArgumentError: If the eigenvector is missing or does not fit the instance
    """
    if ground.vector is None:
        raise ArgumentError("ground-state structure needs the eigenvector")
    v = np.asarray(ground.vector, dtype=float)
    if v.size != spec.N:
        raise ArgumentError(f"eigenvector has {v.size} entries, instance has N={spec.N}")

    k = spec.k
    right = v[k:]
    steps = right[:-1] - right[1:]
    non_degenerate = None
    if gap is not None:
        non_degenerate = gap > (tol if tol is not None else 0.0)
    return GroundStateReport(
        positive=bool(np.all(v > 0)),
        symmetric_defect=float(np.max(np.abs(v - v[::-1]))),
        monotone_defect=float(np.max(np.maximum(steps, 0.0))) if steps.size else 0.0,
        center_value=float(v[k]),
        non_degenerate=non_degenerate,
    )


def characteristic_roots(lambda0: float) -> RecurrenceModel:
    """Roots of p(x) = x^2 - (2 - lambda0) x + 1 in the complex-root regime.

    Raises:
        RegimeError: If lambda0 lies outside [0, 4)
    """
    if not 0.0 <= lambda0 < 4.0:
        raise RegimeError(f"lambda0 must lie in [0, 4) for conjugate roots, got {lambda0}")
    half_trace = (2.0 - lambda0) / 2.0
    imag = math.sqrt(max(1.0 - half_trace * half_trace, 0.0))
    root1 = complex(half_trace, imag)
    root2 = complex(half_trace, -imag)
    degenerate = abs(root1 - root2) <= DOUBLE_ROOT_TOLERANCE
    if degenerate:
        logger.info(f"lambda0={lambda0} gives the double root {root1}; only constant solutions apply")
    return RecurrenceModel(
        lambda0=lambda0,
        roots=(root1, root2),
        angles=(math.nan, _angle(root1)),
        degenerate=degenerate,
    )


def closed_form_coefficients(u00: float, u01: float, model: RecurrenceModel) -> RecurrenceModel:
    """Fit alpha_1, alpha_2 so that u0(n) = alpha_1 r1^(n+1) + alpha_2 r2^(n+1).

    alpha_1 = (r2 u0(0) - u0(1)) / (1 - r1^2), and symmetrically for alpha_2.

    Raises:
        DegenerateSystemError: If the roots coincide (lambda0 = 0)
    """
    r1, r2 = model.roots
    if model.degenerate or abs(1.0 - r1 * r1) <= DOUBLE_ROOT_TOLERANCE:
        raise DegenerateSystemError(
            "double characteristic root: the recurrence only admits the constant solution at lambda0 = 0"
        )
    alpha1 = (r2 * u00 - u01) / (1.0 - r1 * r1)
    alpha2 = (r1 * u00 - u01) / (1.0 - r2 * r2)
    alpha_angle = _angle(alpha1) if alpha1 != 0 else 0.0
    return replace(model, alpha=(alpha1, alpha2), angles=(alpha_angle, model.angles[1]))


def evaluate_closed_form(model: RecurrenceModel, n_max: int) -> np.ndarray:
    """u0(0..n_max) from the fitted closed form (real part).

    Raises:
        ArgumentError: If the coefficients have not been fitted
    """
    if model.alpha is None:
        raise ArgumentError("closed form requires fitted coefficients")
    n = np.arange(n_max + 1)
    r1, r2 = model.roots
    a1, a2 = model.alpha
    values = a1 * np.power(r1, n + 1) + a2 * np.power(r2, n + 1)
    return np.real(values)


def polar_form(model: RecurrenceModel, n: int) -> float:
    """Amplitude-angle form 2|alpha_1| cos(angle(alpha_1) + (n+1) angle(r1))."""
    if model.alpha is None:
        raise ArgumentError("polar form requires fitted coefficients")
    alpha_angle, root_angle = model.angles
    return 2.0 * abs(model.alpha[0]) * math.cos(alpha_angle + (n + 1) * root_angle)


def propagate_recurrence(u00: float, u01: float, lambda0: float, n_max: int) -> np.ndarray:
    """Forward three-term recurrence u0(n) = (2 - lambda0) u0(n-1) - u0(n-2).

    Raises:
        ArgumentError: If n_max < 2
    """
    if n_max < 2:
        raise ArgumentError(f"n_max must be at least 2, got {n_max}")
    values = np.empty(n_max + 1)
    values[0] = u00
    values[1] = u01
    factor = 2.0 - lambda0
    for n in range(2, n_max + 1):
        values[n] = factor * values[n - 1] - values[n - 2]
    return values


def recurrence_residuals(vector: np.ndarray, k: int, lambda0: float) -> np.ndarray:
    """Residuals of the recurrence on the positive side for 2 <= n <= k-1."""
    right = np.asarray(vector, dtype=float)[k:]
    if k < 3:
        return np.zeros(0)
    n = np.arange(2, k)
    return right[n] - (2.0 - lambda0) * right[n - 1] + right[n - 2]


def center_slope_ratio(u: float, lambda0: float) -> float:
    """u0(+1)/u0(0) forced by the eigenvalue equation at the zero vertex (unit weights)."""
    return 1.0 + (u - lambda0) / 2.0


def dirichlet_restriction(spec: PathSpec) -> TridiagonalOperator:
    """Operator on vertices 1..k from the form restricted to f(0) = 0.

    The weight of edge (0, 1) stays on the diagonal of vertex 1.
    """
    half = spec.weights.half_weights(spec.k)
    diag = half.copy()
    diag[:-1] += half[1:]
    return TridiagonalOperator(diag, -half[1:])


def test_vector_family(k: int, variant: TestVectorVariant = TestVectorVariant.SYMMETRIC) -> np.ndarray:
    """Block vector with ceil(k/4) entries at each end of the path.

    SYMMETRIC puts +1 on both blocks, ANTISYMMETRIC puts -1 on the right one.

    Raises:
        DomainError: If k < 4
    """
    if k < 4:
        raise DomainError(f"test vectors need k >= 4, got {k}")
    variant = TestVectorVariant(variant)
    block = math.ceil(k / 4)
    f = np.zeros(2 * k + 1)
    f[:block] = 1.0
    f[-block:] = -1.0 if variant == TestVectorVariant.ANTISYMMETRIC else 1.0
    return f


def test_vector_bound(k: int, C: float, mu: float) -> float:
    """Analytic minmax bound 2C (k - ceil(k/4))^(-mu) / (2 ceil(k/4))."""
    if k < 4:
        raise DomainError(f"test vectors need k >= 4, got {k}")
    block = math.ceil(k / 4)
    return 2.0 * C * (k - block) ** (-mu) / (2.0 * block)


def rayleigh_quotient(spec: PathSpec, f) -> float:
    """q_{w,u}[f] / ||f||^2.

    Raises:
        ArgumentError: If f is the zero vector
    """
    f = np.asarray(f)
    norm_sq = float(np.real(np.vdot(f, f)))
    if norm_sq == 0.0:
        raise ArgumentError("Rayleigh quotient of the zero vector is undefined")
    return quadratic_form(spec, f) / norm_sq


def truncate_center(f) -> np.ndarray:
    """Copy of f with the zero-vertex entry set to 0.

    Raises:
        DimensionError: If f has even length
    """
    f = np.array(f, copy=True)
    if f.ndim != 1 or f.size % 2 == 0:
        raise DimensionError(f"expected an odd-length vector, got shape {f.shape}")
    f[f.size // 2] = 0
    return f


def half_restrictions(f) -> Tuple[np.ndarray, np.ndarray]:
    """Restrictions of a center-zero vector to -k..0 and 0..k, each continued by zero."""
    f = truncate_center(f)
    center = f.size // 2
    left = np.zeros_like(f)
    right = np.zeros_like(f)
    left[:center] = f[:center]
    right[center + 1:] = f[center + 1:]
    return left, right


def two_half_upper_bound(spec: PathSpec, ground: EigenPair) -> float:
    """Minmax bound on lambda_1 from the two halves of the truncated ground state.

    The halves have disjoint support and no form cross term, so lambda_1 is
    at most the larger of their Rayleigh quotients.
    """
    if ground.vector is None:
        raise ArgumentError("two-half bound needs the ground-state vector")
    quotients = [rayleigh_quotient(spec, half) for half in half_restrictions(ground.vector)]
    return max(quotients)


def tail_mass(f, k: int) -> float:
    """Mass of f on the last floor(sqrt(k)) vertices of the positive side."""
    f = np.asarray(f)
    width = math.isqrt(k)
    if width == 0:
        return 0.0
    return float(np.sum(np.abs(f[-width:]) ** 2))
