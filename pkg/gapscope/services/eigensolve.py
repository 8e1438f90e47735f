"""Lowest eigenpairs of symmetric tridiagonal operators.

Eigenvalues come from Sturm-count bisection, eigenvectors from inverse
iteration with the converged eigenvalue as shift. Every returned eigenvalue
carries the bracket it was bisected to, so callers can re-certify its index
with :func:`eigenvalue_count_below`.

Error budget: bisection stops once ``b - a <= tol + 2*eps*max(|a|, |b|)``,
and the floating-point Sturm count is itself exact for a matrix within a few
``eps*max_row_sum`` of the input, so each eigenvalue is accurate to roughly
``tol/2 + eps*max_row_sum`` in absolute terms. A gap obtained by subtraction
inherits the sum of both errors, so brackets with a neighbour closer than
``REFINE_FACTOR*tol`` are bisected on to the floating-point limit.

Mirror-symmetric operators are split into their even and odd blocks
(:meth:`TridiagonalOperator.parity_sectors`) and each block is bisected on
its own; eigenvectors are computed on the block and unfolded to the path.
"""
import logging
import math
from dataclasses import dataclass
from itertools import islice
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import lapack

from gapscope.core.config import get_settings
from gapscope.core.exceptions import ArgumentError, SolverError
from gapscope.services.path_model import TridiagonalOperator, unfold_even, unfold_odd

logger = logging.getLogger(__name__)
solver_logger = logging.getLogger('solver')

EPS = float(np.finfo(float).eps)
MIN_INVERSE_SWEEPS = 3
REORTHOGONALIZE_FACTOR = 1e3
REFINE_FACTOR = 1e3
RESIDUAL_REL_BOUND = 1e-10
MAX_BISECTION_STEPS = 400


@dataclass(frozen=True, eq=False)
class EigenPair:
    """One eigenvalue with its optional eigenvector.

    Attributes:
        value: Eigenvalue (midpoint of the final bisection bracket)
        index: Position in the ascending ordering
        vector: l2-normalized, sign-fixed eigenvector, if computed
        residual: ||H v - value v||_2 when the vector is present
        bracket: Final bisection interval (lower, upper)
        certified: Whether exactly one eigenvalue lies in the bracket (counted
            on the parity block the pair was computed on, if any)
    """
    value: float
    index: int
    vector: Optional[np.ndarray] = None
    residual: Optional[float] = None
    bracket: Tuple[float, float] = (math.nan, math.nan)
    certified: bool = True


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending list of eigenpairs."""
    pairs: Tuple[EigenPair, ...]

    @property
    def values(self) -> np.ndarray:
        return np.array([pair.value for pair in self.pairs])

    @property
    def gap(self) -> Optional[float]:
        """lambda_1 - lambda_0, or None with fewer than two pairs."""
        if len(self.pairs) < 2:
            return None
        return self.pairs[1].value - self.pairs[0].value

    @property
    def gap_error(self) -> Optional[float]:
        """Bound on the error of :attr:`gap` from the two bracket half-widths."""
        if len(self.pairs) < 2:
            return None
        widths = [pair.bracket[1] - pair.bracket[0] for pair in self.pairs[:2]]
        return 0.5 * sum(widths) + 2 * EPS * max(abs(p.value) for p in self.pairs[:2])

    def __len__(self) -> int:
        return len(self.pairs)

    def __getitem__(self, index: int) -> EigenPair:
        return self.pairs[index]


def pivot_floor(op: TridiagonalOperator) -> float:
    """Smallest admissible pivot magnitude in the Sturm recurrence."""
    return EPS * op.max_row_sum


def default_tolerance(op: TridiagonalOperator, rel: Optional[float] = None) -> float:
    """Absolute bisection tolerance ``rel * max_row_sum`` (rel defaults to settings)."""
    if rel is None:
        rel = get_settings().default_rel_tol
    return rel * op.max_row_sum


def eigenvalue_count_below(op: TridiagonalOperator, x: float) -> int:
    """Number of eigenvalues strictly below x.

    Counts the negative pivots of the LDL^T factorization of ``H - x I``.
    A pivot smaller in magnitude than ``eps*max_row_sum`` is replaced by that
    floor, keeping its sign.
    """
    x = float(x)
    if not math.isfinite(x):
        raise ArgumentError(f"shift must be finite, got {x}")
    pivmin = pivot_floor(op)
    diag = op.diag_list
    offsq = op.offdiag_squared_list

    q = diag[0] - x
    if -pivmin < q < pivmin:
        q = math.copysign(pivmin, q)
    count = 1 if q < 0 else 0
    for a, b2 in zip(islice(diag, 1, None), offsq):
        q = a - x - b2 / q
        if -pivmin < q < pivmin:
            q = math.copysign(pivmin, q)
        if q < 0:
            count += 1
    return count


def _initial_interval(op: TridiagonalOperator) -> Tuple[float, float]:
    low, high = op.gershgorin_bounds
    margin = 2 * EPS * op.size * op.max_row_sum + 2 * pivot_floor(op)
    return low - margin, high + margin


def _converged(a: float, b: float, tol: float) -> bool:
    return b - a <= tol + 2 * EPS * max(abs(a), abs(b))


def _bisect_lowest(op: TridiagonalOperator, count: int, tol: float) -> List[Tuple[float, float]]:
    """Brackets for the ``count`` lowest eigenvalues.

    Every Sturm count evaluated while refining one index also tightens the
    brackets of the higher indices.
    """
    low, high = _initial_interval(op)
    lower = [low] * count
    upper = [high] * count

    for j in range(count):
        if j > 0:
            lower[j] = max(lower[j], lower[j - 1])
        steps = 0
        while not _converged(lower[j], upper[j], tol):
            mid = 0.5 * (lower[j] + upper[j])
            if mid <= lower[j] or mid >= upper[j]:
                break
            below = eigenvalue_count_below(op, mid)
            for i in range(j, count):
                if below >= i + 1:
                    upper[i] = min(upper[i], mid)
                else:
                    lower[i] = max(lower[i], mid)
            steps += 1
            if steps > MAX_BISECTION_STEPS:
                raise SolverError(
                    "bisection did not terminate",
                    {"index": j, "lower": lower[j], "upper": upper[j], "tol": tol},
                )
        solver_logger.debug(
            f"index {j}: bracket [{lower[j]:.17e}, {upper[j]:.17e}] after {steps} steps"
        )
    return list(zip(lower, upper))


def _shrink_bracket(op: TridiagonalOperator, index: int, a: float, b: float, tol: float) -> Tuple[float, float]:
    """Bisect a single certified bracket further."""
    while not _converged(a, b, tol):
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        if eigenvalue_count_below(op, mid) >= index + 1:
            b = mid
        else:
            a = mid
    return a, b


def _adjugate_solver(op: TridiagonalOperator, shift: float, pivmin: float):
    """Closed-form solve for 2x2 operators, which dgttrf does not accept."""
    d0, d1 = (float(v) - shift for v in op.diag)
    e = float(op.offdiag[0])
    det = d0 * d1 - e * e
    floor = pivmin * op.max_row_sum
    if abs(det) < floor:
        det = math.copysign(floor, det)
    adjugate = np.array([[d1, -e], [-e, d0]])

    def solve(rhs: np.ndarray) -> np.ndarray:
        return adjugate @ rhs / det

    return solve


def _tridiagonal_solver(op: TridiagonalOperator, shift: float):
    """Factor H - shift*I once and return a solve callable."""
    pivmin = pivot_floor(op)
    if op.size == 2:
        return _adjugate_solver(op, shift, pivmin)
    dl = np.array(op.offdiag, dtype=float)
    du = np.array(op.offdiag, dtype=float)
    d = np.array(op.diag, dtype=float) - shift
    dl, d, du, du2, ipiv, info = lapack.dgttrf(dl, d, du)
    if info < 0:
        raise SolverError("tridiagonal factorization rejected its input", {"info": info, "shift": shift})
    small = np.abs(d) < pivmin
    if np.any(small):
        # exactly singular shift: nudge the zero pivots of U
        d = np.where(small, np.copysign(pivmin, d), d)

    def solve(rhs: np.ndarray) -> np.ndarray:
        x, solve_info = lapack.dgttrs(dl, d, du, du2, ipiv, rhs)
        if solve_info != 0:
            raise SolverError("tridiagonal solve failed", {"info": solve_info, "shift": shift})
        return x

    return solve


def _sign_fixed(vector: np.ndarray) -> np.ndarray:
    if vector[int(np.argmax(np.abs(vector)))] < 0:
        return -vector
    return vector


def inverse_iteration(
    op: TridiagonalOperator,
    value: float,
    index: int,
    tol: float,
    lower_pairs: Sequence[EigenPair] = (),
    max_sweeps: Optional[int] = None,
) -> Tuple[np.ndarray, float]:
    """Eigenvector for a converged eigenvalue.

    Args:
        op: Operator
        value: Converged eigenvalue, used as the shift
        index: Index of the eigenvalue (seeds the start vector)
        tol: Bisection tolerance the value was computed with
        lower_pairs: Already computed lower eigenpairs; vectors of those
            closer than ``1e3*tol`` are projected out in every sweep
        max_sweeps: Sweep limit (defaults to settings)

    Returns:
        Tuple of (normalized sign-fixed vector, residual norm)

    Raises:
        SolverError: If the residual target is not met within the sweep limit
    """
    n = op.size
    if n == 1:
        return np.ones(1), float(abs(op.diag[0] - value))

    if max_sweeps is None:
        max_sweeps = get_settings().max_inverse_sweeps
    target = RESIDUAL_REL_BOUND * op.max_row_sum + 10 * tol
    close = [
        pair.vector for pair in lower_pairs
        if pair.vector is not None and value - pair.value < REORTHOGONALIZE_FACTOR * tol
    ]
    basis = np.column_stack(close) if close else None

    solve = _tridiagonal_solver(op, value)
    rng = np.random.default_rng(1000 + index)
    vector = rng.uniform(-1.0, 1.0, n)
    vector /= np.linalg.norm(vector)

    residual = math.inf
    for sweep in range(1, max_sweeps + 1):
        x = solve(vector)
        if basis is not None:
            for _ in range(2):
                x = x - basis @ (basis.T @ x)
        norm = float(np.linalg.norm(x))
        if not math.isfinite(norm) or norm == 0.0:
            raise SolverError(
                "inverse iteration produced a degenerate iterate",
                {"index": index, "value": value, "sweep": sweep, "norm": norm},
            )
        vector = x / norm
        residual = float(np.linalg.norm(op.matvec(vector) - value * vector))
        solver_logger.debug(f"index {index}: sweep {sweep} residual {residual:.3e} (target {target:.3e})")
        if sweep >= MIN_INVERSE_SWEEPS and residual <= target:
            return _sign_fixed(vector), residual

    raise SolverError(
        "inverse iteration did not converge",
        {"index": index, "value": value, "residual": residual, "target": target, "sweeps": max_sweeps},
    )


def resolution_tolerance(op: TridiagonalOperator) -> float:
    """Bisection tolerance that keeps halving down to the floating-point limit.

    Together with the relative term of the stopping rule this ends bisection
    once the bracket is a few ulps wide, also for an eigenvalue at exactly 0.
    """
    return EPS * EPS * op.max_row_sum


@dataclass(eq=False)
class _Bracket:
    """Bisection state of one eigenvalue of ``op`` (the full operator or a parity block)."""
    op: TridiagonalOperator
    index: int
    lower: float
    upper: float
    unfold: Optional[Callable[[np.ndarray], np.ndarray]] = None

    @property
    def value(self) -> float:
        return 0.5 * (self.lower + self.upper)

    def certified(self) -> bool:
        return eigenvalue_count_below(self.op, self.upper) - eigenvalue_count_below(self.op, self.lower) == 1

    def shrink(self, tol: float) -> None:
        self.lower, self.upper = _shrink_bracket(self.op, self.index, self.lower, self.upper, tol)


def _lowest_brackets(
    op: TridiagonalOperator,
    count: int,
    tol: float,
    unfold: Optional[Callable[[np.ndarray], np.ndarray]] = None,
) -> List[_Bracket]:
    count = min(count, op.size)
    return [_Bracket(op, index, a, b, unfold) for index, (a, b) in enumerate(_bisect_lowest(op, count, tol))]


def _refine_crowded(brackets: List[_Bracket], tol: float) -> None:
    """Bisect to the floating-point limit every bracket that is not isolated.

    A bracket is refined when it fails its Sturm certificate or when a
    neighbouring eigenvalue lies within ``REFINE_FACTOR*tol``.
    """
    spacing = REFINE_FACTOR * tol
    values = [bracket.value for bracket in brackets]
    crowded = []
    for position, bracket in enumerate(brackets):
        neighbours = values[max(position - 1, 0):position] + values[position + 1:position + 2]
        close = any(abs(values[position] - other) <= spacing for other in neighbours)
        crowded.append(close or not bracket.certified())
    for bracket, refine in zip(brackets, crowded):
        if refine:
            before = bracket.upper - bracket.lower
            bracket.shrink(resolution_tolerance(bracket.op))
            solver_logger.debug(
                f"refined crowded bracket of index {bracket.index} from width {before:.3e} "
                f"to [{bracket.lower:.17e}, {bracket.upper:.17e}]"
            )


def smallest_eigenvalues(
    op: TridiagonalOperator,
    count: int = 2,
    tol: Optional[float] = None,
    vectors: bool = True,
) -> Spectrum:
    """Compute the ``count`` lowest eigenpairs.

    A mirror-symmetric operator is solved as its even and odd blocks, so
    pairs of opposite parity never share a bracket however close they are.
    Brackets whose neighbour lies within ``REFINE_FACTOR*tol`` are bisected
    on to the floating-point limit before the values are reported.

    Args:
        op: Symmetric tridiagonal operator
        count: Number of eigenpairs, 1 <= count <= N
        tol: Absolute bisection tolerance (default ``default_rel_tol*max_row_sum``)
        vectors: Whether to compute eigenvectors

    Returns:
        Spectrum with ascending pairs

    Raises:
        ArgumentError: If count or tol violate the preconditions
        SolverError: If inverse iteration fails
    """
    if count < 1 or count > op.size:
        raise ArgumentError(f"count must lie in [1, {op.size}], got {count}")
    if tol is None:
        tol = default_tolerance(op)
    floor = 4 * EPS * op.max_row_sum
    if not tol >= floor:
        raise ArgumentError(f"tolerance {tol:.3e} is below the attainable floor {floor:.3e}")

    if op.is_mirror_symmetric:
        even, odd = op.parity_sectors()
        brackets = _lowest_brackets(even, count, tol, unfold_even) + _lowest_brackets(odd, count, tol, unfold_odd)
    else:
        brackets = _lowest_brackets(op, count, tol)
    brackets.sort(key=lambda bracket: bracket.value)
    _refine_crowded(brackets, tol)
    brackets = sorted(brackets, key=lambda bracket: bracket.value)[:count]

    pairs: List[EigenPair] = []
    block_pairs: Dict[int, List[EigenPair]] = {}
    for index, bracket in enumerate(brackets):
        certified = bracket.certified()
        if not certified:
            logger.warning(
                f"eigenvalue {index} bracket [{bracket.lower:.6e}, {bracket.upper:.6e}] is not isolated "
                f"at the floating-point limit"
            )
        value = bracket.value
        vector = residual = None
        if vectors:
            block = bracket.op
            # the shift never gets looser than the default tolerance
            shift_tol = min(tol, default_tolerance(block))
            sa, sb = _shrink_bracket(block, bracket.index, bracket.lower, bracket.upper, shift_tol)
            lower_pairs = block_pairs.setdefault(id(block), [])
            local, _ = inverse_iteration(block, 0.5 * (sa + sb), bracket.index, shift_tol, lower_pairs)
            lower_pairs.append(EigenPair(value, bracket.index, local))
            vector = _sign_fixed(bracket.unfold(local)) if bracket.unfold else local
            residual = float(np.linalg.norm(op.matvec(vector) - value * vector))
        pairs.append(EigenPair(value, index, vector, residual, (bracket.lower, bracket.upper), certified))
    return Spectrum(tuple(pairs))


def refine_gap(op: TridiagonalOperator, spectrum: Spectrum) -> Tuple[float, float]:
    """Bisect the two lowest brackets to the floating-point limit.

    Each bracket is refined on the parity block that certifies it, or on
    the full operator.

    Returns:
        Tuple of (gap, error bound)

    Raises:
        ArgumentError: If the spectrum holds fewer than two pairs
    """
    if len(spectrum) < 2:
        raise ArgumentError("refine_gap needs the two lowest eigenpairs")
    blocks = list(op.parity_sectors()) if op.is_mirror_symmetric else []
    ends = []
    for pair in spectrum.pairs[:2]:
        bracket = _Bracket(op, pair.index, *pair.bracket)
        for block in blocks:
            candidate = _Bracket(block, eigenvalue_count_below(block, bracket.lower), *pair.bracket)
            if candidate.certified():
                bracket = candidate
                break
        bracket.shrink(resolution_tolerance(bracket.op))
        ends.append((bracket.lower, bracket.upper))
    (a0, b0), (a1, b1) = ends
    gap = 0.5 * (a1 + b1) - 0.5 * (a0 + b0)
    error = 0.5 * ((b0 - a0) + (b1 - a1)) + 2 * pivot_floor(op)
    return gap, error
