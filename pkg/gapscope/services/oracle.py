"""Dense cyclic-Jacobi oracle for cross-validating the tridiagonal solver."""
import logging
from typing import List, Optional, Tuple

import numpy as np

from gapscope.core.config import get_settings
from gapscope.core.exceptions import OracleSizeError, SolverError
from gapscope.services.eigensolve import EigenPair, Spectrum
from gapscope.services.path_model import TridiagonalOperator

logger = logging.getLogger(__name__)


def round_robin_schedule(n: int) -> List[Tuple[np.ndarray, np.ndarray]]:
    """Disjoint (p, q) pairings covering every index pair once per sweep.

    Circle-method tournament: index 0 stays fixed, the rest rotate. With odd n
    a phantom index n is added and its pairings dropped.
    """
    players = list(range(n if n % 2 == 0 else n + 1))
    m = len(players)
    rounds = []
    for _ in range(m - 1):
        p_list, q_list = [], []
        for i in range(m // 2):
            a, b = players[i], players[m - 1 - i]
            if a < n and b < n:
                p_list.append(min(a, b))
                q_list.append(max(a, b))
        rounds.append((np.array(p_list, dtype=int), np.array(q_list, dtype=int)))
        players = [players[0], players[-1]] + players[1:-1]
    return rounds


def _off_norm(A: np.ndarray) -> float:
    return float(np.linalg.norm(A - np.diag(np.diag(A))))


def jacobi_eigh(
    A: np.ndarray,
    rel_threshold: Optional[float] = None,
    max_sweeps: Optional[int] = None,
) -> Tuple[np.ndarray, np.ndarray, int]:
    """Eigen-decomposition of a dense symmetric matrix by cyclic Jacobi rotations.

    Each step rotates a full set of disjoint index pairs at once.

    Args:
        A: Symmetric matrix
        rel_threshold: Stop once the off-diagonal Frobenius norm is at most
            this times ||A||_F (defaults to settings)
        max_sweeps: Sweep limit (defaults to settings)

    Returns:
        Tuple of (ascending eigenvalues, eigenvector columns, sweeps used)

    Raises:
        SolverError: If the threshold is not reached within the sweep limit
    """
    settings = get_settings()
    if rel_threshold is None:
        rel_threshold = settings.jacobi_rel_threshold
    if max_sweeps is None:
        max_sweeps = settings.jacobi_max_sweeps

    A = np.array(A, dtype=float)
    n = A.shape[0]
    V = np.eye(n)
    threshold = rel_threshold * float(np.linalg.norm(A))
    schedule = round_robin_schedule(n)

    sweeps = 0
    while _off_norm(A) > threshold:
        if sweeps >= max_sweeps:
            raise SolverError(
                "Jacobi iteration did not converge",
                {"sweeps": sweeps, "off_norm": _off_norm(A), "threshold": threshold, "n": n},
            )
        for P, Q in schedule:
            if P.size == 0:
                continue
            apq = A[P, Q]
            app = A[P, P]
            aqq = A[Q, Q]
            active = apq != 0.0
            safe_apq = np.where(active, apq, 1.0)
            tau = (aqq - app) / (2.0 * safe_apq)
            t = np.where(tau >= 0.0, 1.0, -1.0) / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            t = np.where(active, t, 0.0)
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c

            rows_p = A[P, :].copy()
            rows_q = A[Q, :].copy()
            A[P, :] = c[:, None] * rows_p - s[:, None] * rows_q
            A[Q, :] = s[:, None] * rows_p + c[:, None] * rows_q
            cols_p = A[:, P].copy()
            cols_q = A[:, Q].copy()
            A[:, P] = cols_p * c - cols_q * s
            A[:, Q] = cols_p * s + cols_q * c
            A[P, Q] = 0.0
            A[Q, P] = 0.0

            vp = V[:, P].copy()
            vq = V[:, Q].copy()
            V[:, P] = vp * c - vq * s
            V[:, Q] = vp * s + vq * c
        sweeps += 1

    values = np.diag(A).copy()
    order = np.argsort(values, kind="stable")
    return values[order], V[:, order], sweeps


def dense_oracle_spectrum(op: TridiagonalOperator, vectors: bool = False) -> Spectrum:
    """Full spectrum of a small operator from the dense Jacobi method.

    Raises:
        OracleSizeError: If N exceeds the oracle size guard
    """
    limit = get_settings().oracle_max_size
    if op.size > limit:
        logger.warning(f"Refusing dense oracle for N={op.size} (limit {limit})")
        raise OracleSizeError(f"dense oracle is limited to N <= {limit}, got N={op.size}")

    values, basis, sweeps = jacobi_eigh(op.to_dense())
    logger.debug(f"Jacobi oracle converged in {sweeps} sweeps for N={op.size}")
    pairs = []
    for index, value in enumerate(values):
        vector = residual = None
        if vectors:
            vector = basis[:, index]
            if vector[int(np.argmax(np.abs(vector)))] < 0:
                vector = -vector
            residual = float(np.linalg.norm(op.matvec(vector) - value * vector))
        pairs.append(EigenPair(float(value), index, vector, residual, (float(value), float(value))))
    return Spectrum(tuple(pairs))
