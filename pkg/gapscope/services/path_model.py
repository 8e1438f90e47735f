"""Assembly of the operator H = L_gamma + u*delta_0 on the weighted path graph."""
import math
from dataclasses import dataclass
from functools import cached_property
from typing import List, Tuple

import numpy as np

from gapscope.core.exceptions import DimensionError
from gapscope.schemas.instance import PathSpec

SQRT2 = math.sqrt(2.0)


def _frozen(array) -> np.ndarray:
    out = np.array(array, dtype=float)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    """Symmetric tridiagonal operator stored as a diagonal and one off-diagonal.

    Attributes:
        diag: The N diagonal entries
        offdiag: The N-1 entries coupling consecutive vertices
    """
    diag: np.ndarray
    offdiag: np.ndarray

    def __post_init__(self):
        diag = _frozen(self.diag)
        offdiag = _frozen(self.offdiag)
        if diag.ndim != 1 or offdiag.ndim != 1 or offdiag.size != max(diag.size - 1, 0):
            raise DimensionError(
                f"off-diagonal of length {offdiag.size} does not fit diagonal of length {diag.size}"
            )
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "offdiag", offdiag)

    @property
    def size(self) -> int:
        return int(self.diag.size)

    @cached_property
    def max_row_sum(self) -> float:
        """Largest absolute row sum, the scale of every tolerance in the solvers."""
        sums = np.abs(self.diag).copy()
        sums[:-1] += np.abs(self.offdiag)
        sums[1:] += np.abs(self.offdiag)
        return float(sums.max())

    @cached_property
    def gershgorin_bounds(self) -> Tuple[float, float]:
        """Interval containing the whole spectrum."""
        radius = np.zeros(self.size)
        radius[:-1] += np.abs(self.offdiag)
        radius[1:] += np.abs(self.offdiag)
        return float((self.diag - radius).min()), float((self.diag + radius).max())

    @cached_property
    def diag_list(self) -> List[float]:
        return self.diag.tolist()

    @cached_property
    def offdiag_squared_list(self) -> List[float]:
        return (self.offdiag * self.offdiag).tolist()

    def matvec(self, f: np.ndarray) -> np.ndarray:
        """Apply the operator to a vector (or to the columns of a matrix)."""
        f = np.asarray(f)
        if f.shape[0] != self.size:
            raise DimensionError(f"vector of length {f.shape[0]} applied to operator of size {self.size}")
        diag = self.diag if f.ndim == 1 else self.diag[:, None]
        off = self.offdiag if f.ndim == 1 else self.offdiag[:, None]
        out = diag * f
        out[:-1] += off * f[1:]
        out[1:] += off * f[:-1]
        return out

    def to_dense(self) -> np.ndarray:
        dense = np.diag(self.diag)
        if self.size > 1:
            dense += np.diag(self.offdiag, 1) + np.diag(self.offdiag, -1)
        return dense

    def mirrored(self) -> "TridiagonalOperator":
        """The operator in reversed vertex order."""
        return TridiagonalOperator(self.diag[::-1], self.offdiag[::-1])

    @cached_property
    def is_mirror_symmetric(self) -> bool:
        """Odd size of at least 3 and unchanged by reversing the vertex order."""
        return (
            self.size >= 3
            and self.size % 2 == 1
            and np.array_equal(self.diag, self.diag[::-1])
            and np.array_equal(self.offdiag, self.offdiag[::-1])
        )

    def parity_sectors(self) -> Tuple["TridiagonalOperator", "TridiagonalOperator"]:
        """Even and odd blocks of a mirror-symmetric operator.

        The even block acts on vertices 0..k in the orthonormal basis e_0,
        (e_n + e_-n)/sqrt(2); only its first coupling changes, by a factor
        sqrt(2). The odd block is the restriction to vertices 1..k in the
        basis (e_n - e_-n)/sqrt(2). Map sector vectors back with
        :func:`unfold_even` and :func:`unfold_odd`.

        Raises:
            DimensionError: If the operator is not mirror-symmetric
        """
        if not self.is_mirror_symmetric:
            raise DimensionError(f"operator of size {self.size} has no parity splitting")
        center = self.size // 2
        even_off = self.offdiag[center:].copy()
        even_off[0] *= SQRT2
        even = TridiagonalOperator(self.diag[center:], even_off)
        odd = TridiagonalOperator(self.diag[center + 1:], self.offdiag[center + 1:])
        return even, odd


def unfold_even(h) -> np.ndarray:
    """Full vector on -k..k from an even-sector vector on 0..k (norm preserved)."""
    h = np.asarray(h, dtype=float)
    side = h[1:] / SQRT2
    return np.concatenate([side[::-1], h[:1], side])


def unfold_odd(h) -> np.ndarray:
    """Full vector on -k..k from an odd-sector vector on 1..k (norm preserved)."""
    side = np.asarray(h, dtype=float) / SQRT2
    return np.concatenate([-side[::-1], [0.0], side])


def assemble(spec: PathSpec) -> TridiagonalOperator:
    """Assemble H_gamma for a validated instance.

    Args:
        spec: Problem instance

    Returns:
        Operator with diag = incident weight sums (+u at vertex 0) and
        offdiag = -gamma on each edge
    """
    weights = spec.edge_weights()
    diag = np.zeros(spec.N)
    diag[:-1] += weights
    diag[1:] += weights
    diag[spec.center] += spec.u
    return TridiagonalOperator(diag, -weights)


def quadratic_form(spec: PathSpec, f) -> float:
    """Evaluate q_{w,u}[f] = sum over edges of gamma*|f(v+1)-f(v)|^2 + u*|f(0)|^2.

    Raises:
        DimensionError: If f does not have 2k+1 entries
    """
    f = np.asarray(f)
    if f.ndim != 1 or f.size != spec.N:
        raise DimensionError(f"expected a vector of length N={spec.N}, got shape {f.shape}")
    jumps = np.abs(np.diff(f)) ** 2
    return float(np.dot(spec.edge_weights(), jumps) + spec.u * abs(f[spec.center]) ** 2)


def bilinear_pairing(op: TridiagonalOperator, f) -> float:
    """Real part of <f, H f>; equals the quadratic form of the instance op was built from."""
    f = np.asarray(f)
    return float(np.real(np.vdot(f, op.matvec(f))))
