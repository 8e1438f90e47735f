"""
Tests for the Sturm-count bisection eigensolver.

Core claims:
    - eigenvalue_count_below counts eigenvalues strictly below a shift
    - smallest_eigenvalues reproduces hand-derived spectra and eigenvectors
    - every bracket is certified and every eigenvector meets the residual bound
    - lambda_0 is non-decreasing in u, lambda_1 of unit weights ignores u
    - refine_gap resolves gaps far below the row-sum scale
    - mirror-symmetric operators are solved block by block, so near-degenerate
      pairs of opposite parity stay certified with a positive gap
    - clusters narrower than the tolerance are bisected apart
"""
import math

import numpy as np
import pytest
from pytest import approx

from gapscope.core.exceptions import ArgumentError, SolverError
from gapscope.schemas.instance import PathSpec, WeightProfile
from gapscope.services.eigensolve import (
    EPS,
    RESIDUAL_REL_BOUND,
    default_tolerance,
    eigenvalue_count_below,
    inverse_iteration,
    refine_gap,
    smallest_eigenvalues,
)
from gapscope.services.path_model import TridiagonalOperator, assemble
from gapscope.services.theory import check_ground_state_structure

SQRT3 = math.sqrt(3.0)


def _free_lambda1(N: int) -> float:
    return 4.0 * math.sin(math.pi / (2 * N)) ** 2


def _accuracy(op) -> float:
    """Attainable absolute error of a bisected eigenvalue at the default tolerance."""
    return 0.5 * default_tolerance(op) + 4 * EPS * op.max_row_sum


# == 1. Sturm count ==========================================================

class TestEigenvalueCountBelow:
    def test_three_vertex_path(self):
        assert eigenvalue_count_below(assemble(PathSpec(k=1)), 0.5) == 1

    def test_negative_shift(self):
        op = assemble(PathSpec(k=20, weights=WeightProfile.power_law(1.0, 2.5), u=3.0))
        assert eigenvalue_count_below(op, -1e-3) == 0

    def test_with_potential(self):
        assert eigenvalue_count_below(assemble(PathSpec(k=1, u=1.0)), 2.0) == 2

    def test_above_spectrum(self):
        op = assemble(PathSpec(k=4, u=2.0))
        assert eigenvalue_count_below(op, op.gershgorin_bounds[1] + 1.0) == op.size

    def test_non_finite_shift(self):
        with pytest.raises(ArgumentError):
            eigenvalue_count_below(assemble(PathSpec(k=1)), math.nan)

    def test_matches_dense_counts(self):
        rng = np.random.default_rng(5)
        op = assemble(PathSpec(k=15, weights=WeightProfile.explicit(rng.uniform(0.5, 2.0, 15)), u=4.0))
        values = np.linalg.eigvalsh(op.to_dense())
        for x in rng.uniform(-0.5, op.gershgorin_bounds[1], 25):
            assert eigenvalue_count_below(op, x) == int(np.sum(values < x))


# == 2. Lowest eigenpairs ====================================================

class TestSmallestEigenvalues:
    def test_three_vertices_with_potential(self):
        op = assemble(PathSpec(k=1, u=1.0))
        spectrum = smallest_eigenvalues(op, count=2)
        assert spectrum[0].value == approx(2.0 - SQRT3, abs=_accuracy(op))
        assert spectrum[1].value == approx(1.0, abs=_accuracy(op))
        assert spectrum.gap == approx(SQRT3 - 1.0, abs=2 * _accuracy(op))

    def test_tight_tolerance_reaches_rounding_level(self):
        op = assemble(PathSpec(k=1, u=1.0))
        spectrum = smallest_eigenvalues(op, count=2, tol=4 * EPS * op.max_row_sum)
        assert spectrum[0].value == approx(2.0 - SQRT3, abs=1e-14)
        assert spectrum[1].value == approx(1.0, abs=1e-14)

    def test_ground_vector_by_hand(self):
        ground = smallest_eigenvalues(assemble(PathSpec(k=1, u=1.0)), count=1)[0]
        expected = np.array([1.0, SQRT3 - 1.0, 1.0])
        expected /= np.linalg.norm(expected)
        assert np.allclose(ground.vector, expected, atol=1e-12)

    def test_five_vertex_free_path(self):
        op = assemble(PathSpec(k=2))
        spectrum = smallest_eigenvalues(op, count=2)
        assert spectrum[0].value == approx(0.0, abs=_accuracy(op))
        assert spectrum[1].value == approx(0.3819660112501051, abs=_accuracy(op))

    def test_vectors_normalized_and_certified(self):
        rng = np.random.default_rng(12)
        for _ in range(15):
            k = int(rng.integers(1, 150))
            spec = PathSpec(k=k, weights=WeightProfile.explicit(rng.uniform(0.5, 2.0, k)), u=float(rng.uniform(0, 10)))
            op = assemble(spec)
            spectrum = smallest_eigenvalues(op, count=2)
            for pair in spectrum.pairs:
                assert pair.certified
                assert abs(np.linalg.norm(pair.vector) - 1.0) <= 1e-12
                assert pair.residual <= RESIDUAL_REL_BOUND * op.max_row_sum
                a, b = pair.bracket
                assert eigenvalue_count_below(op, b) - eigenvalue_count_below(op, a) == 1
                assert pair.value >= -4 * EPS * op.max_row_sum

    def test_ascending_and_positive_gap(self):
        op = assemble(PathSpec(k=40, weights=WeightProfile.power_law(2.0, 1.5), u=0.3))
        spectrum = smallest_eigenvalues(op, count=4, vectors=False)
        assert np.all(np.diff(spectrum.values) > 0)
        assert spectrum.gap > 0

    def test_vectors_orthogonal(self):
        op = assemble(PathSpec(k=30, u=1.0))
        spectrum = smallest_eigenvalues(op, count=3)
        basis = np.column_stack([pair.vector for pair in spectrum.pairs])
        assert np.allclose(basis.T @ basis, np.eye(3), atol=1e-10)

    def test_count_out_of_range(self):
        op = assemble(PathSpec(k=1))
        with pytest.raises(ArgumentError):
            smallest_eigenvalues(op, count=4)
        with pytest.raises(ArgumentError):
            smallest_eigenvalues(op, count=0)

    def test_tolerance_below_floor(self):
        op = assemble(PathSpec(k=3))
        with pytest.raises(ArgumentError):
            smallest_eigenvalues(op, tol=EPS * op.max_row_sum)

    def test_loose_tolerance_keeps_vectors_accurate(self):
        op = assemble(PathSpec(k=200, u=1.0))
        tol = 1e-6 * op.max_row_sum
        spectrum = smallest_eigenvalues(op, count=2, tol=tol)
        tight = smallest_eigenvalues(op, count=2)
        for loose_pair, tight_pair in zip(spectrum.pairs, tight.pairs):
            assert abs(loose_pair.value - tight_pair.value) <= tol
            assert loose_pair.residual <= RESIDUAL_REL_BOUND * op.max_row_sum + 10 * tol
            assert abs(loose_pair.vector @ tight_pair.vector) == approx(1.0, abs=1e-9)

    def test_default_tolerance_scales_with_rows(self):
        op = assemble(PathSpec(k=3, u=10.0))
        assert default_tolerance(op) == approx(1e-14 * 14.0)
        assert default_tolerance(op, 1e-6) == approx(1.4e-5)


# == 3. Properties in u ======================================================

class TestPotentialDependence:
    def test_lambda0_non_decreasing(self):
        for k in (5, 50):
            values = [
                smallest_eigenvalues(assemble(PathSpec(k=k, u=u)), count=1, vectors=False)[0].value
                for u in (0.0, 0.5, 1.0, 2.0, 4.0)
            ]
            assert all(b >= a - 1e-13 for a, b in zip(values, values[1:]))

    @pytest.mark.parametrize("u", [0.1, 1.0, 10.0, 1000.0])
    def test_lambda1_ignores_potential(self, u):
        op = assemble(PathSpec(k=100, u=u))
        spectrum = smallest_eigenvalues(op, count=2, vectors=False)
        assert abs(spectrum[1].value - _free_lambda1(201)) <= 1e-10


# == 4. Gap refinement and failures ==========================================

class TestRefineAndFailures:
    def test_refine_gap_free_path(self):
        op = assemble(PathSpec(k=2000))
        spectrum = smallest_eigenvalues(op, count=2, vectors=False)
        gap, error = refine_gap(op, spectrum)
        assert error <= spectrum.gap_error
        assert abs(gap - _free_lambda1(4001)) <= 1e-13

    def test_refine_needs_two_pairs(self):
        op = assemble(PathSpec(k=2))
        with pytest.raises(ArgumentError):
            refine_gap(op, smallest_eigenvalues(op, count=1))

    def test_inverse_iteration_sweep_limit(self):
        op = assemble(PathSpec(k=10, u=1.0))
        value = smallest_eigenvalues(op, count=1, vectors=False)[0].value
        with pytest.raises(SolverError) as info:
            inverse_iteration(op, value, 0, default_tolerance(op), max_sweeps=2)
        assert info.value.diagnostics["sweeps"] == 2
        assert "sweeps=2" in str(info.value)

    def test_solver_error_context(self):
        error = SolverError("inverse iteration did not converge", {"index": 1})
        extended = error.with_context(k=500)
        assert extended.diagnostics == {"index": 1, "k": 500}
        assert str(extended) == "inverse iteration did not converge (index=1, k=500)"


# == 5. Parity blocks and small operators ====================================

class TestParityAndSmallOperators:
    def test_two_by_two_operator(self):
        op = TridiagonalOperator([2.0, 1.0], [-1.0])
        spectrum = smallest_eigenvalues(op, count=2)
        sqrt5 = math.sqrt(5.0)
        assert spectrum.values == approx([(3.0 - sqrt5) / 2.0, (3.0 + sqrt5) / 2.0], abs=_accuracy(op))
        basis = np.column_stack([pair.vector for pair in spectrum.pairs])
        assert np.allclose(basis.T @ basis, np.eye(2), atol=1e-12)
        assert all(pair.residual <= RESIDUAL_REL_BOUND * op.max_row_sum for pair in spectrum.pairs)

    def test_singular_two_by_two_shift(self):
        op = TridiagonalOperator([1.0, 1.0], [-1.0])
        vector, residual = inverse_iteration(op, 0.0, 0, default_tolerance(op))
        assert vector == approx([1.0 / math.sqrt(2.0)] * 2, abs=1e-12)
        assert residual <= 1e-14

    def test_three_vertices_split_into_blocks(self):
        op = assemble(PathSpec(k=1, u=1.0))
        even, odd = op.parity_sectors()
        assert even.diag.tolist() == [3.0, 1.0]
        assert even.offdiag == approx([-math.sqrt(2.0)])
        assert odd.diag.tolist() == [1.0]
        spectrum = smallest_eigenvalues(op, count=3)
        assert spectrum.values == approx(np.linalg.eigvalsh(op.to_dense()), abs=_accuracy(op))
        assert spectrum[1].vector == approx([1.0 / math.sqrt(2.0), 0.0, -1.0 / math.sqrt(2.0)], abs=1e-12)

    def test_cluster_below_tolerance_is_separated(self):
        delta = 2e-15
        op = TridiagonalOperator([0.0, 1.0, delta], [0.0, 0.0])
        spectrum = smallest_eigenvalues(op, count=2, vectors=False)
        assert all(pair.certified for pair in spectrum.pairs)
        assert spectrum[0].value == approx(0.0, abs=1e-30)
        assert spectrum.gap == approx(delta, rel=1e-12)

    @pytest.mark.parametrize("k", [6400, 10000])
    def test_decaying_weights_without_potential(self, k):
        spec = PathSpec(k=k, weights=WeightProfile.power_law(1.0, 2.0))
        op = assemble(spec)
        spectrum = smallest_eigenvalues(op, count=2)
        assert spectrum.gap > 0
        assert all(pair.certified for pair in spectrum.pairs)
        gap, error = refine_gap(op, spectrum)
        assert abs(spectrum.gap - gap) <= error + spectrum.gap_error
        report = check_ground_state_structure(spec, spectrum[0], spectrum.gap, default_tolerance(op))
        assert report.positive
        assert report.symmetric_defect <= 1e-10
        assert report.monotone_defect <= 1e-12
        assert abs(spectrum[1].vector[k]) <= 1e-12
