"""
Tests for the dense cyclic-Jacobi oracle.

Core claims:
    - the round-robin schedule pairs every index with every other exactly once per sweep
    - jacobi_eigh diagonalizes dense symmetric matrices
    - dense_oracle_spectrum reproduces hand-derived spectra
    - bisection and the oracle agree on random instances
"""
import math
from itertools import combinations

import numpy as np
import pytest
from pytest import approx

from gapscope.core.exceptions import OracleSizeError, SolverError
from gapscope.schemas.instance import PathSpec
from gapscope.services.eigensolve import smallest_eigenvalues
from gapscope.services.oracle import dense_oracle_spectrum, jacobi_eigh, round_robin_schedule
from gapscope.services.path_model import assemble
from gapscope.services.verification import Verifier


class TestRoundRobinSchedule:
    @pytest.mark.parametrize("n", [2, 5, 6, 9])
    def test_every_pair_once(self, n):
        seen = []
        for p, q in round_robin_schedule(n):
            indices = np.concatenate([p, q])
            assert len(set(indices.tolist())) == indices.size
            seen.extend(zip(p.tolist(), q.tolist()))
        assert sorted(seen) == list(combinations(range(n), 2))


class TestJacobi:
    def test_random_symmetric_matrix(self):
        rng = np.random.default_rng(1)
        A = rng.normal(size=(40, 40))
        A = A + A.T
        values, V, sweeps = jacobi_eigh(A)
        assert np.allclose(values, np.linalg.eigvalsh(A), atol=1e-11)
        assert np.allclose(V.T @ V, np.eye(40), atol=1e-11)
        assert np.allclose(A @ V, V * values, atol=1e-10)
        assert sweeps <= 30

    def test_diagonal_needs_no_sweep(self):
        values, _, sweeps = jacobi_eigh(np.diag([3.0, 1.0, 2.0]))
        assert values.tolist() == [1.0, 2.0, 3.0]
        assert sweeps == 0

    def test_tiny_off_diagonal_is_rotated(self):
        A = np.array([[0.0, 1e-9, 0.0], [1e-9, 1.0, 0.0], [0.0, 0.0, 3.0]])
        values, V, sweeps = jacobi_eigh(A)
        assert sweeps >= 1
        assert values == approx([-1e-18, 1.0 + 1e-18, 3.0], abs=1e-20)
        assert np.allclose(A @ V, V * values, atol=1e-15)
        assert abs(V[1, 0]) == approx(1e-9, rel=1e-6)

    def test_sweep_limit(self):
        A = np.array([[2.0, 1.0], [1.0, 2.0]])
        with pytest.raises(SolverError) as info:
            jacobi_eigh(A, max_sweeps=0)
        assert info.value.diagnostics["n"] == 2


class TestDenseOracleSpectrum:
    def test_three_vertex_path(self):
        assert dense_oracle_spectrum(assemble(PathSpec(k=1))).values == approx([0.0, 1.0, 3.0], abs=1e-13)

    def test_three_vertices_with_potential(self):
        values = dense_oracle_spectrum(assemble(PathSpec(k=1, u=1.0))).values
        assert values == approx([2.0 - math.sqrt(3.0), 1.0, 2.0 + math.sqrt(3.0)], abs=1e-13)

    def test_five_vertex_formula(self):
        expected = [2.0 - 2.0 * math.cos(math.pi * j / 5) for j in range(5)]
        assert dense_oracle_spectrum(assemble(PathSpec(k=2))).values == approx(expected, abs=1e-13)

    def test_five_vertex_free_path_converges(self):
        spectrum = dense_oracle_spectrum(assemble(PathSpec(k=2)), vectors=True)
        assert spectrum[0].value == approx(0.0, abs=1e-14)
        assert np.allclose(spectrum[0].vector, np.full(5, 1.0 / math.sqrt(5.0)), atol=1e-12)

    def test_vectors_sign_fixed(self):
        spectrum = dense_oracle_spectrum(assemble(PathSpec(k=3, u=2.0)), vectors=True)
        for pair in spectrum.pairs:
            assert pair.vector[np.argmax(np.abs(pair.vector))] > 0
            assert pair.residual <= 1e-12

    def test_size_guard(self):
        with pytest.raises(OracleSizeError):
            dense_oracle_spectrum(assemble(PathSpec(k=501)))


class TestOracleEquivalence:
    def test_random_instances(self):
        verifier = Verifier()
        rng = np.random.default_rng(99)
        for _ in range(25):
            op = assemble(verifier.random_oracle_instance(rng))
            bisected = smallest_eigenvalues(op, count=2, vectors=False).values
            dense = dense_oracle_spectrum(op).values[:2]
            assert np.max(np.abs(bisected - dense)) <= 1e-10

    def test_suite_passes_at_loose_tolerance(self):
        results = Verifier(tol_rel=1e-6).oracle_equivalence(instances=10)
        assert [r.name for r in results] == ["oracle_equivalence", "eigenvector_residual", "sturm_count_certified"]
        assert all(r.passed for r in results[:2])
