"""
Tests for instance validation and operator assembly.

Core claims:
    - assemble matches the Laplacian-plus-potential definition entrywise
    - PowerLaw weights clamp the center edge and mirror about vertex 0
    - quadratic_form equals the bilinear pairing <f, H f>
    - the operator is positive semi-definite and mirror-symmetric
    - the even and odd blocks of a mirror-symmetric operator carry its whole spectrum
    - invalid instances are rejected at construction
"""
import math

import numpy as np
import pytest
from pydantic import ValidationError
from pytest import approx

from gapscope.core.exceptions import DimensionError
from gapscope.schemas.instance import PathSpec, SpecFamily, WeightKind, WeightProfile
from gapscope.services.path_model import (
    TridiagonalOperator,
    assemble,
    bilinear_pairing,
    quadratic_form,
    unfold_even,
    unfold_odd,
)

EPS = np.finfo(float).eps


def _random_spec(rng) -> PathSpec:
    k = int(rng.integers(1, 60))
    kind = rng.integers(0, 3)
    if kind == 0:
        weights = WeightProfile.unit()
    elif kind == 1:
        weights = WeightProfile.power_law(float(rng.uniform(0.5, 2.0)), float(rng.uniform(1.1, 3.0)))
    else:
        weights = WeightProfile.explicit(rng.uniform(0.5, 2.0, k))
    return PathSpec(k=k, weights=weights, u=float(rng.uniform(0.0, 10.0)))


# == 1. Assembly =============================================================

class TestAssemble:
    def test_three_vertices_free(self):
        op = assemble(PathSpec(k=1))
        assert op.diag.tolist() == [1.0, 2.0, 1.0]
        assert op.offdiag.tolist() == [-1.0, -1.0]

    def test_potential_only_at_center(self):
        op = assemble(PathSpec(k=1, u=1.0))
        assert op.diag.tolist() == [1.0, 3.0, 1.0]
        assert op.offdiag.tolist() == [-1.0, -1.0]

    def test_unit_pattern(self):
        op = assemble(PathSpec(k=6))
        assert op.diag.tolist() == [1.0] + [2.0] * 11 + [1.0]
        assert np.all(op.offdiag == -1.0)

    def test_power_law_clamp_at_center(self):
        op = assemble(PathSpec(k=2, weights=WeightProfile.power_law(1.0, 2.0)))
        assert op.offdiag.tolist() == [-1.0, -1.0, -1.0, -1.0]

    def test_power_law_first_decay_at_n2(self):
        spec = PathSpec(k=3, weights=WeightProfile.power_law(1.0, 2.0))
        weights = spec.edge_weights()
        assert weights.tolist() == [0.25, 1.0, 1.0, 1.0, 1.0, 0.25]
        assert assemble(spec).offdiag[-1] == -0.25

    def test_operator_is_read_only(self):
        op = assemble(PathSpec(k=2))
        with pytest.raises(ValueError):
            op.diag[0] = 5.0

    def test_mismatched_arrays_rejected(self):
        with pytest.raises(DimensionError):
            TridiagonalOperator(np.ones(3), np.ones(3))

    def test_mirror_equivariance(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            op = assemble(_random_spec(rng))
            mirrored = op.mirrored()
            assert np.array_equal(op.diag, mirrored.diag)
            assert np.array_equal(op.offdiag, mirrored.offdiag)

    def test_gershgorin_inside_twice_row_sum(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            op = assemble(_random_spec(rng))
            low, high = op.gershgorin_bounds
            assert low >= -1e-12
            assert high <= 2 * op.max_row_sum

    def test_matvec_matches_dense(self):
        op = assemble(PathSpec(k=5, weights=WeightProfile.power_law(1.5, 1.5), u=2.0))
        f = np.random.default_rng(3).normal(size=(op.size, 2))
        assert np.allclose(op.matvec(f), op.to_dense() @ f)


# == 2. Quadratic form =======================================================

class TestQuadraticForm:
    def test_constant_vector_free(self):
        assert quadratic_form(PathSpec(k=4), np.ones(9)) == 0.0

    def test_center_term_vanishes(self):
        assert quadratic_form(PathSpec(k=1, u=5.0), [1.0, 0.0, 1.0]) == approx(2.0)

    def test_center_spike(self):
        assert quadratic_form(PathSpec(k=1, u=1.0), [0.0, 1.0, 0.0]) == approx(3.0)

    def test_length_mismatch(self):
        with pytest.raises(DimensionError):
            quadratic_form(PathSpec(k=2), np.ones(4))

    def test_matches_bilinear_pairing(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            spec = _random_spec(rng)
            op = assemble(spec)
            for _ in range(20):
                f = rng.normal(size=spec.N)
                bound = 8 * EPS * float(f @ f) * op.max_row_sum
                assert abs(quadratic_form(spec, f) - bilinear_pairing(op, f)) <= bound

    def test_non_negative(self):
        rng = np.random.default_rng(11)
        for _ in range(30):
            spec = _random_spec(rng)
            assert quadratic_form(spec, rng.normal(size=spec.N)) >= 0.0

    def test_constant_vector_positive_with_potential(self):
        spec = PathSpec(k=3, u=0.5)
        assert quadratic_form(spec, np.ones(spec.N)) == approx(0.5)


# == 3. Parity blocks ========================================================

class TestParitySectors:
    def test_assembled_operators_are_mirror_symmetric(self):
        rng = np.random.default_rng(21)
        for _ in range(20):
            assert assemble(_random_spec(rng)).is_mirror_symmetric

    def test_blocks_reproduce_the_spectrum(self):
        rng = np.random.default_rng(22)
        for _ in range(10):
            op = assemble(_random_spec(rng))
            even, odd = op.parity_sectors()
            assert even.size + odd.size == op.size
            blocks = [np.linalg.eigvalsh(block.to_dense()) for block in (even, odd)]
            merged = np.sort(np.concatenate(blocks))
            assert np.allclose(merged, np.linalg.eigvalsh(op.to_dense()), atol=1e-12 * op.max_row_sum)

    def test_unfolded_vectors(self):
        even = unfold_even([1.0, 2.0, 3.0])
        odd = unfold_odd([2.0, 3.0])
        r = math.sqrt(2.0)
        assert even.tolist() == approx([3.0 / r, r, 1.0, r, 3.0 / r])
        assert odd.tolist() == approx([-3.0 / r, -r, 0.0, r, 3.0 / r])
        assert np.linalg.norm(even) == approx(math.sqrt(14.0))
        assert np.linalg.norm(odd) == approx(math.sqrt(13.0))

    def test_unfolded_block_eigenvector(self):
        op = assemble(PathSpec(k=6, weights=WeightProfile.power_law(1.5, 2.0), u=2.0))
        even, _ = op.parity_sectors()
        values, vectors = np.linalg.eigh(even.to_dense())
        full = unfold_even(vectors[:, 0])
        assert np.allclose(op.matvec(full), values[0] * full, atol=1e-12)

    def test_asymmetric_operator_has_no_blocks(self):
        op = TridiagonalOperator([1.0, 2.0, 3.0], [-1.0, -1.0])
        assert not op.is_mirror_symmetric
        assert not TridiagonalOperator([1.0, 1.0], [-1.0]).is_mirror_symmetric
        with pytest.raises(DimensionError):
            op.parity_sectors()


# == 4. Validation ===========================================================

class TestValidation:
    def test_k_must_be_positive(self):
        with pytest.raises(ValidationError):
            PathSpec(k=0)

    def test_negative_potential(self):
        with pytest.raises(ValidationError):
            PathSpec(k=2, u=-0.1)

    def test_non_finite_potential(self):
        with pytest.raises(ValidationError):
            PathSpec(k=2, u=math.inf)

    def test_non_positive_explicit_weight(self):
        with pytest.raises(ValidationError):
            WeightProfile.explicit([1.0, 0.0, 2.0])

    def test_mu_must_exceed_one(self):
        with pytest.raises(ValidationError):
            WeightProfile.power_law(1.0, 1.0)

    def test_asymmetric_full_list_rejected(self):
        with pytest.raises(ValidationError, match="not symmetric"):
            PathSpec(k=2, weights=WeightProfile.explicit([1.0, 2.0, 3.0, 4.0]))

    def test_symmetric_full_list_accepted(self):
        spec = PathSpec(k=2, weights=WeightProfile.explicit([3.0, 2.0, 2.0, 3.0]))
        assert spec.edge_weights().tolist() == [3.0, 2.0, 2.0, 3.0]

    def test_half_list_is_mirrored(self):
        spec = PathSpec(k=3, weights=WeightProfile.explicit([1.0, 2.0, 3.0]))
        assert spec.edge_weights().tolist() == [3.0, 2.0, 1.0, 1.0, 2.0, 3.0]

    def test_wrong_explicit_length(self):
        with pytest.raises(ValidationError, match="expected k=4"):
            PathSpec(k=4, weights=WeightProfile.explicit([1.0, 2.0, 3.0]))

    def test_explicit_kind_needs_values(self):
        with pytest.raises(ValidationError):
            WeightProfile(kind=WeightKind.EXPLICIT)

    def test_family_labels(self):
        family = SpecFamily(weights=WeightProfile.power_law(1.0, 2.0), u=0.0)
        assert family.instance(5).N == 11
        assert family.description == "powerlaw(C=1;mu=2), u=0"
