import math

import numpy as np
import pytest

from spaghetti.errors import DegenerateInput
from spaghetti.kernel import (
    KernelBasis,
    design_matrix,
    kernel_value,
    roughness_matrix,
    roughness_quadrature_oracle,
)


def test_kernel_value_known_points():
    basis = KernelBasis(np.array([0.0, 2.0]), sigma=1.0)
    assert kernel_value(basis, 0, 0.0) == 1.0
    # exp(-1/2) one sigma out
    assert math.isclose(float(kernel_value(basis, 0, 1.0)), 0.6065306597126334, rel_tol=1e-15)


def test_kernel_value_far_field_is_negligible():
    basis = KernelBasis(np.array([0.0]), sigma=1.0)
    assert float(kernel_value(basis, 0, 10.0)) <= 2e-22


def test_design_matrix_matches_direct_formula():
    basis = KernelBasis(np.array([0.0, 1.0, 3.0]), sigma=0.7)
    xs = np.array([0.5, 2.0])
    design = design_matrix(basis, xs)
    assert design.shape == (2, 3)
    for row, x in enumerate(xs):
        for col, center in enumerate(basis.centers):
            u = (x - center) / basis.sigma
            assert math.isclose(design[row, col], math.exp(-0.5 * u * u), rel_tol=1e-15)


def test_basis_validation():
    with pytest.raises(DegenerateInput):
        KernelBasis(np.array([0.0, 1.0]), sigma=0.0)
    with pytest.raises(DegenerateInput):
        KernelBasis(np.array([]), sigma=1.0)


def test_roughness_diagonal_closed_form():
    for sigma in (0.5, 1.0, 2.0):
        rough = roughness_matrix(KernelBasis(np.array([0.0, 5.0]), sigma))
        expected = 3.0 * math.sqrt(math.pi) / (4.0 * sigma**3)
        assert math.isclose(rough.data[0, 0], expected, rel_tol=1e-12)
    rough = roughness_matrix(KernelBasis(np.array([0.0]), 1.0))
    assert math.isclose(rough.data[0, 0], 1.329340388179137, rel_tol=1e-12)


def test_roughness_entries_match_quadrature():
    basis = KernelBasis(np.array([0.0, 0.7, 1.9, 4.0]), sigma=1.0)
    rough = roughness_matrix(basis).data
    for j, k in ((0, 0), (0, 1), (0, 3), (1, 2)):
        reference = roughness_quadrature_oracle(basis, j, k)
        assert math.isclose(rough[j, k], reference, rel_tol=1e-10)


def test_roughness_scales_as_inverse_cube():
    # stretching x and sigma together leaves t alone, so entries scale 1/s^3
    scale = 3.7
    base = roughness_matrix(KernelBasis(np.array([0.0, 1.0, 2.5]), 0.8)).data
    stretched = roughness_matrix(KernelBasis(scale * np.array([0.0, 1.0, 2.5]), 0.8 * scale)).data
    np.testing.assert_allclose(stretched, base / scale**3, rtol=1e-12)


def test_roughness_is_positive_semidefinite():
    rng = np.random.default_rng(29)
    centers = np.sort(rng.uniform(0.0, 8.0, size=6))
    rough = roughness_matrix(KernelBasis(centers, 1.3)).data
    for _ in range(100):
        v = rng.normal(size=6)
        assert v @ rough @ v >= -1e-12 * (v @ v)


def test_roughness_of_separated_kernels_decays():
    basis = KernelBasis(np.array([0.0, 14.0]), sigma=1.0)
    rough = roughness_matrix(basis).data
    assert abs(rough[0, 1]) / rough[0, 0] < 1e-12
