import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from liegeo.algebra import (
    AlgebraElement,
    GroupElement,
    ad_diagonal,
    ad_matrix,
    adjoint,
    bracket,
    dim_so,
    expm,
    expm_arr,
    inner,
    n_from_dim,
    orthogonality_defect,
    polar,
    random_element,
    so_basis,
    to_coeffs,
    to_matrix,
    trace_inner,
)
from liegeo.errors import DimensionMismatch
from liegeo.filtration import two_generator_seed


def E(n, i, j):
    return AlgebraElement.e(n, i, j)


def close(a: AlgebraElement, b: AlgebraElement, tol=1e-12):
    return np.max(np.abs(a.coeffs - b.coeffs)) <= tol


def test_basis_matrix_convention():
    b = so_basis(4)
    m = b.matrices[b.index(1, 3)]
    assert m[0, 2] == 1.0 and m[2, 0] == -1.0
    assert np.count_nonzero(m) == 2
    assert b.labels == ["e_12", "e_13", "e_14", "e_23", "e_24", "e_34"]


def test_labels_for_large_n_and_reversed_indices():
    b = so_basis(11)
    assert b.label(b.index(1, 10)) == "e_1_10"
    assert b.parse_label("e_1_10") == (b.index(1, 10), 1.0)
    assert so_basis(4).parse_label("e_31") == (so_basis(4).index(1, 3), -1.0)
    x = AlgebraElement.from_map(4, {"e_21": 2.0})
    assert x.coeffs[0] == -2.0
    with pytest.raises(ValueError):
        so_basis(4).parse_label("e_55")


def test_dimension_helpers():
    assert [dim_so(n) for n in range(2, 8)] == [1, 3, 6, 10, 15, 21]
    assert n_from_dim(21) == 7
    with pytest.raises(DimensionMismatch):
        n_from_dim(7)


def test_bracket_examples():
    assert close(bracket(E(3, 1, 2), E(3, 2, 3)), E(3, 1, 3))
    x = random_element(5, 0)
    assert bracket(x, x).norm() == 0.0
    v1, v2 = two_generator_seed(4)
    assert close(bracket(v1, v2), -E(4, 1, 3))


def test_bracket_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        bracket(E(3, 1, 2), E(4, 1, 2))
    with pytest.raises(DimensionMismatch):
        inner(E(3, 1, 2), E(4, 1, 2))
    with pytest.raises(DimensionMismatch):
        adjoint(GroupElement.identity(3), E(4, 1, 2))
    with pytest.raises(DimensionMismatch):
        AlgebraElement(np.zeros(5), 4)


def test_structure_constants_match_closed_formula_exactly():
    def e_signed(n, a, b):
        # e_ab with e_ba = -e_ab, e_aa = 0, as an integer vector
        v = np.zeros(dim_so(n), dtype=np.int64)
        if a != b:
            k = so_basis(n).index(a, b)
            v[k] = 1 if a < b else -1
        return v

    for n in range(2, 9):
        basis = so_basis(n)
        c = basis.structure_constants
        assert np.array_equal(c, np.round(c))
        c = c.astype(np.int64)
        for (p, (i, j)), (q, (k, l)) in itertools.product(enumerate(basis.pairs), repeat=2):
            expected = ((j == k) * e_signed(n, i, l) - (i == k) * e_signed(n, j, l)
                        + (i == l) * e_signed(n, j, k) - (j == l) * e_signed(n, i, k))
            assert np.array_equal(c[p, q], expected), (n, i, j, k, l)


def test_inner_examples_and_trace_form():
    assert inner(E(4, 1, 2), E(4, 1, 2)) == 1.0
    assert inner(E(4, 1, 2), E(4, 3, 4)) == 0.0
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y = random_element(6, rng), random_element(6, rng)
        assert abs(inner(x, y) - trace_inner(x, y)) < 1e-12
        assert abs(inner(x, bracket(x, y))) < 1e-12


def test_jacobi_identity_random_triples():
    rng = np.random.default_rng(2)
    for _ in range(100):
        x, y, z = (random_element(5, rng) for _ in range(3))
        j = bracket(x, bracket(y, z)) + bracket(y, bracket(z, x)) + bracket(z, bracket(x, y))
        assert j.norm() <= 1e-12


def test_ad_invariance_of_inner():
    rng = np.random.default_rng(3)
    for _ in range(50):
        z, x, y = (random_element(6, rng) for _ in range(3))
        assert abs(inner(bracket(z, x), y) + inner(x, bracket(z, y))) <= 1e-12


def _expm_eig(X):
    # X is real skew, so iX is Hermitian
    w, V = np.linalg.eigh(1j * X)
    return (V @ np.diag(np.exp(-1j * w)) @ V.conj().T).real


def test_expm_matches_eigendecomposition_oracle():
    rng = np.random.default_rng(4)
    for n in (2, 3, 5, 7):
        for scale in (0.1, 1.0, 3.0):
            x = random_element(n, rng, scale)
            assert np.max(np.abs(expm(x).mat - _expm_eig(x.mat))) < 1e-12


def test_expm_matches_rodrigues_in_so3():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = random_element(3, rng, 2.0)
        K = x.mat
        theta = np.sqrt(0.5 * np.sum(K * K))
        R = np.eye(3) + np.sin(theta) / theta * K + (1 - np.cos(theta)) / theta**2 * K @ K
        assert np.max(np.abs(expm(x).mat - R)) < 1e-13


def test_expm_examples():
    assert np.array_equal(expm(AlgebraElement.zero(4)).mat, np.eye(4))
    R = expm((np.pi / 2) * E(2, 1, 2)).mat
    assert np.allclose(R, [[0.0, 1.0], [-1.0, 0.0]], atol=1e-15)
    x = random_element(6, 6, 3.0)
    assert np.max(np.abs(expm(x).mat @ expm(-x).mat - np.eye(6))) < 1e-12


def test_expm_orthogonality_for_norm_up_to_ten():
    rng = np.random.default_rng(7)
    for n in (3, 4, 7):
        x = rng.normal(size=(50, dim_so(n)))
        x *= (10.0 * rng.uniform(size=(50, 1))) / np.linalg.norm(x, axis=1, keepdims=True)
        assert np.max(orthogonality_defect(expm_arr(x, n))) <= 1e-12
        assert np.allclose(np.linalg.det(expm_arr(x, n)), 1.0)


def test_adjoint_examples_and_isometry():
    rng = np.random.default_rng(8)
    x, y = random_element(5, rng), random_element(5, rng)
    assert close(adjoint(GroupElement.identity(5), x), x, 0.0)
    g = GroupElement.random(5, rng)
    assert abs(inner(adjoint(g, x), adjoint(g, y)) - inner(x, y)) < 1e-12
    # Ad is a homomorphism into automorphisms of the bracket
    assert close(adjoint(g, bracket(x, y)), bracket(adjoint(g, x), adjoint(g, y)))


def test_adjoint_derivative_by_finite_difference():
    rng = np.random.default_rng(9)
    h = 1e-5
    for _ in range(10):
        z, x = random_element(4, rng), random_element(4, rng)
        fd = (adjoint(expm(h * z), x) - adjoint(expm(-h * z), x)) * (1 / (2 * h))
        assert close(fd, bracket(z, x), 1e-9)


def test_ad_matrix():
    assert not np.any(ad_matrix(AlgebraElement.zero(4)))
    A = ad_matrix(E(4, 1, 2))
    assert np.allclose(A[:, so_basis(4).index(1, 2)], 0.0)
    assert np.allclose(A[:, so_basis(4).index(3, 4)], 0.0)
    rng = np.random.default_rng(10)
    x, y = random_element(5, rng), random_element(5, rng)
    M = ad_matrix(x)
    assert abs(np.trace(M)) < 1e-12
    assert np.allclose(M, -M.T)
    assert np.allclose(M @ y.coeffs, bracket(x, y).coeffs, atol=1e-13)


def test_ad_diagonal_entry_factors():
    d = np.array([1.0, 2.0, 4.0, 7.0])
    D = np.diag(d)
    lam = ad_diagonal(d)
    for k, (i, j) in enumerate(so_basis(4).pairs):
        mat = so_basis(4).matrices[k]
        comm = D @ mat - mat @ D
        assert np.allclose(comm, comm.T)
        assert comm[i - 1, j - 1] == lam[k] * mat[i - 1, j - 1]


def test_group_element_validation():
    with pytest.raises(ValueError):
        GroupElement(np.diag([1.0, 1.0, 2.0]))
    with pytest.raises(ValueError):
        GroupElement(np.diag([1.0, 1.0, -1.0]))
    g = GroupElement.random(4, 0)
    assert (g @ g.inverse()).defect() < 1e-12
    loose = GroupElement(np.eye(3) + 1e-7, tol=1e-5)
    assert loose.defect() > 1e-9


def test_polar_returns_nearest_orthogonal_factor():
    rng = np.random.default_rng(11)
    g = GroupElement.random(5, rng).mat
    for eps in (1e-8, 1e-2):
        m = g + eps * rng.normal(size=(5, 5))
        q = polar(m)
        assert orthogonality_defect(q) < 1e-12
        u, _, vt = np.linalg.svd(m)
        assert np.allclose(q, u @ vt, atol=1e-12)


def test_element_arithmetic_and_immutability():
    x = AlgebraElement.from_map(3, {"e_12": 1.0, "e_23": 2.0})
    y = 2 * x - x + (-x)
    assert y.norm() == 0.0
    assert x.to_map() == {"e_12": 1.0, "e_23": 2.0}
    with pytest.raises(ValueError):
        x.coeffs[0] = 5.0
    with pytest.raises(ValueError):
        AlgebraElement.from_matrix(np.eye(3))
    assert close(AlgebraElement.from_matrix(x.mat), x, 0.0)


coeff_arrays = arrays(np.float64, 6, elements=st.floats(-10, 10))


@settings(max_examples=60, deadline=None)
@given(coeff_arrays, coeff_arrays, coeff_arrays, st.floats(-5, 5))
def test_bracket_bilinear_antisymmetric(a, b, c, s):
    x, y, z = (AlgebraElement(v, 4) for v in (a, b, c))
    lhs = bracket(x + s * y, z)
    rhs = bracket(x, z) + s * bracket(y, z)
    scale = 1.0 + (x.norm() + abs(s) * y.norm()) * z.norm()
    assert np.max(np.abs(lhs.coeffs - rhs.coeffs)) <= 1e-12 * scale
    assert np.max(np.abs((bracket(x, y) + bracket(y, x)).coeffs)) == 0.0


@settings(max_examples=60, deadline=None)
@given(coeff_arrays)
def test_matrix_coefficient_roundtrip(a):
    m = to_matrix(a, 4)
    assert np.array_equal(m, -m.T)
    assert np.array_equal(to_coeffs(m), a)
