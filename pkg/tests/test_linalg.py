import math

import numpy as np
import pytest

from chanrel import linalg
from chanrel.linalg import DimensionMismatch, NotHermitian, NotPSD

X = np.array([[0, 1], [1, 0]], dtype=complex)
Z = np.diag([1.0, -1.0]).astype(complex)
CHOI_N0 = np.diag([0.25, 0, 0.25, 0.5])


@pytest.mark.parametrize("m, expected", [
    (np.eye(2), [1, 1]),
    (np.diag([0.25, 0.25, 0.5, 0]), [0, 0.25, 0.25, 0.5]),
    (X, [-1, 1]),
])
def test_hermitian_eig_values(m, expected):
    dec = linalg.hermitian_eig(m)
    np.testing.assert_allclose(dec.eigenvalues, expected, atol=1e-12)
    np.testing.assert_allclose(dec.reconstruct(), m, atol=1e-12)


def test_hermitian_eig_is_deterministic(rng):
    g = rng.normal(size=(5, 5)) + 1j * rng.normal(size=(5, 5))
    h = g + g.conj().T
    a, b = linalg.hermitian_eig(h), linalg.hermitian_eig(h.copy())
    assert np.array_equal(a.eigenvectors, b.eigenvectors)
    # first non-negligible entry of every column is real and positive
    for k in range(5):
        col = a.eigenvectors[:, k]
        c = col[np.flatnonzero(np.abs(col) > 1e-12)[0]]
        assert abs(c.imag) < 1e-12 and c.real > 0


def test_hermitian_eig_rejects_bad_input():
    with pytest.raises(NotHermitian):
        linalg.hermitian_eig(np.array([[0, 1], [0, 0]]))
    with pytest.raises(DimensionMismatch):
        linalg.hermitian_eig(np.ones((2, 3)))
    with pytest.raises(DimensionMismatch):
        linalg.hermitian_eig(np.eye(65))


@pytest.mark.parametrize("m, expected", [
    (CHOI_N0, np.diag([1, 0, 1, 1])),
    (np.eye(3) / 3, np.eye(3)),
    (np.diag([1.0, 0.0]), np.diag([1.0, 0.0])),
])
def test_support_projector(m, expected):
    np.testing.assert_allclose(linalg.support_projector(m), expected, atol=1e-12)


def test_support_projector_rejects_negative():
    with pytest.raises(NotPSD):
        linalg.support_projector(np.diag([1.0, -0.1]))


@pytest.mark.parametrize("m, expected", [
    (np.diag([0.5, 0.5]), np.diag([-1.0, -1.0])),
    (np.eye(2), np.zeros((2, 2))),
    (np.diag([0.25, 0.75]), np.diag([-2.0, math.log2(0.75)])),
])
def test_matrix_log2(m, expected):
    np.testing.assert_allclose(linalg.matrix_log2_on_support(m), expected, atol=1e-12)


def test_kron_conventions():
    np.testing.assert_array_equal(linalg.kron(np.eye(2), np.eye(2)), np.eye(4))
    p0, p1 = np.diag([1.0, 0]), np.diag([0, 1.0])
    np.testing.assert_array_equal(linalg.kron(p0, p1), np.diag([0, 1.0, 0, 0]))
    np.testing.assert_array_equal(linalg.kron(Z, Z), np.diag([1, -1, -1, 1]))
    np.testing.assert_array_equal(linalg.kron_all([Z, np.eye(2), Z]), np.kron(np.kron(Z, np.eye(2)), Z))


def test_partial_trace_examples():
    phi = np.zeros(4)
    phi[[0, 3]] = 1 / math.sqrt(2)
    np.testing.assert_allclose(linalg.partial_trace(np.outer(phi, phi), (2, 2), [0]), np.eye(2) / 2)
    m = np.arange(16).reshape(4, 4)
    np.testing.assert_allclose(linalg.partial_trace(m, (2, 2), []), [[np.trace(m)]])
    np.testing.assert_allclose(linalg.partial_trace(CHOI_N0, (2, 2), [1]), np.diag([0.5, 0.5]))


def test_partial_trace_of_product(rng):
    a = rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3))
    c = rng.normal(size=(2, 2))
    m = linalg.kron_all([a, b, c])
    np.testing.assert_allclose(linalg.partial_trace(m, (2, 3, 2), [0, 2]),
                               np.trace(b) * np.kron(a, c), atol=1e-12)
    with pytest.raises(DimensionMismatch):
        linalg.partial_trace(m, (2, 2), [0])


def test_partial_transpose_and_permutation(rng):
    a = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    b = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    m = np.kron(a, b)
    np.testing.assert_allclose(linalg.partial_transpose(m, (2, 3), [1]), np.kron(a, b.T))
    np.testing.assert_allclose(linalg.permute_factors(m, (2, 3), (1, 0)), np.kron(b, a))
    u, v = rng.normal(size=2), rng.normal(size=3)
    np.testing.assert_allclose(linalg.permute_vector(np.kron(u, v), (2, 3), (1, 0)), np.kron(v, u))


def test_inv_sqrt_psd(rng):
    g = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    s = g.conj().T @ g
    r = linalg.inv_sqrt_psd(s)
    np.testing.assert_allclose(r @ s @ r, np.eye(3), atol=1e-10)
