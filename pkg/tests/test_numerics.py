import logging

import numpy as np
import pytest

from core.errors import DimensionError, InvalidInputError
from core.numerics import RngStream, apply_sign_convention, gaussian_vector, sym_eig_desc, thin_svd


def random_symmetric(n: int, seed: int) -> np.ndarray:
    a = np.random.default_rng(seed).standard_normal((n, n))
    return a + a.T


def test_sym_eig_identity():
    eig = sym_eig_desc(np.eye(3))
    np.testing.assert_allclose(eig.eigenvalues, [1.0, 1.0, 1.0])
    np.testing.assert_allclose(eig.eigenvectors.T @ eig.eigenvectors, np.eye(3), atol=1e-12)


def test_sym_eig_diagonal():
    eig = sym_eig_desc(np.diag([1.0, 3.0]))
    np.testing.assert_allclose(eig.eigenvalues, [3.0, 1.0])
    np.testing.assert_allclose(np.abs(eig.eigenvectors), [[0.0, 1.0], [1.0, 0.0]], atol=1e-12)


@pytest.mark.parametrize("n", [8, 50])
def test_sym_eig_reconstruction_and_orthonormality(n):
    s = random_symmetric(n, seed=n)
    eig = sym_eig_desc(s)
    v, lam = eig.eigenvectors, eig.eigenvalues
    residual = np.linalg.norm(v @ np.diag(lam) @ v.T - s)
    assert residual <= 1e-10 * np.linalg.norm(s)
    assert np.max(np.abs(v.T @ v - np.eye(n))) <= 1e-8
    assert np.all(np.diff(lam) <= 0)


def test_sym_eig_rank_deficient_gram_converges_quietly(caplog):
    generator = np.random.default_rng(3)
    rows = generator.standard_normal((10, 40)) * np.logspace(0, -6, 40)
    gram = rows.T @ rows
    with caplog.at_level(logging.WARNING, logger="core.numerics"):
        eig = sym_eig_desc(gram)
    assert "did not converge" not in caplog.text
    v, lam = eig.eigenvectors, eig.eigenvalues
    assert np.linalg.norm(v @ np.diag(lam) @ v.T - gram) <= 1e-8 * np.linalg.norm(gram)
    assert np.max(np.abs(v.T @ v - np.eye(40))) <= 1e-8


def test_sym_eig_psd_eigenvalues_not_negative():
    g = np.random.default_rng(1).standard_normal((5, 12))
    eig = sym_eig_desc(g.T @ g)
    assert eig.eigenvalues.min() >= -1e-10 * eig.eigenvalues[0]


def test_sym_eig_sign_convention():
    eig = sym_eig_desc(random_symmetric(6, seed=2))
    rows = np.argmax(np.abs(eig.eigenvectors), axis=0)
    assert np.all(eig.eigenvectors[rows, np.arange(6)] > 0)


def test_sym_eig_rejects_bad_input():
    with pytest.raises(DimensionError):
        sym_eig_desc(np.ones((2, 3)))
    with pytest.raises(DimensionError):
        sym_eig_desc(np.array([[1.0, 2.0], [0.0, 1.0]]))
    with pytest.raises(InvalidInputError):
        sym_eig_desc(np.array([[np.nan, 0.0], [0.0, 1.0]]))


def test_thin_svd_zero_matrix():
    u, s, vt = thin_svd(np.zeros((4, 3)))
    np.testing.assert_array_equal(s, np.zeros(3))
    np.testing.assert_allclose(u.T @ u, np.eye(3), atol=1e-12)


def test_thin_svd_rank_one():
    u_vec = np.array([1.0, 2.0, 2.0]) / 3.0
    v_vec = np.array([0.0, 0.6, 0.8, 0.0])
    _, s, _ = thin_svd(np.outer(u_vec, v_vec))
    np.testing.assert_allclose(s, [1.0, 0.0, 0.0], atol=1e-12)


@pytest.mark.parametrize("shape", [(7, 4), (4, 7), (5, 5)])
def test_thin_svd_reconstructs(shape):
    a = np.random.default_rng(3).standard_normal(shape)
    u, s, vt = thin_svd(a)
    assert np.linalg.norm(u @ np.diag(s) @ vt - a) <= 1e-8 * np.linalg.norm(a)
    assert np.all(s >= 0) and np.all(np.diff(s) <= 0)


def test_thin_svd_matches_gram_eigenvalues():
    m = 30
    g = np.random.default_rng(4).standard_normal((m, 9))
    _, s, _ = thin_svd(g / np.sqrt(m))
    eig = sym_eig_desc(g.T @ g / m)
    np.testing.assert_allclose(s**2, eig.eigenvalues, atol=1e-8)


def test_thin_svd_rejects_nan():
    with pytest.raises(InvalidInputError):
        thin_svd(np.array([[1.0, np.nan]]))


def test_gaussian_vector_zero_std():
    np.testing.assert_array_equal(gaussian_vector(5, 0.0, 0.0, RngStream(1)), np.zeros(5))


def test_gaussian_vector_moments():
    sample = gaussian_vector(100_000, 0.0, 1.0, RngStream(7))
    assert abs(sample.mean()) <= 0.02
    assert abs(sample.std() - 1.0) <= 0.02


def test_gaussian_vector_deterministic_and_streams_differ():
    a = gaussian_vector(10, 0.0, 1.0, RngStream(7, 1))
    b = gaussian_vector(10, 0.0, 1.0, RngStream(7, 1))
    c = gaussian_vector(10, 0.0, 1.0, RngStream(7, 2))
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)


def test_gaussian_vector_negative_std():
    with pytest.raises(InvalidInputError):
        gaussian_vector(3, 0.0, -1.0, RngStream(0))


def test_substreams_are_independent_of_parent():
    parent = RngStream(9, 3)
    first = parent.substream(0).generator().standard_normal(4)
    second = parent.substream(1).generator().standard_normal(4)
    assert not np.array_equal(first, second)
    np.testing.assert_array_equal(first, RngStream(9, 3, (0,)).generator().standard_normal(4))


def test_apply_sign_convention():
    flipped = apply_sign_convention(np.array([[0.1, -0.2], [-0.9, 0.5]]))
    np.testing.assert_allclose(flipped, [[-0.1, -0.2], [0.9, 0.5]])
