import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from etrc import linalg
from etrc.errors import InvalidMatrix, NotSymmetric, RankDeficient

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def square(n_max=6):
    return st.integers(1, n_max).flatmap(lambda n: arrays(np.float64, (n, n), elements=finite))


@settings(max_examples=200, deadline=None)
@given(square())
def test_jacobi_matches_lapack(m):
    s = m + m.T
    w, v = linalg.jacobi_eigh(s)
    ref = np.linalg.eigvalsh(s)
    scale = 1.0 + np.abs(s).max()
    np.testing.assert_allclose(w, ref, atol=1e-10 * scale)
    np.testing.assert_allclose(v.T @ v, np.eye(s.shape[0]), atol=1e-10)
    np.testing.assert_allclose(v @ np.diag(w) @ v.T, s, atol=1e-9 * scale)


@settings(max_examples=100, deadline=None)
@given(square())
def test_spectral_norm_matches_svd(m):
    assert linalg.spectral_norm(m) == pytest.approx(np.linalg.norm(m, 2), rel=1e-9, abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(square(5))
def test_positive_definite_agrees_with_eigenvalues(m):
    s = m @ m.T + np.eye(m.shape[0]) * 1e-3 - 0.5 * np.abs(m).max() * np.eye(m.shape[0])
    lam = np.linalg.eigvalsh(s)[0]
    if abs(lam) > 1e-8:
        assert linalg.is_positive_definite(s) == (lam > 0)


def test_cholesky_pivots_stop_at_first_bad_pivot():
    pivots = linalg.cholesky_pivots([[1.0, 2.0], [2.0, 1.0]])
    assert pivots == [1.0, -3.0]
    assert not linalg.is_positive_definite([[1.0, 2.0], [2.0, 1.0]])
    assert linalg.is_positive_definite(np.eye(3))
    assert not linalg.is_positive_definite(np.zeros((2, 2)))


def test_symmetrize_rejects_asymmetric_input():
    with pytest.raises(NotSymmetric):
        linalg.symmetrize([[1.0, 2.0], [0.0, 1.0]])
    out = linalg.symmetrize([[1.0, 2.0], [2.0 + 1e-12, 1.0]])
    assert out[0, 1] == out[1, 0]


def test_as_matrix_validation():
    assert linalg.as_matrix([1.0, 2.0]).shape == (1, 2)
    with pytest.raises(InvalidMatrix):
        linalg.as_matrix([[np.nan]])
    with pytest.raises(InvalidMatrix):
        linalg.as_matrix([])


def test_pseudo_inverse_and_projector():
    b = np.array([[0.0], [1.0]])
    np.testing.assert_allclose(linalg.pseudo_inverse(b), [[0.0, 1.0]])
    np.testing.assert_allclose(linalg.range_projector(b), [[0.0, 0.0], [0.0, 1.0]])
    with pytest.raises(RankDeficient):
        linalg.pseudo_inverse(np.array([[1.0, 2.0], [2.0, 4.0]]))


@settings(max_examples=50, deadline=None)
@given(arrays(np.float64, (4, 2), elements=finite))
def test_projector_is_idempotent(b):
    if np.linalg.matrix_rank(b, tol=1e-3) < 2:
        return
    p = linalg.range_projector(b)
    np.testing.assert_allclose(p @ p, p, atol=1e-8)
    np.testing.assert_allclose(p, p.T, atol=1e-8)
    np.testing.assert_allclose(p @ b, b, atol=1e-8)


def test_spectral_abscissa():
    assert linalg.spectral_abscissa([[0.0, 1.0], [-1.0, 0.0]]) == pytest.approx(0.0, abs=1e-12)
    assert linalg.spectral_abscissa(np.diag([-1.0, -3.0])) == -1.0


def test_vector_norm():
    assert linalg.vector_norm([3.0, 4.0]) == 5.0
    assert math.isclose(linalg.vector_norm(np.ones(9)), 3.0)
