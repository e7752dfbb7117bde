from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from specround.errors import DegenerateInstance, InvalidMatrix, NotPSD
from specround.instance import VectorInstance
from specround.linalg import (
    lambda_max,
    lambda_min,
    op_norm,
    psd_fn,
    range_basis,
    sym,
    sym_eig,
    whiten,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_sym_rejects_bad_shapes_and_values():
    with pytest.raises(InvalidMatrix):
        sym(np.zeros((2, 3)))
    with pytest.raises(InvalidMatrix):
        sym([[1.0, np.nan], [0.0, 1.0]])
    assert sym(3.0).shape == (1, 1)


def test_extreme_eigenvalues_of_known_matrix():
    M = np.array([[2.0, 1.0], [1.0, 2.0]])
    assert lambda_min(M) == pytest.approx(1.0)
    assert lambda_max(M) == pytest.approx(3.0)
    assert op_norm(-M) == pytest.approx(3.0)


def test_psd_functions_on_singular_matrix():
    M = np.diag([4.0, 0.0, 1.0])
    np.testing.assert_allclose(psd_fn(M, "sqrt"), np.diag([2.0, 0.0, 1.0]), atol=1e-14)
    np.testing.assert_allclose(psd_fn(M, "pinv"), np.diag([0.25, 0.0, 1.0]), atol=1e-14)
    np.testing.assert_allclose(psd_fn(M, "pinv_sqrt"), np.diag([0.5, 0.0, 1.0]), atol=1e-14)
    with pytest.raises(ValueError):
        psd_fn(M, "cube")


def test_psd_fn_rejects_indefinite():
    with pytest.raises(NotPSD):
        psd_fn(np.diag([1.0, -0.5]), "sqrt")


def test_range_basis_is_sign_normalized_and_exact():
    rng = np.random.default_rng(3)
    B = rng.standard_normal((5, 2))
    M = B @ B.T
    U, lam = range_basis(M)
    assert U.shape == (5, 2)
    np.testing.assert_allclose((U * lam) @ U.T, M, atol=1e-12)
    for j in range(2):
        assert U[np.argmax(np.abs(U[:, j])), j] > 0


def test_whiten_makes_instance_isotropic():
    rng = np.random.default_rng(0)
    inst = VectorInstance(rng.standard_normal((20, 4)), rng.uniform(0.1, 1, 20), np.ones(20))
    w = whiten(inst)
    assert w.is_isotropic
    assert w.n == 4


def test_whiten_drops_to_range_dimension():
    V = np.zeros((6, 3))
    V[:, :2] = np.random.default_rng(1).standard_normal((6, 2))
    w = whiten(VectorInstance(V, np.full(6, 0.5), np.ones(6)))
    assert w.n == 2
    assert w.is_isotropic


def test_whiten_rejects_zero_moment():
    with pytest.raises(DegenerateInstance):
        whiten(VectorInstance(np.ones((3, 2)), np.zeros(3), np.ones(3)))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (4, 4), elements=finite))
def test_spectrum_reconstructs_matrix(A):
    S = sym(A)
    spec = sym_eig(S)
    assert np.all(np.diff(spec.eigenvalues) >= 0)
    np.testing.assert_allclose(spec.reconstruct(), S, atol=1e-9 * max(1.0, np.abs(S).max()))


@settings(max_examples=60, deadline=None)
@given(arrays(np.float64, (5, 3), elements=finite))
def test_sqrt_squares_back(B):
    M = B @ B.T
    R = psd_fn(M, "sqrt")
    np.testing.assert_allclose(R @ R, M, atol=1e-7 * max(1.0, np.abs(M).max()))
