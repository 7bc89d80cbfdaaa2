from concurrent.futures import ThreadPoolExecutor
from fractions import Fraction as Fr

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ffkit.decomp import (
    GridMatrixFunction,
    StepMatrixFunction,
    null_basis,
    pinv_sqrt,
    psqrt,
    schur_hermitian,
    schur_point,
    sgn_projection,
    sqrt_and_pinv,
    svd_measurable,
    svd_point,
)

seeds = st.integers(0, 2**32 - 1)


def random_hermitian(rng, r):
    X = rng.normal(size=(r, r)) + 1j * rng.normal(size=(r, r))
    return (X + X.conj().T) / 2


def random_psd(rng, r, rank=None):
    rank = r if rank is None else rank
    X = rng.normal(size=(r, rank)) + 1j * rng.normal(size=(r, rank))
    return X @ X.conj().T


def test_null_basis_examples():
    V = null_basis(np.array([[1.0, 1.0]]))
    assert np.allclose(np.abs(V[:, 0]), [2 ** -0.5, 2 ** -0.5])
    assert abs(V[0, 0] + V[1, 0]) < 1e-15
    assert null_basis(np.eye(2)).shape == (2, 0)
    V = null_basis(np.zeros((2, 3)))
    assert np.allclose(V.conj().T @ V, np.eye(3))


def test_schur_examples():
    lam, U = schur_point(np.array([[0, 1], [1, 0]]))
    assert np.allclose(lam, [1, -1])
    assert np.allclose(np.abs(U), 2 ** -0.5)
    lam, U = schur_point(np.diag([3.0, 3.0]))
    assert np.allclose(lam, [3, 3])
    assert np.allclose(U.conj().T @ U, np.eye(2))


def test_schur_rejects_non_hermitian():
    with pytest.raises(ValueError):
        schur_point(np.array([[0, 1], [0, 0]]))


def test_svd_examples():
    sigma, _, _ = svd_point(np.diag([2.0, 0.0]))
    assert np.allclose(sigma, [2, 0])
    sigma, _, _ = svd_point(np.array([[1.0, 1.0]]))
    assert sigma[0] == pytest.approx(2 ** 0.5)


def test_roots_examples():
    root, D, sgn = sqrt_and_pinv(np.diag([4.0, 0.0]))
    assert np.allclose(root, np.diag([2, 0]))
    assert np.allclose(D, np.diag([0.5, 0]))
    assert np.array_equal(sgn, [1, 0])
    assert np.allclose(np.linalg.eigvalsh(psqrt(np.array([[2.0, 1.0], [1.0, 2.0]]))), [1, 3 ** 0.5])
    assert np.allclose(psqrt(np.zeros((2, 2))), 0) and np.allclose(pinv_sqrt(np.zeros((2, 2))), 0)


def test_psd_rejects_negative():
    with pytest.raises(ValueError):
        psqrt(np.diag([1.0, -1.0]))


def test_step_matrix_validation():
    with pytest.raises(ValueError):
        StepMatrixFunction((Fr(-1), Fr(0)), np.array([[[0, 1], [0, 0]]] * 2), hermitian=True)
    with pytest.raises(ValueError):
        StepMatrixFunction((Fr(0), Fr(-1)), np.zeros((2, 1, 1)))


def test_grid_and_step_forms_agree(rng):
    mats = np.array([random_hermitian(rng, 3) for _ in range(4)])
    step = StepMatrixFunction(tuple(Fr(k, 2) for k in range(-2, 2)), mats, hermitian=True)
    res = schur_hermitian(step)
    for m, lam, U in zip(mats, res.eigenvalues, res.U):
        want = schur_point(m)
        assert np.array_equal(lam, want[0]) and np.array_equal(U, want[1])
    grid = GridMatrixFunction.uniform(8, 1, lambda x: np.cos(x[..., 0])[..., None, None] * np.eye(2))
    res = schur_hermitian(grid)
    assert res.eigenvalues.shape == (8, 2)


def test_threads_bitwise_identical(rng):
    mats = [random_hermitian(rng, 5) for _ in range(64)]
    serial = [schur_point(m) for m in mats]
    with ThreadPoolExecutor(4) as pool:
        threaded = list(pool.map(schur_point, mats))
    for (l1, u1), (l2, u2) in zip(serial, threaded):
        assert l1.tobytes() == l2.tobytes() and u1.tobytes() == u2.tobytes()


@given(seeds, st.integers(1, 6))
def test_schur_invariants(seed, r):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, r)
    res = schur_hermitian(A)
    assert np.all(np.diff(res.eigenvalues) <= 0)
    assert np.max(np.abs(res.U.conj().T @ res.U - np.eye(r))) <= 1e-10
    assert np.max(np.abs(res.reconstruct() - A)) <= 1e-10


@given(seeds, st.integers(1, 6))
def test_weyl_perturbation(seed, r):
    rng = np.random.default_rng(seed)
    A = random_hermitian(rng, r)
    B = A + 10.0 ** rng.uniform(-8, 0) * random_hermitian(rng, r)
    gap = np.max(np.abs(schur_point(A)[0] - schur_point(B)[0]))
    assert gap <= np.linalg.norm(A - B, 2) + 1e-12


@given(seeds, st.integers(1, 5), st.integers(1, 5))
def test_svd_invariants(seed, r, s):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(r, s)) + 1j * rng.normal(size=(r, s))
    res = svd_measurable(A)
    sigma, U, V = res.singular_values, res.U, res.V
    assert np.max(np.abs(U.conj().T @ U - np.eye(r))) <= 1e-10
    assert np.max(np.abs(V.conj().T @ V - np.eye(s))) <= 1e-10
    D = np.zeros((r, s))
    n = min(r, s)
    D[:n, :n] = np.diag(sigma[:n])
    assert np.max(np.abs(U.conj().T @ A @ V - D)) <= 1e-10
    assert np.allclose(sigma[:n], np.linalg.svd(A, compute_uv=False), atol=1e-10)
    lam = schur_point(A @ A.conj().T)[0]
    assert np.allclose(sigma[:r] ** 2 if len(sigma) >= r else np.pad(sigma ** 2, (0, r - len(sigma))), lam, atol=1e-9)


@given(seeds, st.integers(1, 6), st.integers(0, 6))
def test_psqrt_square(seed, r, rank):
    rng = np.random.default_rng(seed)
    A = random_psd(rng, r, min(rank, r))
    root = psqrt(A)
    assert np.max(np.abs(root @ root - A)) <= 1e-9 * (1 + np.linalg.norm(A, 2))
    P = sgn_projection(A)
    assert np.max(np.abs(P @ P - P)) <= 1e-9
    D = pinv_sqrt(A)
    assert np.max(np.abs(D @ root - P)) <= 1e-7


@given(seeds, st.integers(1, 4), st.integers(1, 6))
def test_null_basis_invariants(seed, n, extra):
    rng = np.random.default_rng(seed)
    s = n + extra
    A = (rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))) @ (
        rng.normal(size=(n, s)) + 1j * rng.normal(size=(n, s)))
    V = null_basis(A)
    assert V.shape == (s, s - n)
    assert np.max(np.abs(A @ V)) <= 1e-9 * (1 + np.linalg.norm(A, 2))
    assert np.max(np.abs(V.conj().T @ V - np.eye(s - n))) <= 1e-9
