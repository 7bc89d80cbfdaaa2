"""Pointwise Hermitian Schur forms, SVDs, null-space bases and PSD square roots.

Eigenvalues come from LAPACK (``numpy.linalg.eigvalsh``); every eigenvector,
singular vector and null-space basis is built by the explicit minor
construction in :func:`null_basis`, so the same input always yields the same
bits.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

import numpy as np

RANK_RTOL = 1e-9
RANK_ATOL = 1e-12
GAP_TOL = 1e-8
HERMITIAN_TOL = 1e-12
PSD_CLAMP = 1e-10


@dataclass(frozen=True)
class StepMatrixFunction:
    """Matrix per cell of a mesh on ``[−π, π)`` (breakpoints in units of π)."""

    mesh: tuple[Fraction, ...]
    matrices: np.ndarray
    hermitian: bool = False
    psd: bool = False

    def __post_init__(self):
        mats = np.asarray(self.matrices, dtype=complex)
        if mats.ndim != 3 or mats.shape[0] != len(self.mesh):
            raise ValueError("need one matrix per mesh cell")
        if any(a >= b for a, b in zip(self.mesh, self.mesh[1:])):
            raise ValueError("mesh must be sorted and distinct")
        object.__setattr__(self, "matrices", mats)
        if self.hermitian and np.max(np.abs(mats - mats.conj().transpose(0, 2, 1)), initial=0) > HERMITIAN_TOL:
            raise ValueError("matrices flagged hermitian are not")

    @property
    def shape(self):
        return self.matrices.shape[1:]

    def map(self, fn: Callable[[np.ndarray], np.ndarray], **flags) -> StepMatrixFunction:
        return StepMatrixFunction(self.mesh, np.array([fn(m) for m in self.matrices]), **flags)


@dataclass(frozen=True)
class GridMatrixFunction:
    """Matrix samples on a uniform grid of ``[−π, π)^d`` (or a wider window).

    ``axes`` holds the sample coordinates per axis; ``values`` has shape
    ``(N₁, …, N_d, r, s)``.
    """

    axes: tuple[np.ndarray, ...]
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != len(self.axes) + 2:
            raise ValueError("values must carry one r x s matrix per grid point")
        object.__setattr__(self, "values", vals)

    @classmethod
    def uniform(cls, N: int, d: int, fn: Callable[[np.ndarray], np.ndarray], midpoints: bool = True):
        """Sample ``fn`` (points of shape (..., d) → matrices) on the N^d grid."""
        if N < 1:
            raise ValueError("grid needs N >= 1")
        offset = 0.5 if midpoints else 0.0
        axis = -np.pi + (np.arange(N) + offset) * (2 * np.pi / N)
        grids = np.meshgrid(*([axis] * d), indexing="ij")
        points = np.stack(grids, axis=-1)
        return cls(tuple([axis] * d), fn(points))

    @property
    def shape(self):
        return self.values.shape[-2:]


@dataclass(frozen=True)
class SchurResult:
    eigenvalues: np.ndarray
    U: np.ndarray

    def reconstruct(self) -> np.ndarray:
        lam = self.eigenvalues[..., None, :]
        return (self.U * lam) @ np.conj(np.swapaxes(self.U, -1, -2))


@dataclass(frozen=True)
class SvdResult:
    singular_values: np.ndarray
    U: np.ndarray
    V: np.ndarray


def numerical_rank(A: np.ndarray) -> int:
    sv = np.linalg.svd(np.atleast_2d(A), compute_uv=False)
    if sv.size == 0 or sv[0] <= RANK_ATOL:
        return 0
    return int(np.sum(sv > RANK_RTOL * sv[0]))


def _pivot_minor(A: np.ndarray, n: int) -> tuple[list[int], list[int]]:
    """Rows and columns of an n×n minor chosen by complete pivoting.

    Ties go to the lowest (row, column) index, which keeps the choice
    deterministic.
    """
    work = np.array(A, dtype=complex)
    rows, cols = list(range(work.shape[0])), list(range(work.shape[1]))
    chosen_r, chosen_c = [], []
    for _ in range(n):
        sub = np.abs(work[np.ix_(rows, cols)])
        flat = int(np.argmax(sub))
        i, j = divmod(flat, sub.shape[1])
        pr, pc = rows[i], cols[j]
        chosen_r.append(pr)
        chosen_c.append(pc)
        rows.remove(pr)
        cols.remove(pc)
        pivot = work[pr, pc]
        if rows:
            factors = work[rows, pc] / pivot
            work[np.ix_(rows, cols)] -= np.outer(factors, work[pr, cols])
    return chosen_r, chosen_c


def _inv_sqrt_pd(M: np.ndarray) -> np.ndarray:
    lam, W = np.linalg.eigh(M)
    return (W / np.sqrt(lam)) @ W.conj().T


def null_basis(A: np.ndarray, rank: int | None = None) -> np.ndarray:
    """Orthonormal basis of ``ker A`` via ``V = [−K; I]·(I + K*K)^{−1/2}``.

    ``K = A₁⁻¹A₂`` where ``A₁`` is a nonsingular ``n×n`` minor of ``A`` and
    ``A₂`` the block of ``A``'s pivot rows in the remaining columns.  Rows of
    ``V`` follow the column order of ``A``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    s = A.shape[1]
    n = numerical_rank(A) if rank is None else rank
    if n == 0:
        return np.eye(s, dtype=complex)
    if n >= s:
        return np.zeros((s, 0), dtype=complex)
    prow, pcol = _pivot_minor(A, n)
    rest = [c for c in range(s) if c not in pcol]
    A1 = A[np.ix_(prow, pcol)]
    A2 = A[np.ix_(prow, rest)]
    K = np.linalg.solve(A1, A2)
    root = _inv_sqrt_pd(np.eye(s - n) + K.conj().T @ K)
    V = np.zeros((s, s - n), dtype=complex)
    V[pcol] = -K @ root
    V[rest] = root
    return V


def normalize_phase(V: np.ndarray) -> np.ndarray:
    """Rotate each column so its largest-magnitude entry is real positive."""
    V = np.array(V, dtype=complex)
    for j in range(V.shape[1]):
        col = V[:, j]
        if not col.size:
            continue
        i = int(np.argmax(np.abs(col)))
        if abs(col[i]) > 0:
            V[:, j] = col * (abs(col[i]) / col[i])
    return V


def _check_hermitian(A: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    scale = max(1.0, float(np.max(np.abs(A), initial=0.0)))
    if np.max(np.abs(A - A.conj().T), initial=0.0) > tol * scale:
        raise ValueError("matrix is not Hermitian")


def multiplicity_blocks(lam: np.ndarray) -> list[tuple[int, int]]:
    """Index ranges of eigenvalues (sorted descending) closer than the gap tolerance."""
    scale = max(1.0, float(np.max(np.abs(lam), initial=0.0)))
    blocks, start = [], 0
    for i in range(1, len(lam) + 1):
        if i == len(lam) or lam[i - 1] - lam[i] > GAP_TOL * scale:
            blocks.append((start, i))
            start = i
    return blocks


def schur_point(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (nonincreasing) and a unitary ``U`` with ``A = U Λ U*``."""
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    _check_hermitian(A)
    A = (A + A.conj().T) / 2
    r = A.shape[0]
    lam = np.linalg.eigvalsh(A)[::-1]
    U = np.zeros((r, r), dtype=complex)
    for lo, hi in multiplicity_blocks(lam):
        center = float(np.mean(lam[lo:hi]))
        block = null_basis(center * np.eye(r) - A, rank=r - (hi - lo))
        U[:, lo:hi] = normalize_phase(block)
    return lam, U


def _pointwise(A, fn):
    if isinstance(A, StepMatrixFunction):
        return [fn(m) for m in A.matrices]
    if isinstance(A, GridMatrixFunction):
        flat = A.values.reshape((-1,) + A.values.shape[-2:])
        return [fn(m) for m in flat]
    return None


def schur_hermitian(A) -> SchurResult:
    """Hermitian Schur form of one matrix, a step function or a grid."""
    parts = _pointwise(A, schur_point)
    if parts is None:
        lam, U = schur_point(A)
        return SchurResult(lam, U)
    lam = np.array([p[0] for p in parts])
    U = np.array([p[1] for p in parts])
    if isinstance(A, GridMatrixFunction):
        lead = A.values.shape[:-2]
        lam = lam.reshape(lead + lam.shape[-1:])
        U = U.reshape(lead + U.shape[-2:])
    return SchurResult(lam, U)


def svd_point(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    A = np.atleast_2d(np.asarray(A, dtype=complex))
    r, s = A.shape
    if r > s:
        sigma, U2, V2 = svd_point(A.conj().T)
        return sigma, V2, U2
    lam, U = schur_point(A @ A.conj().T)
    sigma = np.sqrt(np.clip(lam, 0.0, None))
    top = sigma[0] if sigma.size else 0.0
    if top <= RANK_ATOL:
        n = 0
    else:
        n = int(np.sum(sigma > RANK_RTOL * top))
    V1 = (A.conj().T @ U[:, :n]) / sigma[:n]
    V2 = normalize_phase(null_basis(A, rank=n))
    return sigma, U, np.hstack([V1, V2])


def svd_measurable(A) -> SvdResult:
    """``U*AV = diag(σ)`` with ``U`` from the Schur form of ``AA*``."""
    parts = _pointwise(A, svd_point)
    if parts is None:
        return SvdResult(*svd_point(A))
    return SvdResult(np.array([p[0] for p in parts]), np.array([p[1] for p in parts]),
                     np.array([p[2] for p in parts]))


def _psd_eigen(A: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    lam, U = schur_point(A)
    if lam.size and lam[-1] < -PSD_CLAMP * max(1.0, abs(lam[0])):
        raise ValueError(f"matrix is not positive semidefinite (eigenvalue {lam[-1]:.3e})")
    return np.clip(lam, 0.0, None), U


def _nonzero_mask(lam: np.ndarray) -> np.ndarray:
    if not lam.size or lam[0] <= RANK_ATOL:
        return np.zeros(lam.shape, dtype=bool)
    return lam > RANK_RTOL * lam[0]


def psqrt(A: np.ndarray) -> np.ndarray:
    """``A^{1/2} = U diag(√λ) U*`` for Hermitian PSD ``A``."""
    lam, U = _psd_eigen(A)
    return (U * np.sqrt(lam)) @ U.conj().T


def pinv_sqrt(A: np.ndarray) -> np.ndarray:
    """Pseudoinverse of ``A^{1/2}`` with ``1/√λ := 0`` on the kernel."""
    lam, U = _psd_eigen(A)
    mask = _nonzero_mask(lam)
    inv = np.zeros(lam.shape)
    inv[mask] = 1.0 / np.sqrt(lam[mask])
    return (U * inv) @ U.conj().T


def sgn_projection(A: np.ndarray) -> np.ndarray:
    """``U diag(sgn λ) U*``, the projection onto the range of ``A``."""
    lam, U = _psd_eigen(A)
    return (U * _nonzero_mask(lam).astype(float)) @ U.conj().T


def sqrt_and_pinv(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``(A^{1/2}, D, sgn λ)`` from one eigen-decomposition."""
    lam, U = _psd_eigen(A)
    mask = _nonzero_mask(lam)
    inv = np.zeros(lam.shape)
    inv[mask] = 1.0 / np.sqrt(lam[mask])
    Uh = U.conj().T
    return (U * np.sqrt(lam)) @ Uh, (U * inv) @ Uh, mask.astype(float)
