"""Trigonometric-polynomial filters, dilation cosets and filter-bank checks.

A filter is stored by its coefficients: ``u(ξ) = Σ_k c_k e^{−ik·ξ}`` with
``k ∈ ℤ^d`` and ``d ≤ 2``.  Matrix filters keep one ``r×s`` coefficient block
per multi-index.
"""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .decomp import GridMatrixFunction

EXACT_TOL = 1e-12
GRID_TOL = 1e-6
DEFAULT_KMAX = 8
EIGEN_TOL = 1e-8


def _key(k, d: int) -> tuple[int, ...]:
    if isinstance(k, (int, np.integer)):
        k = (int(k),)
    k = tuple(int(x) for x in k)
    if len(k) != d:
        raise ValueError(f"multi-index {k} does not have dimension {d}")
    return k


def _as_points(pts: np.ndarray, d: int) -> np.ndarray:
    """Append the coordinate axis for 1-d input unless it is already ``(..., 1)``."""
    if d == 1 and not (pts.ndim >= 2 and pts.shape[-1] == 1):
        return pts[..., None]
    return pts


def _root_of_unity(q: Fraction) -> complex:
    """``e^{−2πiq}``, exact for quarter turns."""
    q = q % 1
    quarter = {Fraction(0): 1 + 0j, Fraction(1, 4): -1j, Fraction(1, 2): -1 + 0j, Fraction(3, 4): 1j}
    if q in quarter:
        return quarter[q]
    return cmath.exp(-2j * math.pi * float(q))


class TrigPolyMatrix:
    """``r×s`` matrix of trigonometric polynomials in ``d`` variables."""

    __slots__ = ("coeffs", "shape", "d", "_arrays")

    def __init__(self, coeffs: Mapping, shape: tuple[int, int], d: int = 1):
        self._arrays = None
        if d not in (1, 2):
            raise ValueError("only d = 1 or d = 2 is supported")
        r, s = shape
        clean = {}
        for k, block in coeffs.items():
            block = np.array(block, dtype=complex).reshape(r, s)
            if np.any(block != 0):
                key = _key(k, d)
                clean[key] = clean.get(key, 0) + block
        self.coeffs = {k: v for k, v in sorted(clean.items()) if np.any(v != 0)}
        self.shape = (r, s)
        self.d = d

    @classmethod
    def zeros(cls, r: int, s: int, d: int = 1) -> TrigPolyMatrix:
        return cls({}, (r, s), d)

    @classmethod
    def identity(cls, r: int, d: int = 1) -> TrigPolyMatrix:
        return cls({(0,) * d: np.eye(r)}, (r, r), d)

    @classmethod
    def from_entries(cls, rows: Sequence[Sequence[TrigPoly]]) -> TrigPolyMatrix:
        r, s = len(rows), len(rows[0])
        d = rows[0][0].d
        coeffs: dict = {}
        for i, row in enumerate(rows):
            if len(row) != s:
                raise ValueError("ragged filter matrix")
            for j, entry in enumerate(row):
                for k, c in entry.coeffs.items():
                    coeffs.setdefault(k, np.zeros((r, s), dtype=complex))[i, j] += c
        return cls(coeffs, (r, s), d)

    @classmethod
    def from_sequences(cls, rows: Sequence[Sequence[Sequence[complex]]], start: int = 0) -> TrigPolyMatrix:
        """Build from per-entry coefficient lists indexed ``start, start+1, …`` (``d = 1``)."""
        return cls.from_entries([[TrigPoly.from_sequence(seq, start) for seq in row] for row in rows])

    def entry(self, i: int, j: int) -> TrigPoly:
        return TrigPoly({k: v[i, j] for k, v in self.coeffs.items()}, self.d)

    @property
    def is_zero(self) -> bool:
        return not self.coeffs

    def support(self) -> tuple[tuple[int, ...], tuple[int, ...]]:
        if not self.coeffs:
            return (0,) * self.d, (0,) * self.d
        keys = np.array(list(self.coeffs))
        return tuple(keys.min(axis=0).tolist()), tuple(keys.max(axis=0).tolist())

    def degree(self) -> int:
        lo, hi = self.support()
        return max(h - l for l, h in zip(lo, hi))

    def _check_compatible(self, other: TrigPolyMatrix):
        if self.d != other.d:
            raise ValueError("filters live in different dimensions")

    def __add__(self, other: TrigPolyMatrix) -> TrigPolyMatrix:
        self._check_compatible(other)
        if self.shape != other.shape:
            raise ValueError(f"shape mismatch {self.shape} vs {other.shape}")
        out = {k: v.copy() for k, v in self.coeffs.items()}
        for k, v in other.coeffs.items():
            out[k] = out.get(k, 0) + v
        return TrigPolyMatrix(out, self.shape, self.d)

    def __neg__(self) -> TrigPolyMatrix:
        return TrigPolyMatrix({k: -v for k, v in self.coeffs.items()}, self.shape, self.d)

    def __sub__(self, other: TrigPolyMatrix) -> TrigPolyMatrix:
        return self + (-other)

    def __matmul__(self, other: TrigPolyMatrix) -> TrigPolyMatrix:
        self._check_compatible(other)
        if self.shape[1] != other.shape[0]:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        out: dict = {}
        for k1, a in self.coeffs.items():
            for k2, b in other.coeffs.items():
                k = tuple(x + y for x, y in zip(k1, k2))
                out[k] = out.get(k, 0) + a @ b
        return TrigPolyMatrix(out, (self.shape[0], other.shape[1]), self.d)

    def scale(self, c: complex) -> TrigPolyMatrix:
        return TrigPolyMatrix({k: c * v for k, v in self.coeffs.items()}, self.shape, self.d)

    def stack(self, other: TrigPolyMatrix) -> TrigPolyMatrix:
        """Rows of ``self`` followed by rows of ``other``."""
        self._check_compatible(other)
        if self.shape[1] != other.shape[1]:
            raise ValueError("stacked filters need the same column count")
        r1, r2, s = self.shape[0], other.shape[0], self.shape[1]
        out: dict = {}
        for k, v in self.coeffs.items():
            out.setdefault(k, np.zeros((r1 + r2, s), dtype=complex))[:r1] += v
        for k, v in other.coeffs.items():
            out.setdefault(k, np.zeros((r1 + r2, s), dtype=complex))[r1:] += v
        return TrigPolyMatrix(out, (r1 + r2, s), self.d)

    def adjoint(self) -> TrigPolyMatrix:
        """Pointwise conjugate transpose ``conj(u(ξ))ᵀ``."""
        return TrigPolyMatrix({tuple(-x for x in k): v.conj().T for k, v in self.coeffs.items()},
                              (self.shape[1], self.shape[0]), self.d)

    def transpose(self) -> TrigPolyMatrix:
        return TrigPolyMatrix({k: v.T for k, v in self.coeffs.items()}, (self.shape[1], self.shape[0]), self.d)

    def conjugate(self) -> TrigPolyMatrix:
        """Pointwise complex conjugate ``conj(u(ξ))``."""
        return TrigPolyMatrix({tuple(-x for x in k): v.conj() for k, v in self.coeffs.items()}, self.shape, self.d)

    def modulate(self, omega: Sequence[Fraction]) -> TrigPolyMatrix:
        """``ξ ↦ u(ξ + 2πω)``."""
        omega = tuple(Fraction(w) for w in omega)
        out = {}
        for k, v in self.coeffs.items():
            q = sum((ki * wi for ki, wi in zip(k, omega)), Fraction(0))
            out[k] = _root_of_unity(q) * v
        return TrigPolyMatrix(out, self.shape, self.d)

    def dilate(self, M: DilationMatrix) -> TrigPolyMatrix:
        """``ξ ↦ u(Mᵀξ)``; the coefficient at ``k`` moves to ``Mk``."""
        mat = M.matrix
        return TrigPolyMatrix({tuple(int(x) for x in mat @ np.array(k)): v for k, v in self.coeffs.items()},
                              self.shape, self.d)

    def evaluate(self, points) -> np.ndarray:
        """Values at ``points`` (shape ``(..., d)``, or ``(...)`` when ``d = 1``) as ``(..., r, s)``."""
        pts = np.asarray(points, dtype=float)
        pts = _as_points(pts, self.d)
        lead = pts.shape[:-1]
        r, s = self.shape
        if not self.coeffs:
            return np.zeros(lead + (r, s), dtype=complex)
        if self._arrays is None:
            self._arrays = (np.array(list(self.coeffs), dtype=float), np.array(list(self.coeffs.values())))
        keys, blocks = self._arrays
        phase = np.exp(-1j * (pts @ keys.T))
        return np.tensordot(phase, blocks, axes=([-1], [0]))

    def __call__(self, points) -> np.ndarray:
        return self.evaluate(points)

    def max_coefficient(self) -> float:
        return max((float(np.max(np.abs(v))) for v in self.coeffs.values()), default=0.0)

    def to_json(self) -> dict:
        r, s = self.shape
        entries = []
        for i in range(r):
            for j in range(s):
                terms = [{"k": list(k), "re": float(v[i, j].real), "im": float(v[i, j].imag)}
                         for k, v in self.coeffs.items() if v[i, j] != 0]
                if terms:
                    entries.append({"row": i, "col": j, "coeffs": terms})
        return {"rows": r, "cols": s, "entries": entries}

    @classmethod
    def from_json(cls, obj: Mapping, d: int = 1) -> TrigPolyMatrix:
        try:
            r, s = int(obj["rows"]), int(obj["cols"])
            coeffs: dict = {}
            for entry in obj["entries"]:
                i, j = int(entry["row"]), int(entry["col"])
                if not (0 <= i < r and 0 <= j < s):
                    raise ValueError(f"entry ({i}, {j}) outside a {r}x{s} filter")
                for term in entry["coeffs"]:
                    k = _key(term["k"], d)
                    c = complex(float(term.get("re", 0)), float(term.get("im", 0)))
                    coeffs.setdefault(k, np.zeros((r, s), dtype=complex))[i, j] += c
        except KeyError as exc:
            raise ValueError(f"filter is missing field {exc}") from None
        return cls(coeffs, (r, s), d)

    def __repr__(self):
        return f"TrigPolyMatrix(shape={self.shape}, d={self.d}, terms={len(self.coeffs)})"


class TrigPoly:
    """Scalar trigonometric polynomial; arithmetic defers to the 1×1 matrix form."""

    __slots__ = ("coeffs", "d")

    def __init__(self, coeffs: Mapping, d: int = 1):
        clean: dict = {}
        for k, c in coeffs.items():
            key = _key(k, d)
            clean[key] = clean.get(key, 0) + complex(c)
        self.coeffs = {k: c for k, c in sorted(clean.items()) if c != 0}
        self.d = d

    @classmethod
    def from_sequence(cls, seq: Iterable[complex], start: int = 0) -> TrigPoly:
        return cls({start + n: c for n, c in enumerate(seq)})

    @classmethod
    def constant(cls, c: complex, d: int = 1) -> TrigPoly:
        return cls({(0,) * d: c}, d)

    def as_matrix(self) -> TrigPolyMatrix:
        return TrigPolyMatrix({k: [[c]] for k, c in self.coeffs.items()}, (1, 1), self.d)

    @staticmethod
    def _from_matrix(m: TrigPolyMatrix) -> TrigPoly:
        return m.entry(0, 0)

    def __add__(self, other):
        return self._from_matrix(self.as_matrix() + _as_poly(other, self.d).as_matrix())

    __radd__ = __add__

    def __sub__(self, other):
        return self._from_matrix(self.as_matrix() - _as_poly(other, self.d).as_matrix())

    def __mul__(self, other):
        return self._from_matrix(self.as_matrix() @ _as_poly(other, self.d).as_matrix())

    __rmul__ = __mul__

    def __neg__(self):
        return TrigPoly({k: -c for k, c in self.coeffs.items()}, self.d)

    def conjugate(self) -> TrigPoly:
        return self._from_matrix(self.as_matrix().conjugate())

    def modulate(self, omega) -> TrigPoly:
        return self._from_matrix(self.as_matrix().modulate(omega))

    def dilate(self, M: DilationMatrix) -> TrigPoly:
        return self._from_matrix(self.as_matrix().dilate(M))

    def evaluate(self, points) -> np.ndarray:
        return self.as_matrix().evaluate(points)[..., 0, 0]

    __call__ = evaluate

    def degree(self) -> int:
        return self.as_matrix().degree()

    def max_coefficient(self) -> float:
        return max((abs(c) for c in self.coeffs.values()), default=0.0)

    def __eq__(self, other):
        return isinstance(other, TrigPoly) and self.d == other.d and self.coeffs == other.coeffs

    def __repr__(self):
        terms = ", ".join(f"{k if self.d > 1 else k[0]}: {c:.6g}" for k, c in self.coeffs.items())
        return f"TrigPoly({{{terms}}})"


def _as_poly(x, d: int) -> TrigPoly:
    return x if isinstance(x, TrigPoly) else TrigPoly.constant(x, d)


@dataclass(frozen=True)
class DilationMatrix:
    """Expansive integer dilation with cached coset representatives."""

    matrix: np.ndarray
    det: int = field(init=False)
    omega: tuple[tuple[Fraction, ...], ...] = field(init=False)
    gamma: tuple[tuple[int, ...], ...] = field(init=False)

    def __post_init__(self):
        mat = np.atleast_2d(np.array(self.matrix, dtype=np.int64))
        if mat.shape[0] != mat.shape[1] or mat.shape[0] not in (1, 2):
            raise ValueError("dilation must be a 1x1 or 2x2 integer matrix")
        if np.any(np.abs(np.linalg.eigvals(mat.astype(float))) <= 1):
            raise ValueError("dilation matrix is not expansive")
        det = int(round(abs(np.linalg.det(mat.astype(float)))))
        if det < 2:
            raise ValueError("dilation needs |det M| >= 2")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "det", det)
        omega, gamma = _enumerate_cosets(mat)
        if len(omega) != det or len(gamma) != det:
            raise AssertionError("coset enumeration lost representatives")
        object.__setattr__(self, "omega", omega)
        object.__setattr__(self, "gamma", gamma)

    @classmethod
    def of(cls, M) -> DilationMatrix:
        if isinstance(M, DilationMatrix):
            return M
        if isinstance(M, (int, np.integer)):
            return cls(np.array([[int(M)]]))
        return cls(np.array(M))

    @property
    def d(self) -> int:
        return self.matrix.shape[0]

    @property
    def scalar(self) -> int:
        if self.d != 1:
            raise ValueError("dilation is not one-dimensional")
        return int(self.matrix[0, 0])

    def split(self, k: Sequence[int]) -> tuple[tuple[int, ...], tuple[int, ...]]:
        """``k = γ + Mm`` with ``γ ∈ Γ_M``; returns ``(γ, m)``."""
        x = _solve_fraction(self.matrix, k)
        m = tuple(math.floor(xi) for xi in x)
        gamma = tuple(int(v) for v in np.array(k) - self.matrix @ np.array(m))
        return gamma, m

    def transpose_inverse_powers(self, count: int) -> list[np.ndarray]:
        inv = np.linalg.inv(self.matrix.T.astype(float))
        out, cur = [], np.eye(self.d)
        for _ in range(count):
            cur = inv @ cur
            out.append(cur)
        return out

    def to_json(self) -> dict:
        return {"d": self.d, "M": self.matrix.tolist()}


def _solve_fraction(mat: np.ndarray, k: Sequence[int]) -> tuple[Fraction, ...]:
    if mat.shape == (1, 1):
        return (Fraction(int(k[0]), int(mat[0, 0])),)
    (a, b), (c, e) = mat.tolist()
    det = a * e - b * c
    k0, k1 = int(k[0]), int(k[1])
    return (Fraction(e * k0 - b * k1, det), Fraction(-c * k0 + a * k1, det))


def _enumerate_cosets(mat: np.ndarray):
    d = mat.shape[0]
    box_t = np.sum(np.abs(mat.T), axis=1)
    box = np.sum(np.abs(mat), axis=1)
    omega = set()
    for k in itertools.product(*(range(-int(b), int(b) + 1) for b in box_t)):
        x = _solve_fraction(mat.T, k)
        if all(0 <= xi < 1 for xi in x):
            omega.add(x)
    gamma = set()
    for k in itertools.product(*(range(-int(b), int(b) + 1) for b in box)):
        x = _solve_fraction(mat, k)
        if all(0 <= xi < 1 for xi in x):
            gamma.add(tuple(int(v) for v in k))
    return tuple(sorted(omega)), tuple(sorted(gamma, key=lambda g: (sum(map(abs, g)), g)))


def coset_representatives(M) -> tuple[tuple[tuple[Fraction, ...], ...], tuple[tuple[int, ...], ...]]:
    """``(Ω_M, Γ_M)``: dual-lattice cosets in ``[0,1)^d`` and integer digits."""
    dil = DilationMatrix.of(M)
    return dil.omega, dil.gamma


def coset_sum(u: TrigPolyMatrix, M) -> TrigPolyMatrix:
    """``Σ_{ω∈Ω_M} u(ξ + 2πω)``."""
    dil = DilationMatrix.of(M)
    total = TrigPolyMatrix.zeros(*u.shape, d=u.d)
    for w in dil.omega:
        total = total + u.modulate(w)
    return total


def sublattice_part(u: TrigPolyMatrix, M) -> TrigPolyMatrix:
    """Terms of ``u`` whose index lies in ``Mℤ^d``."""
    dil = DilationMatrix.of(M)
    return TrigPolyMatrix({k: v for k, v in u.coeffs.items() if not any(dil.split(k)[0])}, u.shape, u.d)


def polyphase(u: TrigPolyMatrix, M) -> list[TrigPolyMatrix]:
    """Components ``u_γ`` with ``u(ξ) = Σ_γ e^{−iγ·ξ} u_γ(Mᵀξ)``, in ``Γ_M`` order."""
    dil = DilationMatrix.of(M)
    parts: dict = {g: {} for g in dil.gamma}
    for k, v in u.coeffs.items():
        g, m = dil.split(k)
        parts[g][m] = v
    return [TrigPolyMatrix(parts[g], u.shape, u.d) for g in dil.gamma]


def polyphase_matrix(u: TrigPolyMatrix, M) -> TrigPolyMatrix:
    """``|det M|^{1/2}·[u_γ]_γ`` laid out as block columns."""
    dil = DilationMatrix.of(M)
    comps = polyphase(u, M)
    r, s = u.shape
    out: dict = {}
    for c, comp in enumerate(comps):
        for k, v in comp.coeffs.items():
            out.setdefault(k, np.zeros((r, s * dil.det), dtype=complex))[:, c * s:(c + 1) * s] += v
    return TrigPolyMatrix(out, (r, s * dil.det), u.d).scale(math.sqrt(dil.det))


@dataclass(frozen=True)
class FilterBankReport:
    identity: str
    residuals: dict
    mode: str
    passed: bool
    tolerance: float
    r: int
    s: int
    expected_s: int | None = None
    notes: tuple[str, ...] = ()

    @property
    def residual(self) -> float:
        return max(self.residuals.values(), default=0.0)

    @property
    def shape_ok(self) -> bool:
        return self.expected_s is None or self.s == self.expected_s


def _format_omega(w) -> str:
    return "(" + ",".join(str(x) for x in w) + ")"


def _check_shapes(a: TrigPolyMatrix, b: TrigPolyMatrix):
    r = a.shape[0]
    if a.shape != (r, r):
        raise ValueError(f"low-pass filter must be square, got {a.shape}")
    if b.shape[1] != r:
        raise ValueError(f"high-pass filter must have {r} columns, got {b.shape}")
    if a.d != b.d:
        raise ValueError("filters live in different dimensions")


def _coset_identity_residuals(a, b, a_dual, b_dual, M) -> dict:
    """Coefficient residuals of ``conj(F)ᵀ F̃(·+2πω) − δ(ω)I`` with ``F = [a; b]``."""
    dil = DilationMatrix.of(M)
    r = a.shape[0]
    F, Fd = a.stack(b), a_dual.stack(b_dual)
    Fh = F.adjoint()
    out = {}
    for w in dil.omega:
        term = Fh @ Fd.modulate(w)
        if not any(w):
            term = term - TrigPolyMatrix.identity(r, a.d)
        out[_format_omega(w)] = term.max_coefficient()
    return out


def check_orthogonal_fb(a: TrigPolyMatrix, b: TrigPolyMatrix, M, tol: float = EXACT_TOL) -> FilterBankReport:
    """Orthogonal wavelet filter bank: perfect reconstruction plus ``s = r(|det M| − 1)``."""
    _check_shapes(a, b)
    dil = DilationMatrix.of(M)
    r, s = a.shape[0], b.shape[0]
    res = _coset_identity_residuals(a, b, a, b, dil)
    expected = r * (dil.det - 1)
    ok = all(v <= tol for v in res.values()) and s == expected
    return FilterBankReport("orthogonal", res, "exact", ok, tol, r, s, expected)


def check_biorthogonal_fb(a, b, a_dual, b_dual, M, tol: float = EXACT_TOL) -> FilterBankReport:
    """Biorthogonal wavelet filter bank: mixed coset identity plus the shape law."""
    _check_shapes(a, b)
    _check_shapes(a_dual, b_dual)
    if a.shape != a_dual.shape or b.shape != b_dual.shape:
        raise ValueError("primal and dual filters differ in shape")
    dil = DilationMatrix.of(M)
    r, s = a.shape[0], b.shape[0]
    # aᵀ conj(ã(·+2πω)) is the entrywise conjugate of conj(a)ᵀ ã(·+2πω)
    res = _coset_identity_residuals(a, b, a_dual, b_dual, dil)
    expected = r * (dil.det - 1)
    ok = all(v <= tol for v in res.values()) and s == expected
    return FilterBankReport("biorthogonal", res, "exact", ok, tol, r, s, expected)


def _polyphase_residuals(a, b, a_dual, b_dual, M) -> dict:
    P = polyphase_matrix(a.stack(b), M)
    Pd = polyphase_matrix(a_dual.stack(b_dual), M)
    gram = P.adjoint() @ Pd - TrigPolyMatrix.identity(P.shape[1], a.d)
    return {"polyphase": gram.max_coefficient()}


def check_tight_fb(a: TrigPolyMatrix, b: TrigPolyMatrix, M, tol: float = EXACT_TOL) -> FilterBankReport:
    """Tight framelet filter bank through the polyphase route: ``P*P = I``."""
    _check_shapes(a, b)
    res = _polyphase_residuals(a, b, a, b, M)
    ok = res["polyphase"] <= tol
    return FilterBankReport("tight", res, "exact", ok, tol, a.shape[0], b.shape[0])


def check_dual_fb(a, b, a_dual, b_dual, M, tol: float = EXACT_TOL) -> FilterBankReport:
    """Dual framelet filter bank through the polyphase route: ``P*P̃ = I``."""
    _check_shapes(a, b)
    _check_shapes(a_dual, b_dual)
    res = _polyphase_residuals(a, b, a_dual, b_dual, M)
    ok = res["polyphase"] <= tol
    return FilterBankReport("dual", res, "exact", ok, tol, a.shape[0], b.shape[0])


# ---------------------------------------------------------------- cascade


def _unit_fixed_vector(a0: np.ndarray) -> np.ndarray | None:
    lam, vecs = np.linalg.eig(a0)
    hits = np.flatnonzero(np.abs(lam - 1) <= EIGEN_TOL)
    if not hits.size:
        return None
    v = vecs[:, hits[0]]
    v = v / np.linalg.norm(v)
    lead = v[np.flatnonzero(np.abs(v) > 1e-12)[0]]
    return v * (abs(lead) / lead)


class RefinableCascade:
    """``φ̂(ξ) ≈ â((Mᵀ)^{−1}ξ)⋯â((Mᵀ)^{−J}ξ)v``.

    With ``depth=None`` the product runs until ``(Mᵀ)^{−J}ξ`` falls below
    ``1e−15`` for every requested point.
    """

    def __init__(self, a: TrigPolyMatrix, M, v=None, depth: int | None = None, max_depth: int = 400):
        self.a = a
        self.M = DilationMatrix.of(M)
        if a.d != self.M.d:
            raise ValueError("filter and dilation dimensions differ")
        a0 = a.evaluate(np.zeros((1, a.d)))[0]
        if v is None:
            v = _unit_fixed_vector(a0)
            if v is None:
                raise ValueError("mask at the origin has no eigenvalue 1; pass the start vector explicitly")
        self.v = np.asarray(v, dtype=complex).reshape(a.shape[0])
        self.depth = depth
        self.max_depth = max_depth
        self._inv_t = np.linalg.inv(self.M.matrix.T.astype(float))

    @property
    def r(self) -> int:
        return self.a.shape[0]

    def __call__(self, points) -> np.ndarray:
        """Samples of ``φ̂`` as ``(..., r)``."""
        pts = np.asarray(points, dtype=float)
        pts = _as_points(pts, self.a.d)
        lead = pts.shape[:-1]
        flat = pts.reshape(-1, self.a.d)
        scaled = flat @ self._inv_t.T
        steps = []
        limit = self.depth if self.depth is not None else self.max_depth
        for _ in range(limit):
            steps.append(self.a.evaluate(scaled))
            if self.depth is None and np.max(np.abs(scaled), initial=0.0) < 1e-15:
                break
            scaled = scaled @ self._inv_t.T
        vec = np.broadcast_to(self.v, (flat.shape[0], self.r)).copy()
        for mat in reversed(steps):
            vec = np.einsum("nij,nj->ni", mat, vec)
        return vec.reshape(lead + (self.r,))

    def component(self, i: int) -> Callable[[np.ndarray], np.ndarray]:
        return lambda xi: self(xi)[..., i]

    def wavelet(self, b: TrigPolyMatrix) -> Callable[[np.ndarray], np.ndarray]:
        """``ψ̂(ξ) = b̂((Mᵀ)^{−1}ξ) φ̂((Mᵀ)^{−1}ξ)`` as ``(..., s)`` samples."""
        def psi_hat(points):
            pts = np.asarray(points, dtype=float)
            pts = _as_points(pts, b.d)
            half = pts @ self._inv_t.T
            return np.einsum("...ij,...j->...i", b.evaluate(half), self(half))
        return psi_hat


def cascade_fourier(a: TrigPolyMatrix, M, J: int = 25, v=None, N: int = 1024,
                    points=None) -> GridMatrixFunction:
    """Samples of the depth-``J`` cascade product on a grid (or given 1-d points)."""
    if J < 1:
        raise ValueError("cascade depth must be at least 1")
    casc = RefinableCascade(a, M, v=v, depth=J)
    if points is not None:
        axis = np.asarray(points, dtype=float)
        return GridMatrixFunction((axis,), casc(axis)[..., None])
    return GridMatrixFunction.uniform(N, a.d, lambda pts: casc(pts)[..., None])


# ---------------------------------------------------------- limit condition


def standard_bump(x: np.ndarray) -> np.ndarray:
    """``exp(−1/(1−|x|²))`` on the unit ball, product form in 2-d."""
    x = np.asarray(x, dtype=float)
    if x.ndim and x.shape[-1] in (1, 2) and x.ndim > 1:
        vals = np.ones(x.shape[:-1])
        for i in range(x.shape[-1]):
            vals = vals * standard_bump(x[..., i])
        return vals
    out = np.zeros_like(x)
    inside = np.abs(x) < 1
    out[inside] = np.exp(-1.0 / (1.0 - x[inside] ** 2))
    return out


@dataclass(frozen=True)
class LimitReport:
    gaps: tuple[float, ...]
    target: float
    passed: bool
    tolerance: float
    notes: tuple[str, ...] = ()

    @property
    def residual(self) -> float:
        return self.gaps[-1] if self.gaps else float("inf")


def check_limit_condition(a: TrigPolyMatrix, M, j_max: int = 20, tol: float = 1e-4, nodes: int = 64,
                          a_dual: TrigPolyMatrix | None = None, theta: TrigPolyMatrix | None = None,
                          bumps: Sequence[Callable] = (standard_bump,)) -> LimitReport:
    """``⟨φ̂((Mᵀ)^{−j}·)ᵀ Θ̂((Mᵀ)^{−j}·) conj(φ̃̂((Mᵀ)^{−j}·)), h⟩ → ⟨1, h⟩``.

    Without ``a_dual`` the pairing is ``‖φ̂‖²`` (``Θ̂ = I``).  A mask with no
    fixed vector at the origin starts the cascade from ``e₁`` and fails on the
    gap rather than raising.
    """
    dil = DilationMatrix.of(M)
    notes = []

    def cascade_for(mask):
        try:
            return RefinableCascade(mask, dil)
        except ValueError:
            notes.append("no eigenvalue 1 at the origin; cascade started from e1")
            e1 = np.zeros(mask.shape[0])
            e1[0] = 1.0
            return RefinableCascade(mask, dil, v=e1)

    phi = cascade_for(a)
    phi_d = phi if a_dual is None else cascade_for(a_dual)
    x, w = np.polynomial.legendre.leggauss(nodes)
    if dil.d == 1:
        pts, weights = x[:, None], w
    else:
        gx, gy = np.meshgrid(x, x, indexing="ij")
        pts = np.stack([gx.ravel(), gy.ravel()], axis=-1)
        weights = np.outer(w, w).ravel()
    gaps = []
    inv_powers = dil.transpose_inverse_powers(j_max)
    for h in bumps:
        hv = h(pts if dil.d > 1 else pts[:, 0])
        target = float(np.sum(weights * hv))
        for P in inv_powers:
            q = pts @ P.T
            u, ud = phi(q), phi_d(q)
            if theta is not None:
                u = np.einsum("ni,nij->nj", u, theta.evaluate(q))
            pairing = np.sum(u * ud.conj(), axis=-1)
            gaps.append(abs(float(np.sum(weights * pairing.real * hv)) - target))
    final = gaps[-1] if gaps else float("inf")
    return LimitReport(tuple(gaps), target, final <= tol, tol, tuple(dict.fromkeys(notes)))


# ------------------------------------------------------- generalized banks


def _grid_points(N: int, d: int) -> np.ndarray:
    axis = -np.pi + (np.arange(N) + 0.5) * (2 * np.pi / N)
    if d == 1:
        return axis[:, None]
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    return np.stack([gx.ravel(), gy.ravel()], axis=-1)


def _check_alignment(N: int, dil: DilationMatrix):
    for w in dil.omega:
        if any((N * x).denominator != 1 for x in w):
            raise ValueError(f"misaligned grid: N={N} does not carry the shift 2*pi*{_format_omega(w)}")


def _k_window(kmax: int, d: int):
    return list(itertools.product(range(-kmax, kmax + 1), repeat=d))


def check_generalized_dual(a, b, a_dual, b_dual, M, phi: Callable, phi_dual: Callable,
                           theta: TrigPolyMatrix | None = None, N: int | None = None,
                           kmax: int = DEFAULT_KMAX, tol: float = GRID_TOL) -> FilterBankReport:
    """Generalized dual framelet bank, checked on a midpoint grid and a ``|k| ≤ kmax`` window.

    ``phi``/``phi_dual`` map points ``(n, d)`` to ``(n, r)`` samples.  The
    shifted identity pairs ``φ̂(ξ)`` with ``φ̃̂(ξ + 2πω + 2πk)``.
    """
    _check_shapes(a, b)
    _check_shapes(a_dual, b_dual)
    dil = DilationMatrix.of(M)
    d, r = a.d, a.shape[0]
    N = N or (1024 if d == 1 else 128)
    _check_alignment(N, dil)
    theta = theta or TrigPolyMatrix.identity(r, d)
    xi = _grid_points(N, d)
    mt = dil.matrix.T.astype(float)
    ks = np.array(_k_window(kmax, d), dtype=float)
    phi_here = phi(xi)
    res = {}
    for w in dil.omega:
        shift = 2 * np.pi * np.array([float(x) for x in w])
        A = a.evaluate(xi)
        B = b.evaluate(xi)
        Ad = a_dual.evaluate(xi + shift)
        Bd = b_dual.evaluate(xi + shift)
        T = theta.evaluate(xi @ mt.T)
        # aᵀ Θ(Mᵀξ) conj(ã(ξ+2πω)) + bᵀ conj(b̃(ξ+2πω)) − δ(ω) Θ(ξ)
        X = np.swapaxes(A, -1, -2) @ T @ Ad.conj() + np.swapaxes(B, -1, -2) @ Bd.conj()
        if not any(w):
            X = X - theta.evaluate(xi)
        left = np.einsum("ni,nij->nj", phi_here, X)
        worst = 0.0
        for k in ks:
            right = phi_dual(xi + shift + 2 * np.pi * k)
            worst = max(worst, float(np.max(np.abs(np.sum(left * right.conj(), axis=-1)))))
        res[_format_omega(w)] = worst
    ok = all(v <= tol for v in res.values())
    notes = (f"finite window |k| <= {kmax}, grid N={N}",)
    return FilterBankReport("generalized-dual", res, "grid", ok, tol, r, b.shape[0], notes=notes)


def check_generalized_tight(a, b, M, phi: Callable, N: int | None = None, kmax: int = DEFAULT_KMAX,
                            tol: float = GRID_TOL) -> FilterBankReport:
    """Generalized tight framelet bank: the dual check with both sides equal and ``Θ̂ = I``."""
    rep = check_generalized_dual(a, b, a, b, M, phi, phi, None, N, kmax, tol)
    return FilterBankReport("generalized-tight", rep.residuals, rep.mode, rep.passed, tol, rep.r, rep.s,
                            notes=rep.notes)


# ------------------------------------------------------------ Fejér–Riesz


def _hermitian_residual_scale(P: TrigPolyMatrix, N: int = 1024) -> tuple[np.ndarray, float]:
    xi = _grid_points(N, 1)
    vals = P.evaluate(xi)
    return vals, float(np.max(np.linalg.norm(vals, ord=2, axis=(-2, -1))))


def _check_hermitian_poly(P: TrigPolyMatrix, tol: float = 1e-10):
    if P.d != 1:
        raise ValueError("Fejer-Riesz factorization is implemented for d = 1")
    if P.shape[0] != P.shape[1]:
        raise ValueError("Fejer-Riesz factorization needs a square matrix")
    gap = (P - P.adjoint()).max_coefficient()
    if gap > tol * (1 + P.max_coefficient()):
        raise ValueError("polynomial is not Hermitian on the circle")


@dataclass(frozen=True)
class FactorReport:
    factor: TrigPolyMatrix
    residual: float
    tolerance: float
    passed: bool
    iterations: int
    notes: tuple[str, ...] = ()


def _gram_residual(V: TrigPolyMatrix, P: TrigPolyMatrix, N: int = 1024) -> tuple[float, float]:
    vals, scale = _hermitian_residual_scale(P, N)
    xi = _grid_points(N, 1)
    vv = V.evaluate(xi)
    diff = np.swapaxes(vv.conj(), -1, -2) @ vv - vals
    return float(np.max(np.abs(diff))), scale


def fejer_riesz_scalar(p: TrigPoly, tol: float = 1e-8) -> TrigPoly:
    """``v`` with ``|v(ξ)|² = p(ξ)``, ``v(ξ) = Σ_{n≥0} v_n e^{−inξ}``.

    Roots inside the unit disk are kept, on-circle roots are halved, and the
    lowest-order coefficient is made real positive.
    """
    P = p.as_matrix()
    _check_hermitian_poly(P)
    vals, scale = _hermitian_residual_scale(P)
    if float(np.min(vals.real)) < -tol * (1 + scale):
        raise ValueError("polynomial is negative on the circle")
    if not p.coeffs:
        return TrigPoly({})
    keys = [k[0] for k in p.coeffs]
    m = max(abs(k) for k in keys)
    if m == 0:
        return TrigPoly.constant(math.sqrt(max(p.coeffs[(0,)].real, 0.0)))
    # z^m p as an ordinary polynomial in z = e^{−iξ}, lowest power first
    ascending = np.array([p.coeffs.get((k,), 0) for k in range(-m, m + 1)], dtype=complex)
    roots = np.roots(ascending[::-1])
    roots = roots[np.lexsort((np.angle(roots), np.abs(roots)))]
    best = None
    # repeated zeros on the circle scatter by about eps^(1/multiplicity): try a
    # strict and a loose notion of "on the circle" and keep the better factor
    for band in (1e-5, 5e-2, 2e-1):
        try:
            chosen = _select_roots(roots, band, m)
        except ValueError:
            if band == 2e-1 and best is None:
                raise
            continue
        v = _scaled_factor(chosen, p)
        res, _ = _gram_residual(v, P)
        if res > 1e-13 * (1 + scale):
            polished = _polish(v, P, m)
            if polished.residual < res:
                v, res = polished.factor, polished.residual
                lead_block = v.coeffs[min(v.coeffs)]
                v = v.scale(abs(lead_block[0, 0]) / lead_block[0, 0])
        if best is None or res < best[1]:
            best = (v, res)
    v, res = best
    if res > tol * (1 + scale):
        raise ValueError(f"scalar factorization residual {res:.3e} exceeds tolerance")
    return v.entry(0, 0)



def _select_roots(roots: np.ndarray, band: float, m: int) -> list[complex]:
    inside = [z for z in roots if abs(z) < 1 - band]
    circle = [z for z in roots if abs(abs(z) - 1) <= band]
    chosen = list(inside)
    for cluster in _angle_clusters(circle, gap=max(band, 1e-3)):
        if len(cluster) % 2:
            raise ValueError("odd-multiplicity zero on the circle: polynomial changes sign")
        angle = float(np.angle(np.mean(cluster)))
        chosen.extend([cmath.exp(1j * angle)] * (len(cluster) // 2))
    if len(chosen) != m:
        raise ValueError(f"root selection found {len(chosen)} roots, expected {m}")
    return chosen


def _scaled_factor(chosen: list[complex], p: TrigPoly) -> TrigPolyMatrix:
    coeffs = np.poly(chosen)[::-1] if chosen else np.ones(1)
    xi = _grid_points(256, 1)[:, 0]
    basis = np.exp(-1j * np.outer(xi, np.arange(len(coeffs))))
    shape_vals = np.abs(basis @ coeffs) ** 2
    target = p.evaluate(xi).real
    weight = float(np.dot(shape_vals, target) / np.dot(shape_vals, shape_vals))
    coeffs = coeffs * math.sqrt(max(weight, 0.0))
    lead = coeffs[np.flatnonzero(np.abs(coeffs) > 0)[0]]
    coeffs = coeffs * (abs(lead) / lead)
    floor = 1e-14 * float(np.max(np.abs(coeffs)))
    coeffs = np.where(np.abs(coeffs.real) < floor, 0, coeffs.real) + 1j * np.where(np.abs(coeffs.imag) < floor, 0, coeffs.imag)
    return TrigPolyMatrix({(n,): [[c]] for n, c in enumerate(coeffs)}, (1, 1))

def _angle_clusters(points: list[complex], gap: float = 1e-3) -> list[list[complex]]:
    pts = sorted(points, key=lambda z: np.angle(z) % (2 * np.pi))
    clusters: list[list[complex]] = []
    for z in pts:
        if clusters and abs(z - clusters[-1][-1]) < gap:
            clusters[-1].append(z)
        else:
            clusters.append([z])
    if len(clusters) > 1 and abs(clusters[0][0] - clusters[-1][-1]) < gap:
        clusters[0] = clusters.pop() + clusters[0]
    return clusters


def _coefficient_blocks(P: TrigPolyMatrix, m: int) -> list[np.ndarray]:
    n = P.shape[0]
    zero = np.zeros((n, n), dtype=complex)
    return [P.coeffs.get((k,), zero) for k in range(m + 1)]


def _bauer(P: TrigPolyMatrix, m: int, size: int, ridge: float) -> list[np.ndarray]:
    """Last block row of the Cholesky factor of the ``size``-block Toeplitz section."""
    n = P.shape[0]
    blocks = _coefficient_blocks(P, m)
    T = np.zeros((size * n, size * n), dtype=complex)
    for i in range(size):
        for dd in range(-m, m + 1):
            j = i + dd
            if 0 <= j < size:
                blk = blocks[dd] if dd >= 0 else blocks[-dd].conj().T
                T[i * n:(i + 1) * n, j * n:(j + 1) * n] = blk
    T += ridge * np.eye(size * n)
    L = np.linalg.cholesky(T)
    last = size - 1
    # P_d = Σ_a V_a* V_{a+d}; the last block row of L gives V_k = L[last, last−k]*
    return [L[last * n:(last + 1) * n, (last - k) * n:(last - k + 1) * n].conj().T for k in range(m + 1)]


def _autocorrelation(V: list[np.ndarray], m: int) -> list[np.ndarray]:
    return [sum(V[a].conj().T @ V[a + dd] for a in range(m + 1 - dd)) for dd in range(m + 1)]


def _polish(V0: TrigPolyMatrix, P: TrigPolyMatrix, m: int, steps: int = 60) -> FactorReport:
    """Gauss–Newton on ``Σ_a V_a* V_{a+d} = P_d`` (real parametrization)."""
    n = P.shape[0]
    target = _coefficient_blocks(P, m)
    V = [np.array(V0.coeffs.get((k,), np.zeros((n, n))), dtype=complex) for k in range(m + 1)]

    def pack(blocks):
        flat = np.concatenate([b.ravel() for b in blocks])
        return np.concatenate([flat.real, flat.imag])

    def unpack(x):
        half = len(x) // 2
        flat = x[:half] + 1j * x[half:]
        return [flat[k * n * n:(k + 1) * n * n].reshape(n, n) for k in range(m + 1)]

    def residual(blocks):
        return pack([c - t for c, t in zip(_autocorrelation(blocks, m), target)])

    x = pack(V)
    r = residual(V)
    it = 0
    for it in range(1, steps + 1):
        size = len(x)
        J = np.empty((len(r), size))
        blocks = unpack(x)
        for col in range(size):
            e = np.zeros(size)
            e[col] = 1.0
            dV = unpack(e)
            lin = [sum(dV[a].conj().T @ blocks[a + dd] + blocks[a].conj().T @ dV[a + dd]
                       for a in range(m + 1 - dd)) for dd in range(m + 1)]
            J[:, col] = pack(lin)
        step, *_ = np.linalg.lstsq(J, -r, rcond=None)
        trial = x + step
        r_new = residual(unpack(trial))
        if np.linalg.norm(r_new) >= np.linalg.norm(r):
            break
        x, r = trial, r_new
        if np.max(np.abs(r)) < 1e-15 * (1 + P.max_coefficient()):
            break
    blocks = unpack(x)
    factor = TrigPolyMatrix({(k,): blk for k, blk in enumerate(blocks)}, (n, n))
    res, scale = _gram_residual(factor, P)
    return FactorReport(factor, res, 0.0, True, it)


def fejer_riesz_matrix(P: TrigPolyMatrix, tol: float = 1e-6, max_size: int = 256,
                       start_size: int = 16) -> FactorReport:
    """``v̂`` of degree ``≤ deg P`` with ``conj(v̂)ᵀ v̂ = P`` on the circle.

    Block-Toeplitz Cholesky with doubling section sizes, then a Gauss–Newton
    polish of the coefficient equations.  A residual above ``tol·(1+‖P‖∞)``
    is reported as a failed factorization.
    """
    _check_hermitian_poly(P)
    vals, scale = _hermitian_residual_scale(P)
    herm = (vals + np.swapaxes(vals.conj(), -1, -2)) / 2
    lowest = float(np.min(np.linalg.eigvalsh(herm)))
    if lowest < -1e-8 * (1 + scale):
        raise ValueError(f"matrix polynomial is indefinite on the circle (eigenvalue {lowest:.3e})")
    n = P.shape[0]
    if P.is_zero:
        return FactorReport(TrigPolyMatrix.zeros(n, n), 0.0, tol, True, 0)
    m = max(abs(k[0]) for k in P.coeffs)
    ridge = 1e-12 * (1 + scale)
    prev, size, it = None, start_size, 0
    blocks: list[np.ndarray] = []
    while size <= max_size:
        it += 1
        blocks = _bauer(P, m, max(size, m + 1), ridge)
        if prev is not None and max(np.max(np.abs(x - y)) for x, y in zip(blocks, prev)) < 1e-12:
            break
        prev, size = blocks, size * 2
    V = TrigPolyMatrix({(k,): blk for k, blk in enumerate(blocks)}, (n, n))
    res, _ = _gram_residual(V, P)
    notes = [f"block-Toeplitz sections up to {min(size, max_size)} blocks"]
    if res > 1e-12 * (1 + scale):
        polished = _polish(V, P, m)
        if polished.residual < res:
            V, res = polished.factor, polished.residual
            notes.append(f"Gauss-Newton polish, {polished.iterations} steps")
    floor = 1e-14 * (1 + scale)
    V = TrigPolyMatrix({k: np.where(np.abs(v) < floor, 0, v) for k, v in V.coeffs.items()}, (n, n))
    if V.degree() > m:
        raise AssertionError("factor degree exceeds the degree of P")
    limit = tol * (1 + scale)
    return FactorReport(V, res, limit, res <= limit, it, tuple(notes))
