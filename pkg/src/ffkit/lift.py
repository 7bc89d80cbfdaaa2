"""Generator reduction and the homogeneous-to-nonhomogeneous lift."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .bandlimited import (
    BandlimitedFunction,
    BandlimitedSystem,
    FiberTable,
    NegativeDilates,
    dimension_function,
    fiber_inner,
    functions_from_fibers,
    inner,
    mixed_shift_sum,
    negative_dilates,
    orthogonalize,
    shift_energy,
)
from .filterbank import DilationMatrix, FactorReport, TrigPolyMatrix, fejer_riesz_matrix, polyphase_matrix
from .decomp import StepMatrixFunction, schur_point, sqrt_and_pinv
from .torus import ZERO, Amplitude, PeriodicStepFunction, amp_sqrt, conj, is_exact
from .verify import FrameReport, check_dual, check_tight, quasi_affine_series
from . import testfuncs

REDUCE_TOL = 1e-8
ROWS_TOL = 1e-9


@dataclass
class GramianDecomposition:
    """``A = Σ_h u_h* u_h`` per cell with ``u_{h,j} = [ĥ, φ̂^j]``, plus its roots.

    ``u[c][h][j]`` is the coordinate on mesh cell ``c``.  ``V`` is filled in
    by the dual construction.
    """

    H: BandlimitedSystem
    phi: BandlimitedSystem
    table: FiberTable
    u: list[list[list[Amplitude]]]
    A: StepMatrixFunction
    sqrtA: StepMatrixFunction
    D: StepMatrixFunction
    sgn: np.ndarray
    exact_sqrt: list[list[list[Amplitude]] | None] = field(default_factory=list)
    V: StepMatrixFunction | None = None

    @property
    def r(self) -> int:
        return len(self.phi)

    def coordinate(self, h: int, j: int) -> PeriodicStepFunction:
        return self.table.step([cell[h][j] for cell in self.u])

    def phi_fiber(self, c: int, j: int) -> dict[int, Amplitude]:
        return self.table.fibers[len(self.H) + j][c]

    def h_fiber(self, c: int, h: int) -> dict[int, Amplitude]:
        return self.table.fibers[h][c]


def _exact_diagonal_sqrt(A: list[list[Amplitude]]) -> list[list[Amplitude]] | None:
    """Exact ``A^{1/2}`` for an exact diagonal ``A`` with square entries, else None."""
    r = len(A)
    for i in range(r):
        for j in range(r):
            if not is_exact(A[i][j]) or (i != j and A[i][j]):
                return None
    roots = [amp_sqrt(A[i][i]) for i in range(r)]
    if not all(is_exact(x) for x in roots):
        return None
    return [[roots[i] if i == j else ZERO for j in range(r)] for i in range(r)]


def gramian_from_family(H: BandlimitedSystem) -> GramianDecomposition:
    """Orthogonalize ``H`` and assemble the Gramian of its coordinates."""
    phi = orthogonalize(H)
    table = FiberTable(H.functions + phi.functions)
    nh, r = len(H), len(phi)
    u, mats, exact_roots = [], [], []
    for c in range(len(table)):
        coords = [[fiber_inner(table.fibers[h][c], table.fibers[nh + j][c]) for j in range(r)]
                  for h in range(nh)]
        A = [[sum((conj(coords[h][j]) * coords[h][k] for h in range(nh)), ZERO) for k in range(r)]
             for j in range(r)]
        u.append(coords)
        mats.append(np.array([[complex(x) for x in row] for row in A], dtype=complex).reshape(r, r))
        exact_roots.append(_exact_diagonal_sqrt(A))
    mats = np.array(mats).reshape(len(table), r, r)
    roots, pinvs, sgns = [], [], []
    for m in mats:
        if r == 0:
            roots.append(m)
            pinvs.append(m)
            sgns.append(np.zeros(0))
            continue
        s, d, sg = sqrt_and_pinv(m)
        roots.append(s)
        pinvs.append(d)
        sgns.append(sg)
    mesh = table.mesh
    return GramianDecomposition(
        H, phi, table, u,
        StepMatrixFunction(mesh, mats, hermitian=True, psd=True),
        StepMatrixFunction(mesh, np.array(roots).reshape(mats.shape)),
        StepMatrixFunction(mesh, np.array(pinvs).reshape(mats.shape)),
        np.array(sgns).reshape(len(table), r),
        exact_roots,
    )


def _combine(coeffs: Sequence[Amplitude], fibers: Sequence[dict[int, Amplitude]]) -> dict[int, Amplitude]:
    out: dict[int, Amplitude] = {}
    for a, fib in zip(coeffs, fibers):
        if (is_exact(a) and not a) or (not is_exact(a) and a == 0):
            continue
        for k, v in fib.items():
            out[k] = out.get(k, ZERO) + a * v
    return {k: v for k, v in out.items() if not (is_exact(v) and not v)}


def _eta_fibers(G: GramianDecomposition) -> list[list[dict[int, Amplitude]]]:
    r = G.r
    rows = []
    for c in range(len(G.table)):
        phis = [G.phi_fiber(c, j) for j in range(r)]
        root = G.exact_sqrt[c] if G.exact_sqrt else None
        if root is None:
            root = [[complex(x) for x in row] for row in G.sqrtA.matrices[c]]
        rows.append([_combine(root[l], phis) for l in range(r)])
    return rows


def _system_from_rows(table: FiberTable, rows, prefix: str, role: str) -> BandlimitedSystem:
    r = len(rows[0]) if rows else 0
    members = []
    for l in range(r):
        f = functions_from_fibers(table.mesh, table.ends, [cell[l] for cell in rows])
        members.append((f"{prefix}{l + 1}", f))
    return BandlimitedSystem(tuple(members), role=role)


def reduce_generators(H: BandlimitedSystem, gramian: GramianDecomposition | None = None) -> BandlimitedSystem:
    """``η̂ = A^{1/2}φ̂``: ``len(S(H))`` generators with the same shift energies as ``H``."""
    G = gramian or gramian_from_family(H)
    return _system_from_rows(G.table, _eta_fibers(G), "eta", "eta")


@dataclass
class DualReduction:
    eta: BandlimitedSystem
    eta_dual: BandlimitedSystem
    gramian: GramianDecomposition
    rows_residual: float


def reduce_generators_dual(H: BandlimitedSystem, H_dual: BandlimitedSystem | None = None) -> DualReduction:
    """``η̂ = A^{1/2}φ̂`` and ``η̃̂ = V·h̃̂`` with ``V = D·B*``."""
    H_dual = H_dual if H_dual is not None else H.pairing
    if H_dual is None or len(H_dual) != len(H):
        raise ValueError("dual reduction needs a paired family of the same length")
    G = gramian_from_family(H)
    nh, r = len(H), G.r
    merged = FiberTable(H.functions + G.phi.functions + H_dual.functions)
    G = _regrid(G, merged)
    eta_rows = _eta_fibers(G)
    dual_rows, Vs, worst = [], [], 0.0
    for c in range(len(merged)):
        B = np.array([[complex(x) for x in row] for row in G.u[c]], dtype=complex).reshape(nh, r)
        V = G.D.matrices[c] @ B.conj().T
        Vs.append(V)
        if r:
            lam, U = schur_point(G.A.matrices[c])
            proj = (U * G.sgn[c]) @ U.conj().T
            worst = max(worst, float(np.max(np.abs(V @ V.conj().T - proj))))
        hts = [merged.fibers[nh + r + h][c] for h in range(nh)]
        dual_rows.append([_combine([complex(x) for x in V[l]], hts) for l in range(r)])
    G.V = StepMatrixFunction(merged.mesh, np.array(Vs).reshape(len(merged), r, nh))
    eta = _system_from_rows(merged, eta_rows, "eta", "eta")
    eta_dual = _system_from_rows(merged, dual_rows, "eta~", "eta~")
    return DualReduction(eta.paired_with(eta_dual), eta_dual, G, worst)


def _regrid(G: GramianDecomposition, table: FiberTable) -> GramianDecomposition:
    """Recompute ``G`` on a finer mesh (values are constant on the old cells)."""
    old = G.table.mesh
    idx = [max(i for i, b in enumerate(old) if b <= a) for a in table.mesh]
    pick = lambda arr: np.array([arr[i] for i in idx]).reshape((len(idx),) + arr.shape[1:])
    return GramianDecomposition(
        G.H, G.phi, table, [G.u[i] for i in idx],
        StepMatrixFunction(table.mesh, pick(G.A.matrices), hermitian=True, psd=True),
        StepMatrixFunction(table.mesh, pick(G.sqrtA.matrices)),
        StepMatrixFunction(table.mesh, pick(G.D.matrices)),
        pick(G.sgn),
        [G.exact_sqrt[i] for i in idx] if G.exact_sqrt else [],
    )


@dataclass
class EnergyCheck:
    residuals: list[float]
    tolerance: float

    @property
    def residual(self) -> float:
        return max(self.residuals, default=0.0)

    @property
    def passed(self) -> bool:
        return all(r <= self.tolerance for r in self.residuals)


def shift_energy_sum(f: BandlimitedFunction, system: BandlimitedSystem) -> Amplitude:
    return sum((shift_energy(f, h) for h in system.functions), ZERO)


def check_reduction(H: BandlimitedSystem, eta: BandlimitedSystem, tests: Sequence[BandlimitedFunction]) -> EnergyCheck:
    """Per test function, η-side shift energy against the direct sum over ``H``."""
    out = []
    for f in tests:
        lhs = complex(shift_energy_sum(f, eta))
        rhs = complex(shift_energy_sum(f, H))
        out.append(abs(lhs - rhs) / (1 + complex(f.norm2()).real))
    return EnergyCheck(out, REDUCE_TOL)


def check_dual_reduction(H, H_dual, eta, eta_dual, pairs) -> tuple[EnergyCheck, EnergyCheck]:
    """The mixed identity for ``(η, η̃)`` and the Bessel inequality on the dual side."""
    mixed, bessel = [], []
    for f, g in pairs:
        lhs = sum((mixed_shift_sum(f, p, q, g) for p, q in zip(eta.functions, eta_dual.functions)), ZERO)
        rhs = sum((mixed_shift_sum(f, p, q, g) for p, q in zip(H.functions, H_dual.functions)), ZERO)
        scale = 1 + math.sqrt(complex(f.norm2()).real * complex(g.norm2()).real)
        mixed.append(abs(complex(lhs) - complex(rhs)) / scale)
        e_eta = complex(shift_energy_sum(g, eta_dual)).real
        e_h = complex(shift_energy_sum(g, H_dual)).real
        bessel.append(max(0.0, e_eta - e_h) / (1 + complex(g.norm2()).real))
    return EnergyCheck(mixed, REDUCE_TOL), EnergyCheck(bessel, REDUCE_TOL)


def trial_span(functions: Sequence[BandlimitedFunction]) -> tuple[Fraction, Fraction]:
    hi = max((f.max_abs_frequency() for f in functions), default=Fraction(1))
    return (-hi, hi)


@dataclass
class LiftResult:
    Phi: BandlimitedSystem
    Phi_dual: BandlimitedSystem | None
    family: NegativeDilates
    gramian: GramianDecomposition
    energy_check: EnergyCheck
    tight_report: FrameReport | None = None
    dual_report: FrameReport | None = None
    bessel_check: EnergyCheck | None = None
    rows_residual: float | None = None
    seed: int = 0

    @property
    def passed(self) -> bool:
        ok = self.energy_check.passed
        for rep in (self.tight_report, self.dual_report):
            if rep is not None:
                ok = ok and rep.passed
        if self.bessel_check is not None:
            ok = ok and self.bessel_check.passed
        if self.rows_residual is not None:
            ok = ok and self.rows_residual <= ROWS_TOL
        return ok


def lift_homogeneous(Psi: BandlimitedSystem, M: int, mode: str = "tight",
                     Psi_dual: BandlimitedSystem | None = None, seed: int = 0,
                     trials: int = testfuncs.DEFAULT_TRIALS, J: int = 0) -> LiftResult:
    """Refinable generators ``Φ`` with ``S(Φ) = S(H)``, ``H`` the negative dilates of ``Ψ``.

    The energy of ``Φ`` is compared against the quasi-affine series of ``Ψ``
    summed directly (with its geometric tail), which shares no code with the
    Gramian route.
    """
    if mode not in ("tight", "frame", "dual"):
        raise ValueError(f"unknown lift mode {mode!r}")
    if mode == "dual" and Psi_dual is None:
        raise ValueError("dual mode needs the dual wavelet family")
    span = trial_span(Psi.functions + (Psi_dual.functions if Psi_dual is not None else []))
    if mode != "dual":
        fam = negative_dilates(Psi, M)
        G = gramian_from_family(fam.H)
        Phi = reduce_generators(fam.H, G)
        tests = testfuncs.trial_functions(seed, span, trials)
        res = []
        for f in tests:
            lhs = complex(shift_energy_sum(f, Phi))
            rhs = complex(sum((quasi_affine_series(f, f, p, p, M) for p in Psi.functions), ZERO))
            res.append(abs(lhs - rhs) / (1 + complex(f.norm2()).real))
        result = LiftResult(Phi, None, fam, G, EnergyCheck(res, REDUCE_TOL), seed=seed)
        if mode == "tight":
            result.tight_report = check_tight(Phi.functions, Psi.functions, M, tests, J=J, seed=seed)
        return result

    fam = negative_dilates(Psi, M, Psi_dual)
    red = reduce_generators_dual(fam.H, fam.H_dual)
    pairs = testfuncs.trial_pairs(seed, span, trials)
    mixed = []
    for f, g in pairs:
        lhs = sum((mixed_shift_sum(f, p, q, g) for p, q in zip(red.eta.functions, red.eta_dual.functions)), ZERO)
        rhs = sum((quasi_affine_series(f, g, p, q, M) for p, q in zip(Psi.functions, Psi_dual.functions)), ZERO)
        scale = 1 + math.sqrt(complex(f.norm2()).real * complex(g.norm2()).real)
        mixed.append(abs(complex(lhs) - complex(rhs)) / scale)
    _, bessel = check_dual_reduction(fam.H, fam.H_dual, red.eta, red.eta_dual, pairs)
    report = check_dual(red.eta.functions, Psi.functions, red.eta_dual.functions, Psi_dual.functions,
                        M, pairs, J=J, seed=seed)
    return LiftResult(red.eta, red.eta_dual, fam, red.gramian, EnergyCheck(mixed, REDUCE_TOL),
                      dual_report=report, bessel_check=bessel, rows_residual=red.rows_residual, seed=seed)


@dataclass
class WaveletReduction:
    Psi: BandlimitedSystem
    check: EnergyCheck
    scales: tuple[int, int]


def reduce_wavelet_generators(Psi: BandlimitedSystem, M: int, seed: int = 0,
                              trials: int = testfuncs.DEFAULT_TRIALS, scales: tuple[int, int] = (-3, 3)) -> WaveletReduction:
    """Replace ``Ψ`` by ``len(S(Ψ))`` generators with identical per-scale energies."""
    reduced = reduce_generators(Psi)
    tests = testfuncs.trial_functions(seed, trial_span(Psi.functions), trials)
    res = []
    m = Fraction(abs(M))
    for f in tests:
        worst = 0.0
        for j in range(scales[0], scales[1] + 1):
            fj = f.scale_argument(Fraction(M) ** j)
            lhs = complex(shift_energy_sum(fj, Psi)) * float(m ** j)
            rhs = complex(shift_energy_sum(fj, reduced)) * float(m ** j)
            worst = max(worst, abs(lhs - rhs))
        res.append(worst / (1 + complex(f.norm2()).real))
    return WaveletReduction(reduced, EnergyCheck(res, REDUCE_TOL), scales)


@dataclass(frozen=True)
class CompactReduction:
    """Polynomial high-pass reduction: ``b̊`` with ``r·|M|`` rows and ``Θ̊*Θ̊ = Θ*Θ``."""

    theta: TrigPolyMatrix
    factor: FactorReport
    reduced: TrigPolyMatrix
    residual: float

    @property
    def passed(self) -> bool:
        return self.factor.passed


def _from_polyphase(v: TrigPolyMatrix, M: DilationMatrix, r: int) -> TrigPolyMatrix:
    """Inverse of :func:`polyphase_matrix`: rows of ``v`` become filters with ``r`` columns."""
    rows = v.shape[0]
    out: dict = {}
    for c, gamma in enumerate(M.gamma):
        for (m,), block in v.coeffs.items():
            k = gamma[0] + M.scalar * m
            out.setdefault((k,), np.zeros((rows, r), dtype=complex))
            out[(k,)] += block[:, c * r:(c + 1) * r] / math.sqrt(M.det)
    return TrigPolyMatrix(out, (rows, r))


def compact_support_reduce_1d(b: TrigPolyMatrix, M: int, r: int | None = None,
                              tol: float = 1e-6) -> CompactReduction:
    """Replace ``s̄`` polynomial high-pass rows by ``r·|M|`` rows with the same polyphase Gram.

    ``Θ`` expresses each wavelet in the generators ``|M|^{1/2}φ^ℓ(M·−k)``,
    ``k ∈ Γ_M``; factoring ``Θ*Θ = v̂*v̂`` and reading ``v̂`` back as a
    filter gives the reduced bank.
    """
    dil = DilationMatrix.of(M)
    if dil.d != 1 or b.d != 1:
        raise ValueError("compact-support reduction is implemented for d = 1")
    r = b.shape[1] if r is None else r
    if b.shape[1] != r:
        raise ValueError(f"high-pass filter has {b.shape[1]} columns, expected {r}")
    theta = polyphase_matrix(b, dil)
    gram = theta.adjoint() @ theta
    factor = fejer_riesz_matrix(gram, tol=tol)
    reduced = _from_polyphase(factor.factor, dil, r)
    again = polyphase_matrix(reduced, dil)
    residual = max(factor.residual, ((again.adjoint() @ again) - gram).max_coefficient())
    return CompactReduction(theta, factor, reduced, residual)
