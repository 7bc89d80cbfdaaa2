"""Bandlimited functions with piecewise-constant Fourier transforms.

A :class:`BandlimitedFunction` stores ``f̂`` as finitely many cells
``[a, b) ↦ value`` with endpoints in units of π.  Translates ``f(· − k)`` are
never built; everything that involves them goes through bracket products.
"""

from __future__ import annotations

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

import numpy as np

from .torus import (
    ONE,
    ZERO,
    Amplitude,
    FrequencySet,
    GaussianRational,
    PeriodicStepFunction,
    abs2,
    amp_sqrt,
    amplitude,
    conj,
    is_exact,
    is_zero,
    reduce_mod_period,
    rpi,
    same_amplitude,
    step_integrate_pi,
    step_reduce,
)

# below this relative size a floating-point Gram-Schmidt residual counts as zero
RANK_RTOL = 1e-9
RANK_ATOL = 1e-12

# rational bounds on π, used to state ε as an exact rational
_PI_LOW = Fraction(333, 106)
_PI_HIGH = Fraction(355, 113)


@dataclass(frozen=True)
class BandlimitedFunction:
    """``f̂`` as sorted, disjoint cells ``(a, b, value)`` (units of π)."""

    cells: tuple[tuple[Fraction, Fraction, Amplitude], ...] = ()

    def __post_init__(self):
        raw = sorted((Fraction(a), Fraction(b), amplitude(v)) for a, b, v in self.cells)
        out: list[tuple[Fraction, Fraction, Amplitude]] = []
        for a, b, v in raw:
            if a > b:
                raise ValueError(f"empty interval [{a}, {b})")
            if a == b or is_zero(v):
                continue
            if out and a < out[-1][1]:
                raise ValueError("cells overlap")
            if out and a == out[-1][1] and same_amplitude(v, out[-1][2]):
                out[-1] = (out[-1][0], b, v)
            else:
                out.append((a, b, v))
        object.__setattr__(self, "cells", tuple(out))

    @classmethod
    def indicator(cls, S: FrequencySet, value=1) -> BandlimitedFunction:
        v = amplitude(value)
        return cls(tuple((a, b, v) for a, b in S.intervals))

    @classmethod
    def from_pieces(cls, pieces: Iterable[tuple[FrequencySet, object]]) -> BandlimitedFunction:
        cells = []
        for S, v in pieces:
            cells.extend((a, b, amplitude(v)) for a, b in S.intervals)
        return cls(tuple(cells))

    def support(self) -> FrequencySet:
        return FrequencySet(tuple((a, b) for a, b, _ in self.cells))

    def breakpoints(self) -> list[Fraction]:
        return sorted({p for a, b, _ in self.cells for p in (a, b)})

    def at(self, x: Fraction) -> Amplitude:
        """``f̂(x·π)`` for exact ``x``."""
        i = bisect_right([c[0] for c in self.cells], x) - 1
        if i >= 0 and x < self.cells[i][1]:
            return self.cells[i][2]
        return ZERO

    def evaluate(self, xi: np.ndarray) -> np.ndarray:
        """Vectorized ``f̂(ξ)`` at radian frequencies ``xi``."""
        xi = np.asarray(xi, dtype=float) / math.pi
        out = np.zeros(xi.shape, dtype=complex)
        for a, b, v in self.cells:
            out[(xi >= float(a)) & (xi < float(b))] = complex(v)
        return out

    @property
    def exact(self) -> bool:
        return all(is_exact(v) for _, _, v in self.cells)

    def scale_argument(self, s) -> BandlimitedFunction:
        """The function ``ξ ↦ f̂(s·ξ)``."""
        s = Fraction(s)
        if s == 0:
            raise ValueError("scale must be nonzero")
        cells = []
        for a, b, v in self.cells:
            u, w = a / s, b / s
            cells.append((min(u, w), max(u, w), v))
        return BandlimitedFunction(tuple(cells))

    def scaled(self, c) -> BandlimitedFunction:
        c = amplitude(c)
        return BandlimitedFunction(tuple((a, b, c * v) for a, b, v in self.cells))

    def conjugate(self) -> BandlimitedFunction:
        return BandlimitedFunction(tuple((a, b, conj(v)) for a, b, v in self.cells))

    def restrict(self, S: FrequencySet) -> BandlimitedFunction:
        return pointwise(lambda v, m: v if not is_zero(m) else ZERO,
                         self, BandlimitedFunction.indicator(S))

    def __add__(self, other: BandlimitedFunction) -> BandlimitedFunction:
        return pointwise(lambda u, v: u + v, self, other)

    def __sub__(self, other: BandlimitedFunction) -> BandlimitedFunction:
        return pointwise(lambda u, v: u - v, self, other)

    def __mul__(self, other: BandlimitedFunction) -> BandlimitedFunction:
        return pointwise(lambda u, v: u * v, self, other)

    def norm2(self) -> Amplitude:
        """``‖f‖² = (2π)⁻¹∫|f̂|²``; exact when amplitudes are exact."""
        total: Amplitude = ZERO
        for a, b, v in self.cells:
            total = total + abs2(v) * (b - a)
        return total * Fraction(1, 2)

    def max_abs_frequency(self) -> Fraction:
        if not self.cells:
            return Fraction(0)
        return max(abs(self.cells[0][0]), abs(self.cells[-1][1]))


def pointwise(fn: Callable[..., Amplitude], *functions: BandlimitedFunction) -> BandlimitedFunction:
    """Apply ``fn`` cellwise on the common refinement; ``fn(0, …, 0)`` must be 0."""
    points = sorted({p for f in functions for p in f.breakpoints()})
    cells = []
    for lo, hi in zip(points, points[1:]):
        mid = (lo + hi) / 2
        cells.append((lo, hi, fn(*(f.at(mid) for f in functions))))
    return BandlimitedFunction(tuple(cells))


def sum_functions(functions: Iterable[BandlimitedFunction]) -> BandlimitedFunction:
    functions = list(functions)
    if not functions:
        return BandlimitedFunction()
    return pointwise(lambda *vals: sum(vals, ZERO), *functions)


@dataclass(frozen=True)
class BandlimitedSystem:
    """An ordered, named family of bandlimited functions.

    ``pairing`` optionally points at a partner system of the same length;
    members are matched by position.
    """

    members: tuple[tuple[str, BandlimitedFunction], ...] = ()
    role: str = "Psi"
    pairing: "BandlimitedSystem | None" = field(default=None, compare=False)

    def __post_init__(self):
        if self.pairing is not None and len(self.pairing) != len(self):
            raise ValueError("paired systems must have equal length")

    @classmethod
    def of(cls, functions: Sequence[BandlimitedFunction], role: str = "Psi", prefix: str = "f"):
        return cls(tuple((f"{prefix}{i + 1}", f) for i, f in enumerate(functions)), role)

    @property
    def functions(self) -> list[BandlimitedFunction]:
        return [f for _, f in self.members]

    @property
    def names(self) -> list[str]:
        return [n for n, _ in self.members]

    def __len__(self):
        return len(self.members)

    def paired_with(self, other: BandlimitedSystem) -> BandlimitedSystem:
        return BandlimitedSystem(self.members, self.role, other)


def dilate(f: BandlimitedFunction, j: int, M: int) -> BandlimitedFunction:
    """``f_{M^j;0}``: ``ξ ↦ |M|^{−j/2} f̂(M^{−j}ξ)``."""
    if abs(M) < 2:
        raise ValueError("dilation must satisfy |M| >= 2")
    if j == 0:
        return f
    factor = Fraction(abs(M)) ** (-j)
    return f.scale_argument(Fraction(M) ** (-j)).scaled(amp_sqrt(GaussianRational(factor)))


def inner(f: BandlimitedFunction, g: BandlimitedFunction) -> Amplitude:
    """``⟨f, g⟩ = (2π)⁻¹∫ f̂ conj(ĝ)``."""
    total: Amplitude = ZERO
    prod = f * g.conjugate()
    for a, b, v in prod.cells:
        total = total + v * (b - a)
    return total * Fraction(1, 2)


class FiberTable:
    """Per-cell fibers ``(f̂(ξ + 2πk))_k`` of a finite list of functions.

    The mesh refines every breakpoint reduced mod 2π, so each fiber entry is
    constant on each cell.  ``fibers[i][c]`` maps ``k`` to the value on cell
    ``c`` for function ``i``.
    """

    def __init__(self, functions: Sequence[BandlimitedFunction], extra_mesh: Iterable[Fraction] = ()):
        self.functions = list(functions)
        pieces = []
        for f in self.functions:
            fp = []
            for a, b, v in f.cells:
                fp.extend((c, d, k, v) for c, d, k in reduce_mod_period(a, b))
            pieces.append(fp)
        points = {Fraction(-1)} | {p for p in extra_mesh if -1 <= p < 1}
        for fp in pieces:
            for c, d, _, _ in fp:
                points.add(c)
                if d < 1:
                    points.add(d)
        self.mesh: tuple[Fraction, ...] = tuple(sorted(points))
        ends = list(self.mesh[1:]) + [Fraction(1)]
        self.ends: tuple[Fraction, ...] = tuple(ends)
        self.fibers: list[list[dict[int, Amplitude]]] = []
        for fp in pieces:
            table: list[dict[int, Amplitude]] = [dict() for _ in self.mesh]
            for c, d, k, v in fp:
                lo = bisect_left(self.mesh, c)
                hi = bisect_left(self.mesh, d) if d < 1 else len(self.mesh)
                for idx in range(lo, hi):
                    table[idx][k] = v
            self.fibers.append(table)

    def __len__(self):
        return len(self.mesh)

    def cell_lengths(self) -> list[Fraction]:
        return [b - a for a, b in zip(self.mesh, self.ends)]

    def step(self, values: Sequence[Amplitude]) -> PeriodicStepFunction:
        return PeriodicStepFunction(self.mesh, tuple(values))

    def bracket(self, i: int, j: int) -> PeriodicStepFunction:
        return self.step([fiber_inner(u, v) for u, v in zip(self.fibers[i], self.fibers[j])])


def fiber_inner(u: dict[int, Amplitude], v: dict[int, Amplitude]) -> Amplitude:
    total: Amplitude = ZERO
    for k, x in u.items():
        y = v.get(k)
        if y is not None:
            total = total + x * conj(y)
    return total


def fiber_axpy(alpha: Amplitude, x: dict[int, Amplitude], y: dict[int, Amplitude]) -> dict[int, Amplitude]:
    """``y + alpha·x`` with exact zeros dropped."""
    out = dict(y)
    for k, v in x.items():
        w = out.get(k, ZERO) + alpha * v
        if is_exact(w) and not w:
            out.pop(k, None)
        else:
            out[k] = w
    return out


def fiber_scale(alpha: Amplitude, x: dict[int, Amplitude]) -> dict[int, Amplitude]:
    return {k: alpha * v for k, v in x.items()}


def functions_from_fibers(mesh, ends, rows: Sequence[dict[int, Amplitude]]) -> BandlimitedFunction:
    """Assemble ``f̂`` from one fiber per mesh cell."""
    cells = []
    for a, b, fib in zip(mesh, ends, rows):
        for k, v in fib.items():
            cells.append((a + 2 * k, b + 2 * k, v))
    return BandlimitedFunction(tuple(cells))


def bracket(f: BandlimitedFunction, g: BandlimitedFunction) -> PeriodicStepFunction:
    """``[f̂, ĝ](ξ) = Σ_k f̂(ξ + 2πk) conj(ĝ(ξ + 2πk))``."""
    return FiberTable([f, g]).bracket(0, 1)


def shift_energy(f: BandlimitedFunction, g: BandlimitedFunction) -> Amplitude:
    """``Σ_k |⟨f, g(· − k)⟩|² = (2π)⁻¹∫|[f̂, ĝ]|²``."""
    return step_integrate_pi(step_reduce("abs2", bracket(f, g))) * Fraction(1, 2)


def mixed_shift_sum(f, p, q, g) -> Amplitude:
    """``Σ_k ⟨f, p(· − k)⟩⟨q(· − k), g⟩ = (2π)⁻¹∫[f̂, p̂][q̂, ĝ]``."""
    table = FiberTable([f, p, q, g])
    total: Amplitude = ZERO
    for c, length in enumerate(table.cell_lengths()):
        fp = fiber_inner(table.fibers[0][c], table.fibers[1][c])
        qg = fiber_inner(table.fibers[2][c], table.fibers[3][c])
        total = total + fp * qg * length
    return total * Fraction(1, 2)


def _float_rank(vectors: list[dict[int, Amplitude]]) -> int:
    keys = sorted({k for v in vectors for k in v})
    if not keys or not vectors:
        return 0
    mat = np.array([[complex(v.get(k, 0)) for k in keys] for v in vectors])
    sv = np.linalg.svd(mat, compute_uv=False)
    if sv.size == 0 or sv[0] <= RANK_ATOL:
        return 0
    return int(np.sum(sv > max(RANK_RTOL * sv[0], RANK_ATOL)))


def _exact_rank(vectors: list[dict[int, Amplitude]]) -> int:
    keys = sorted({k for v in vectors for k in v})
    rows = [[v.get(k, ZERO) for k in keys] for v in vectors]
    rank, col = 0, 0
    while rank < len(rows) and col < len(keys):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if pivot is None:
            col += 1
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        p = rows[rank][col]
        for r in range(rank + 1, len(rows)):
            if rows[r][col]:
                factor = rows[r][col] / p
                rows[r] = [x - factor * y for x, y in zip(rows[r], rows[rank])]
        rank += 1
        col += 1
    return rank


def fiber_rank(vectors: list[dict[int, Amplitude]]) -> int:
    vectors = [v for v in vectors if v]
    if all(is_exact(x) for v in vectors for x in v.values()):
        return _exact_rank(vectors)
    return _float_rank(vectors)


def dimension_function(Phi: BandlimitedSystem | Sequence[BandlimitedFunction]) -> PeriodicStepFunction:
    """Rank of ``span{f̂(ξ + 2πk)}_k`` per mesh cell."""
    functions = Phi.functions if isinstance(Phi, BandlimitedSystem) else list(Phi)
    if not functions:
        return PeriodicStepFunction.constant(0)
    table = FiberTable(functions)
    ranks = [fiber_rank([fib[c] for fib in table.fibers]) for c in range(len(table))]
    return table.step(ranks)


def length(Phi) -> int:
    dim = dimension_function(Phi)
    return max(int(complex(v).real) for v in dim.values)


def _negligible(norm2: Amplitude, scale2: Amplitude) -> bool:
    if is_exact(norm2):
        return not norm2
    return abs(complex(norm2)) <= max(RANK_RTOL ** 2 * abs(complex(scale2)), RANK_ATOL ** 2)


def orthonormalize_fibers(vectors: list[dict[int, Amplitude]]) -> list[dict[int, Amplitude]]:
    """Ordered Gram-Schmidt with the 0/0 := 0 convention; zero slots kept."""
    out: list[dict[int, Amplitude]] = []
    for v in vectors:
        res = dict(v)
        for w in out:
            if w:
                res = fiber_axpy(-fiber_inner(v, w), w, res)
        n2 = fiber_inner(res, res)
        if not res or _negligible(n2, fiber_inner(v, v)):
            out.append({})
            continue
        out.append(fiber_scale(ONE / amp_sqrt(n2), res))
    return out


def orthogonalize(Phi: BandlimitedSystem, extra_mesh: Iterable[Fraction] = ()) -> BandlimitedSystem:
    """Shift-orthonormal generators of ``S(Φ)`` with nested supports.

    Gram-Schmidt runs per cell in member order; afterwards the nonzero
    vectors of each cell are packed into the leading slots, so the result
    has exactly ``length(Φ)`` members and supp[φ̂^{j+1}, φ̂^{j+1}] ⊆
    supp[φ̂^j, φ̂^j].
    """
    table = FiberTable(Phi.functions, extra_mesh)
    packed: list[list[dict[int, Amplitude]]] = []
    for c in range(len(table)):
        basis = orthonormalize_fibers([fib[c] for fib in table.fibers])
        packed.append([b for b in basis if b])
    r = max((len(p) for p in packed), default=0)
    members = []
    for slot in range(r):
        rows = [p[slot] if slot < len(p) else {} for p in packed]
        members.append((f"phi{slot + 1}", functions_from_fibers(table.mesh, table.ends, rows)))
    return BandlimitedSystem(tuple(members), role="phi")


@dataclass(frozen=True)
class FinitenessCertificate:
    """Why finitely many negative dilates describe the whole family.

    Supports lie in ``lo ≤ |ξ| ≤ hi`` (units of π), hence in ``K_ε``.  Scales
    ``j > prefix`` sit inside ``[−core, core)`` and enter only through the
    tail aggregate, whose total over all scales equals the dilation-invariant
    constants ``core_values`` (positive side, negative side).
    """

    epsilon: Fraction
    J_star: int
    lo: Fraction
    hi: Fraction
    prefix: int
    core: Fraction
    core_values: tuple[Amplitude, Amplitude]

    @property
    def statement(self) -> str:
        return (f"scales j > {self.prefix} are supported in [-{self.core}pi, {self.core}pi); "
                f"scales j >= {self.J_star} lie inside (-pi/2, pi/2); the tail is accounted "
                f"exactly by the dilation-invariant totals {self.core_values[0]} (xi > 0) "
                f"and {self.core_values[1]} (xi < 0)")


class CertificateError(ValueError):
    """The finiteness hypothesis on the generator supports does not hold."""


def support_radii(functions: Iterable[BandlimitedFunction]) -> tuple[Fraction, Fraction]:
    """Smallest and largest ``|ξ|/π`` over the supports; rejects supports at 0."""
    lo, hi = None, Fraction(0)
    for f in functions:
        for a, b, _ in f.cells:
            if a < 0 < b or a == 0 or b == 0:
                raise CertificateError("support meets a neighborhood of 0; no K_eps contains it")
            near = min(abs(a), abs(b))
            lo = near if lo is None else min(lo, near)
            hi = max(hi, abs(a), abs(b))
    if lo is None:
        raise CertificateError("empty system has no finiteness certificate")
    return lo, hi


def _ceil_log(ratio: Fraction, base: int) -> int:
    """Smallest ``j ≥ 0`` with ``base**j >= ratio``."""
    j = 0
    while Fraction(base) ** j < ratio:
        j += 1
    return j


def _dilation_sum_on(F: BandlimitedFunction, M: int, S: FrequencySet, jmax: int) -> BandlimitedFunction:
    """``Σ_{1≤j≤jmax} F(M^j ξ)`` restricted to ``S``."""
    terms = [F.scale_argument(Fraction(M) ** j).restrict(S) for j in range(1, jmax + 1)]
    return sum_functions(terms)


def _constant_on(f: BandlimitedFunction, S: FrequencySet) -> Amplitude:
    """The single value of ``f`` on ``S``; raises if ``f`` varies there."""
    values = []
    for a, b in S.intervals:
        points = sorted({a, b} | {p for p in f.breakpoints() if a < p < b})
        values.extend(f.at((lo + hi) / 2) for lo, hi in zip(points, points[1:]))
    first = values[0]
    for v in values[1:]:
        if not (v == first if is_exact(v) and is_exact(first) else abs(complex(v) - complex(first)) <= 1e-12):
            raise CertificateError(
                "the dilation sum of the generators is not constant near 0; the tail of the "
                "negative-dilate family has no finite description")
    return first


@dataclass(frozen=True)
class NegativeDilates:
    """``H`` (and ``H̃`` when a dual family is given) with its certificate."""

    H: BandlimitedSystem
    certificate: FinitenessCertificate
    H_dual: BandlimitedSystem | None = None


def negative_dilates(Psi: BandlimitedSystem, M: int, dual: BandlimitedSystem | None = None) -> NegativeDilates:
    """Materialize ``{ξ ↦ ψ̂(M^j ξ) : j ≥ 1}`` with an exact tail aggregate.

    The explicit members are scales ``1..prefix``.  Deeper scales live in
    ``[−core, core)`` where only the ``k = 0`` fiber coordinate is touched,
    so their joint contribution to any bracket is carried by one aggregate
    member (two paired members when a dual family is supplied).
    """
    if abs(M) < 2:
        raise ValueError("dilation must satisfy |M| >= 2")
    if dual is not None and len(dual) != len(Psi):
        raise ValueError("dual family must pair with the primal one")
    duals = dual.functions if dual is not None else Psi.functions
    lo, hi = support_radii(list(Psi.functions) + list(duals))
    m = abs(M)
    epsilon = min(lo * _PI_LOW, 1 / (hi * _PI_HIGH))
    J_star = max(1, _ceil_log(2 * hi, m))
    core = min(lo, Fraction(1, 2))
    prefix = _ceil_log(hi / core, m) - 1
    prefix = max(prefix, 0)

    pos = FrequencySet.interval(core / (m * m), core)
    neg = FrequencySet.interval(-core, -core / (m * m))
    core_set = FrequencySet.interval(-core, core)
    jmax = _ceil_log(hi * m * m / core, m) + 1

    F_aa = sum_functions(pointwise(lambda u: abs2(u), f) for f in Psi.functions)
    totals = {}
    if dual is None:
        pairs = {"aa": F_aa}
    else:
        F_bb = sum_functions(pointwise(lambda u: abs2(u), g) for g in duals)
        F_ab = sum_functions(f * g.conjugate() for f, g in zip(Psi.functions, duals))
        pairs = {"aa": F_aa, "bb": F_bb, "ab": F_ab}
    tails = {}
    for key, F in pairs.items():
        g_full = _dilation_sum_on(F, M, pos | neg, jmax)
        totals[key] = (_constant_on(g_full, pos), _constant_on(g_full, neg))
        head = _dilation_sum_on(F, M, core_set, prefix)
        plateau = BandlimitedFunction(((core_set.intervals[0][0], Fraction(0), totals[key][1]),
                                       (Fraction(0), core, totals[key][0])))
        tails[key] = plateau - head

    def member(f, j, name):
        return (f"{name}@{j}", f.scale_argument(Fraction(M) ** j))

    H = [member(f, j, n) for j in range(1, prefix + 1) for n, f in Psi.members]
    certificate = FinitenessCertificate(epsilon, J_star, lo, hi, prefix, core, totals["aa"])
    if dual is None:
        tail = pointwise(amp_sqrt, tails["aa"])
        if tail.cells:
            H.append(("tail", tail))
        return NegativeDilates(BandlimitedSystem(tuple(H), role="H"), certificate)

    Ht = [member(g, j, n) for j in range(1, prefix + 1) for n, g in dual.members]
    t1, t2, u1, u2 = _split_tail(tails["aa"], tails["bb"], tails["ab"])
    for name, f, g in (("tail1", t1, u1), ("tail2", t2, u2)):
        if f.cells or g.cells:
            H.append((name, f))
            Ht.append((name, g))
    Ht_sys = BandlimitedSystem(tuple(Ht), role="H~")
    return NegativeDilates(BandlimitedSystem(tuple(H), role="H", pairing=Ht_sys), certificate, Ht_sys)


def _split_tail(a: BandlimitedFunction, b: BandlimitedFunction, c: BandlimitedFunction):
    """Two pairs ``(h_i, h̃_i)`` realizing the 2×2 Gram ``[[a, c], [c̄, b]]`` per cell."""
    from .decomp import psqrt

    points = sorted({p for f in (a, b, c) for p in f.breakpoints()})
    cells = [[], [], [], []]
    for lo, hi in zip(points, points[1:]):
        mid = (lo + hi) / 2
        va, vb, vc = a.at(mid), b.at(mid), c.at(mid)
        if is_zero(va) and is_zero(vb) and is_zero(vc):
            continue
        if is_zero(vc) and is_zero(vb):
            X = [[amp_sqrt(va), ZERO], [ZERO, ZERO]]
        elif is_zero(vc) and is_zero(va):
            X = [[ZERO, ZERO], [ZERO, amp_sqrt(vb)]]
        else:
            G = np.array([[complex(va), complex(vc)], [complex(vc).conjugate(), complex(vb)]])
            X = psqrt(G).tolist()
        for idx, val in enumerate((X[0][0], X[0][1], X[1][0], X[1][1])):
            cells[idx].append((lo, hi, val))
    h1, h2, g1, g2 = (BandlimitedFunction(tuple(cs)) for cs in cells)
    return h1, h2, g1, g2


def vminus_dimension(Psi: BandlimitedSystem, M: int, dual: BandlimitedSystem | None = None) -> PeriodicStepFunction:
    """``Σ_{j≥1} Σ_ℓ [ψ̂^ℓ(M^j·), ψ̃̂^ℓ(M^j·)]`` as an exact step function."""
    fam = negative_dilates(Psi, M, dual)
    partner = fam.H_dual if fam.H_dual is not None else fam.H
    table = FiberTable(fam.H.functions + partner.functions)
    n = len(fam.H)
    values = []
    for c in range(len(table)):
        total: Amplitude = ZERO
        for i in range(n):
            total = total + fiber_inner(table.fibers[i][c], table.fibers[n + i][c])
        values.append(total)
    return table.step(values)


@dataclass(frozen=True)
class IntegralIdentityReport:
    dimension: PeriodicStepFunction
    integral_pi: Amplitude
    expected_pi: Fraction
    passed: bool
    constant: Amplitude | None
    sup: float
    certificate: FinitenessCertificate

    @property
    def residual(self) -> float:
        return abs(complex(self.integral_pi) - float(self.expected_pi)) * math.pi


def integral_identity_check(Psi: BandlimitedSystem, M: int, dual: BandlimitedSystem | None = None) -> IntegralIdentityReport:
    """Compare ``∫dim`` with ``2π·s/(|M| − 1)``, exactly when possible."""
    fam = negative_dilates(Psi, M, dual)
    dim = vminus_dimension(Psi, M, dual)
    got = step_integrate_pi(dim)
    expected = Fraction(2 * len(Psi), abs(M) - 1)
    if is_exact(got):
        passed = got == expected
    else:
        passed = abs(complex(got) - float(expected)) <= 1e-10
    return IntegralIdentityReport(dim, got, expected, passed, dim.constant_value(),
                                  dim.sup_abs(), fam.certificate)


def parse_function(terms: Sequence[dict]) -> BandlimitedFunction:
    """Build ``f̂`` from ``[{"interval_pi": ["p/q", "p/q"], "re": .., "im": ..}]``."""
    cells = []
    for term in terms:
        a, b = (rpi(x) for x in term["interval_pi"])
        if a >= b:
            raise ValueError(f"empty interval [{a}, {b}) in function term")
        cells.append((a, b, _parse_amp(term.get("re", 0), term.get("im", 0))))
    return BandlimitedFunction(tuple(cells))


def _parse_part(x):
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, int):
        return Fraction(x)
    return float(x)


def _parse_amp(re, im) -> Amplitude:
    re, im = _parse_part(re), _parse_part(im)
    if isinstance(re, Fraction) and isinstance(im, Fraction):
        return GaussianRational(re, im)
    return complex(float(re), float(im))
