"""Exact frequency-set algebra and 2π-periodic step functions.

Every frequency is stored as a ``Fraction`` giving its value in units of π,
so ``Fraction(4, 7)`` stands for 4π/7.  Intervals are half-open ``[a, b)``.

Amplitudes are either :class:`GaussianRational` (exact) or Python ``complex``
(floating point).  Arithmetic between two exact values stays exact; anything
touching a float degrades to ``complex``.
"""

from __future__ import annotations

import math
from bisect import bisect_right
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence, Union

Rational = Union[int, Fraction]


def rpi(value) -> Fraction:
    """Parse a multiple of π given as ``"p/q"``, int, or Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        return Fraction(value.strip())
    raise TypeError(f"not an exact multiple of pi: {value!r}")


def format_rpi(value: Fraction) -> str:
    return f"{value.numerator}/{value.denominator}"


def _isqrt_exact(q: Fraction) -> Fraction | None:
    if q < 0:
        return None
    n, d = q.numerator, q.denominator
    rn, rd = math.isqrt(n), math.isqrt(d)
    if rn * rn == n and rd * rd == d:
        return Fraction(rn, rd)
    return None


class GaussianRational:
    """Exact complex number ``re + i·im`` with rational parts."""

    __slots__ = ("re", "im")

    def __init__(self, re: Rational = 0, im: Rational = 0):
        self.re = Fraction(re)
        self.im = Fraction(im)

    @staticmethod
    def _coerce(other):
        if isinstance(other, GaussianRational):
            return other
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            return GaussianRational(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) + other
        return GaussianRational(self.re + o.re, self.im + o.im)

    __radd__ = __add__

    def __neg__(self):
        return GaussianRational(-self.re, -self.im)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) - other
        return GaussianRational(self.re - o.re, self.im - o.im)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) * other
        return GaussianRational(self.re * o.re - self.im * o.im,
                                self.re * o.im + self.im * o.re)

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return complex(self) / other
        den = o.re * o.re + o.im * o.im
        if den == 0:
            raise ZeroDivisionError("division by exact zero")
        return self * GaussianRational(o.re / den, -o.im / den)

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return other / complex(self)
        return o / self

    def conjugate(self):
        return GaussianRational(self.re, -self.im)

    def abs2(self) -> Fraction:
        return self.re * self.re + self.im * self.im

    def __complex__(self):
        return complex(float(self.re), float(self.im))

    def __bool__(self):
        return bool(self.re) or bool(self.im)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented if not isinstance(other, complex) else False
        return self.re == o.re and self.im == o.im

    def __hash__(self):
        return hash((self.re, self.im))

    def __str__(self):
        if self.im == 0:
            return str(self.re)
        sign = "-" if self.im < 0 else "+"
        imag = "" if abs(self.im) == 1 else str(abs(self.im))
        if self.re == 0:
            return f"{'-' if self.im < 0 else ''}{imag}i"
        return f"{self.re}{sign}{imag}i"

    def __repr__(self):
        if self.im == 0:
            return f"GaussianRational({self.re})"
        return f"GaussianRational({self.re}, {self.im})"


Amplitude = Union[GaussianRational, complex]

ZERO = GaussianRational(0)
ONE = GaussianRational(1)


def amplitude(value) -> Amplitude:
    """Coerce a number to an amplitude; ints and Fractions stay exact."""
    if isinstance(value, GaussianRational):
        return value
    if isinstance(value, bool):
        raise TypeError("bool is not an amplitude")
    if isinstance(value, (int, Fraction)):
        return GaussianRational(value)
    return complex(value)


def is_exact(value) -> bool:
    return isinstance(value, GaussianRational)


def is_zero(value) -> bool:
    if isinstance(value, GaussianRational):
        return not value
    return value == 0


def conj(value: Amplitude) -> Amplitude:
    return value.conjugate()


def abs2(value: Amplitude):
    if isinstance(value, GaussianRational):
        return GaussianRational(value.abs2())
    return complex(abs(value) ** 2)


def amp_sqrt(value: Amplitude) -> Amplitude:
    """Square root of a nonnegative real amplitude, exact when possible."""
    if isinstance(value, GaussianRational):
        if value.im != 0 or value.re < 0:
            raise ValueError(f"sqrt of non-positive-real amplitude {value!r}")
        root = _isqrt_exact(value.re)
        if root is not None:
            return GaussianRational(root)
        return complex(math.sqrt(value.re))
    return complex(math.sqrt(max(value.real, 0.0)))


def scalar_from_float(x: float) -> Amplitude:
    return complex(x)


def same_amplitude(u: Amplitude, v: Amplitude) -> bool:
    if is_exact(u) != is_exact(v):
        return False
    return u == v


@dataclass(frozen=True)
class FrequencySet:
    """Finite union of half-open intervals ``[a, b)``, endpoints in units of π."""

    intervals: tuple[tuple[Fraction, Fraction], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "intervals", _canonical_intervals(self.intervals))

    @classmethod
    def interval(cls, a, b) -> FrequencySet:
        return cls(((rpi(a), rpi(b)),))

    @classmethod
    def of(cls, *pairs) -> FrequencySet:
        return cls(tuple((rpi(a), rpi(b)) for a, b in pairs))

    @property
    def measure(self) -> Fraction:
        return sum((b - a for a, b in self.intervals), Fraction(0))

    @property
    def empty(self) -> bool:
        return not self.intervals

    def contains(self, x: Fraction) -> bool:
        return any(a <= x < b for a, b in self.intervals)

    def bounds(self) -> tuple[Fraction, Fraction]:
        if not self.intervals:
            raise ValueError("empty set has no bounds")
        return self.intervals[0][0], self.intervals[-1][1]

    def __or__(self, other):
        return set_combine("union", self, other)

    def __and__(self, other):
        return set_combine("intersect", self, other)

    def __sub__(self, other):
        return set_combine("difference", self, other)


def _canonical_intervals(pairs) -> tuple[tuple[Fraction, Fraction], ...]:
    cleaned = []
    for a, b in pairs:
        a, b = Fraction(a), Fraction(b)
        if a > b:
            raise ValueError(f"empty interval [{a}, {b})")
        if a < b:
            cleaned.append((a, b))
    cleaned.sort()
    merged: list[list[Fraction]] = []
    for a, b in cleaned:
        if merged and a <= merged[-1][1]:
            merged[-1][1] = max(merged[-1][1], b)
        else:
            merged.append([a, b])
    return tuple((a, b) for a, b in merged)


_SET_OPS: dict[str, Callable[[bool, bool], bool]] = {
    "union": lambda x, y: x or y,
    "intersect": lambda x, y: x and y,
    "difference": lambda x, y: x and not y,
}


def set_combine(op: str, A: FrequencySet, B: FrequencySet) -> FrequencySet:
    """Union, intersection or difference by sweeping the merged endpoints."""
    try:
        rule = _SET_OPS[op]
    except KeyError:
        raise ValueError(f"unknown set operation {op!r}") from None
    points = sorted({p for iv in A.intervals + B.intervals for p in iv})
    out = []
    for lo, hi in zip(points, points[1:]):
        mid = (lo + hi) / 2
        if rule(A.contains(mid), B.contains(mid)):
            out.append((lo, hi))
    return FrequencySet(tuple(out))


def affine_image(S: FrequencySet, scale: Rational, shift: Rational = 0) -> FrequencySet:
    """Image of ``S`` under ``ξ ↦ scale·ξ + shift``.

    A negative scale sends ``[a, b)`` to ``(scale·b, scale·a]``, which is
    stored as ``[scale·b, scale·a)``; the two differ on a null set only.
    """
    scale, shift = Fraction(scale), Fraction(shift)
    if scale == 0:
        raise ValueError("scale must be nonzero")
    out = []
    for a, b in S.intervals:
        u, v = scale * a + shift, scale * b + shift
        out.append((min(u, v), max(u, v)))
    return FrequencySet(tuple(out))


def reduce_mod_period(a: Fraction, b: Fraction):
    """Split ``[a, b)`` into pieces ``([c, d), k)`` with ``[c, d) ⊆ [−1, 1)`` and
    ``[c + 2k, d + 2k)`` a piece of the original (units of π)."""
    pieces = []
    k = math.floor((a + 1) / 2)
    while 2 * k - 1 < b:
        lo, hi = max(a, Fraction(2 * k - 1)), min(b, Fraction(2 * k + 1))
        if lo < hi:
            pieces.append((lo - 2 * k, hi - 2 * k, k))
        k += 1
    return pieces


@dataclass(frozen=True)
class PeriodicStepFunction:
    """2π-periodic step function on ``[−π, π)``.

    ``breakpoints[0]`` is always ``−1`` (that is −π); cell ``i`` spans
    ``[breakpoints[i], breakpoints[i+1])`` with the last cell ending at π.
    """

    breakpoints: tuple[Fraction, ...]
    values: tuple[Amplitude, ...]

    def __post_init__(self):
        bps = tuple(Fraction(b) for b in self.breakpoints)
        vals = tuple(amplitude(v) for v in self.values)
        if not bps or bps[0] != -1:
            raise ValueError("breakpoints must start at -pi")
        if len(bps) != len(vals):
            raise ValueError("one value per cell required")
        if any(x >= y for x, y in zip(bps, bps[1:])) or bps[-1] >= 1:
            raise ValueError("breakpoints must be sorted, distinct, inside [-pi, pi)")
        keep_b, keep_v = [bps[0]], [vals[0]]
        for b, v in zip(bps[1:], vals[1:]):
            if same_amplitude(v, keep_v[-1]):
                continue
            keep_b.append(b)
            keep_v.append(v)
        object.__setattr__(self, "breakpoints", tuple(keep_b))
        object.__setattr__(self, "values", tuple(keep_v))

    @classmethod
    def constant(cls, value) -> PeriodicStepFunction:
        return cls((Fraction(-1),), (amplitude(value),))

    @classmethod
    def from_cells(cls, mesh: Sequence[Fraction], values: Sequence) -> PeriodicStepFunction:
        return cls(tuple(mesh), tuple(values))

    def cells(self):
        ends = self.breakpoints[1:] + (Fraction(1),)
        return list(zip(self.breakpoints, ends, self.values))

    @property
    def exact(self) -> tuple[bool, ...]:
        return tuple(is_exact(v) for v in self.values)

    def at(self, x) -> Amplitude:
        """Value at ``x·π``; ``x`` may be a Fraction or a float."""
        if isinstance(x, (int, Fraction)):
            x = Fraction(x)
            x = x - 2 * math.floor((x + 1) / 2)
        else:
            x = float(x)
            x = x - 2 * math.floor((x + 1) / 2)
        i = bisect_right(self.breakpoints, x) - 1
        return self.values[i]

    def __call__(self, xi: float) -> complex:
        return complex(self.at(float(xi) / math.pi))

    def refine(self, mesh: Sequence[Fraction]) -> tuple[Amplitude, ...]:
        """Values on a finer mesh that contains every breakpoint."""
        return tuple(self.at(m) for m in mesh)

    def constant_value(self) -> Amplitude | None:
        return self.values[0] if len(self.values) == 1 else None

    def sup_abs(self) -> float:
        return max(abs(complex(v)) for v in self.values)

    def support(self) -> FrequencySet:
        return FrequencySet(tuple((a, b) for a, b, v in self.cells() if not is_zero(v)))


def common_mesh(*functions: PeriodicStepFunction) -> tuple[Fraction, ...]:
    return tuple(sorted({b for f in functions for b in f.breakpoints}))


def periodize_indicator(S: FrequencySet) -> PeriodicStepFunction:
    """``Σ_k χ_S(ξ + 2πk)`` as an integer-valued step function."""
    pieces = [p for a, b in S.intervals for p in reduce_mod_period(a, b)]
    mesh = sorted({Fraction(-1)} | {p for c, d, _ in pieces for p in (c, d) if p < 1})
    counts = []
    for i, lo in enumerate(mesh):
        hi = mesh[i + 1] if i + 1 < len(mesh) else Fraction(1)
        mid = (lo + hi) / 2
        counts.append(sum(1 for c, d, _ in pieces if c <= mid < d))
    return PeriodicStepFunction(tuple(mesh), tuple(counts))


def step_map(fn: Callable[..., Amplitude], *functions: PeriodicStepFunction) -> PeriodicStepFunction:
    mesh = common_mesh(*functions)
    columns = [f.refine(mesh) for f in functions]
    return PeriodicStepFunction(mesh, tuple(fn(*vals) for vals in zip(*columns)))


def step_reduce(op: str, F: PeriodicStepFunction, G=None) -> PeriodicStepFunction:
    """Pointwise ``add``, ``mul``, ``conj``, ``scale`` or ``abs2``.

    For ``scale`` the second argument is a number rather than a step function.
    """
    if op == "add":
        return step_map(lambda u, v: u + v, F, G)
    if op == "mul":
        return step_map(lambda u, v: u * v, F, G)
    if op == "conj":
        return step_map(conj, F)
    if op == "abs2":
        return step_map(abs2, F)
    if op == "scale":
        c = amplitude(G)
        return step_map(lambda u: c * u, F)
    raise ValueError(f"unknown step operation {op!r}")


def step_integrate_pi(F: PeriodicStepFunction) -> Amplitude:
    """``∫_{[−π,π)} F`` divided by π; exact when every cell is exact."""
    total: Amplitude = ZERO
    for a, b, v in F.cells():
        total = total + v * (b - a)
    return total


def step_integrate(F: PeriodicStepFunction) -> complex:
    return complex(step_integrate_pi(F)) * math.pi


def sum_steps(functions: Iterable[PeriodicStepFunction]) -> PeriodicStepFunction:
    total = PeriodicStepFunction.constant(0)
    for f in functions:
        total = step_reduce("add", total, f)
    return total
