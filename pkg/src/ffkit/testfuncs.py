"""Seeded pseudo-random bandlimited test functions."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from .bandlimited import BandlimitedFunction
from .torus import GaussianRational

DEFAULT_TRIALS = 20


def random_bandlimited(rng: np.random.Generator, span: tuple[Fraction, Fraction],
                       denominator: int = 14, max_cells: int = 5) -> BandlimitedFunction:
    """Step function on ``span`` (units of π) with exact Gaussian-rational values."""
    lo, hi = (Fraction(x) for x in span)
    grid_lo, grid_hi = int(np.floor(lo * denominator)), int(np.ceil(hi * denominator))
    while True:
        n_cells = int(rng.integers(1, max_cells + 1))
        picks = rng.choice(np.arange(grid_lo, grid_hi + 1), size=min(2 * n_cells, grid_hi - grid_lo + 1),
                           replace=False)
        points = sorted(Fraction(int(p), denominator) for p in picks)
        cells = []
        for a, b in zip(points[0::2], points[1::2]):
            re, im = (int(x) for x in rng.integers(-4, 5, size=2))
            if re or im:
                cells.append((a, b, GaussianRational(Fraction(re, 4), Fraction(im, 4))))
        f = BandlimitedFunction(tuple(cells))
        if f.cells:
            return f


def trial_functions(seed: int, span, count: int = DEFAULT_TRIALS, denominator: int = 14):
    rng = np.random.default_rng(seed)
    return [random_bandlimited(rng, span, denominator) for _ in range(count)]


def trial_pairs(seed: int, span, count: int = DEFAULT_TRIALS, denominator: int = 14):
    rng = np.random.default_rng(seed)
    return [(random_bandlimited(rng, span, denominator), random_bandlimited(rng, span, denominator))
            for _ in range(count)]
