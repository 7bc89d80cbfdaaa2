from fractions import Fraction as Fr
import math

import pytest
from hypothesis import given, strategies as st

from ffkit.bandlimited import (
    BandlimitedFunction,
    BandlimitedSystem,
    CertificateError,
    bracket,
    dilate,
    dimension_function,
    inner,
    integral_identity_check,
    length,
    negative_dilates,
    orthogonalize,
    parse_function,
    shift_energy,
    vminus_dimension,
)
from ffkit.torus import GaussianRational, PeriodicStepFunction, abs2, step_integrate_pi, step_reduce

from conftest import indicator, journe_psi, shannon_psi, sinc, system

amps = st.builds(GaussianRational, st.fractions(-2, 2, max_denominator=4), st.fractions(-2, 2, max_denominator=4))


@st.composite
def functions(draw, lo=-4, hi=4, den=7):
    pts = sorted(draw(st.lists(st.integers(lo * den, hi * den), min_size=2, max_size=8, unique=True)))
    cells = [(Fr(a, den), Fr(b, den), draw(amps)) for a, b in zip(pts[0::2], pts[1::2])]
    return BandlimitedFunction(tuple(cells))


def test_dilate_shannon():
    got = dilate(shannon_psi(), -1, 2)
    assert got == indicator((-1, Fr(-1, 2)), (Fr(1, 2), 1), value=GaussianRational(1)).scaled(
        complex(math.sqrt(2)))


def test_dilate_identity_and_journe():
    f = journe_psi()
    assert dilate(f, 0, 2) is f
    want = indicator((Fr(-8, 7), -1), (Fr(-1, 4), Fr(-1, 7)), (Fr(1, 7), Fr(1, 4)), (1, Fr(8, 7)), value=2)
    assert dilate(f, -2, 2) == want


def test_brackets():
    assert bracket(shannon_psi(), shannon_psi()) == PeriodicStepFunction.constant(1)
    assert bracket(sinc(), sinc()) == PeriodicStepFunction.constant(1)
    assert bracket(shannon_psi(), sinc()) == PeriodicStepFunction.constant(0)


def test_shift_energy_examples():
    assert shift_energy(shannon_psi(), shannon_psi()) == 1
    assert shift_energy(shannon_psi(), sinc()) == 0
    f, g = indicator((0, 1)), indicator((-1, 1))
    assert shift_energy(f, g) == Fr(1, 2)


def test_orthogonalize_examples():
    assert orthogonalize(system(sinc())).functions == [sinc()]
    assert orthogonalize(system(sinc(), sinc())).functions == [sinc()]
    pair = system(indicator((0, 1)), indicator((0, 2)))
    dim = dimension_function(pair)
    assert dim == PeriodicStepFunction.constant(1)
    assert len(orthogonalize(pair)) == 1


def test_dimension_examples():
    assert dimension_function(system(sinc())) == PeriodicStepFunction.constant(1)
    assert dimension_function([]) == PeriodicStepFunction.constant(0)
    assert length(negative_dilates(system(journe_psi()), 2).H) == 2


def test_negative_dilates_reject_zero():
    with pytest.raises(CertificateError):
        negative_dilates(system(sinc()), 2)


def test_negative_dilates_shannon_support():
    fam = negative_dilates(system(shannon_psi()), 2)
    total = vminus_dimension(system(shannon_psi()), 2)
    assert total == PeriodicStepFunction.constant(1)
    assert fam.certificate.core <= Fr(1, 2)


def journe_oracle(x: Fr) -> int:
    """Count (j, k), j ≥ 1, with 2^j (x + 2k) in ±K (units of π)."""
    K = [(Fr(4, 7), Fr(1)), (Fr(4), Fr(32, 7))]
    count = 0
    for j in range(1, 12):
        for k in range(-40, 41):
            y = abs(2 ** j * (x + 2 * k))
            count += any(a <= y < b for a, b in K)
    return count


@pytest.mark.parametrize("x, want", [(Fr(1, 7), 2), (Fr(1, 2), 1), (Fr(5, 7), 0)])
def test_journe_pointwise(x, want):
    dim = vminus_dimension(system(journe_psi()), 2)
    assert journe_oracle(x) == want
    assert dim.at(x) == want


def test_journe_dimension_matches_oracle_everywhere():
    dim = vminus_dimension(system(journe_psi()), 2)
    for n in range(-98, 98):
        x = Fr(2 * n + 1, 196)
        assert dim.at(x) == journe_oracle(x)


def test_integral_identity():
    rep = integral_identity_check(system(journe_psi()), 2)
    assert rep.passed and rep.integral_pi == 2 and rep.constant is None and rep.sup == 2
    rep = integral_identity_check(system(shannon_psi()), 2)
    assert rep.passed and rep.constant == 1


def test_integral_identity_flags_non_wavelet():
    psi2 = indicator((-4, -2), (2, 4))
    rep = integral_identity_check(system(shannon_psi(), psi2), 2)
    assert rep.expected_pi == 4
    assert not rep.passed


def test_parse_function_rejects_reversed():
    with pytest.raises(ValueError, match="empty interval"):
        parse_function([{"interval_pi": ["1", "4/7"], "re": "1"}])


@given(functions())
def test_norm_via_bracket(f):
    assert f.norm2() == step_integrate_pi(bracket(f, f)) * Fr(1, 2)


@given(functions(), functions())
def test_cauchy_schwarz_per_cell(f, g):
    fg = step_reduce("abs2", bracket(f, g))
    ff, gg = bracket(f, f), bracket(g, g)
    for a, _, v in fg.cells():
        assert v.re <= (ff.at(a) * gg.at(a)).re


@given(functions(), functions())
def test_inner_symmetry(f, g):
    assert inner(f, g) == inner(g, f).conjugate()


@given(st.lists(functions(), min_size=1, max_size=3))
def test_orthogonalize_structure(fs):
    Phi = system(*fs)
    ortho = orthogonalize(Phi)
    dim = dimension_function(Phi)
    assert dimension_function(ortho) == dim
    selfs = [bracket(p, p) for p in ortho.functions]
    for i, p in enumerate(ortho.functions):
        for q in ortho.functions[i + 1:]:
            assert all(abs(complex(v)) < 1e-12 for v in bracket(p, q).values)
    for s in selfs:
        assert all(abs(complex(v)) < 1e-12 or abs(complex(v) - 1) < 1e-12 for v in s.values)
    total = PeriodicStepFunction.constant(0)
    for s in selfs:
        total = step_reduce("add", total, s)
    for a, _, v in total.cells():
        assert abs(complex(v) - complex(dim.at(a))) < 1e-12
    for nxt, prev in zip(selfs[1:], selfs):
        assert nxt.support().measure <= prev.support().measure
        assert (nxt.support() - prev.support()).empty
