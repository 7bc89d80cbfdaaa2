from fractions import Fraction as Fr
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from ffkit.bandlimited import (
    CertificateError,
    bracket,
    dimension_function,
    mixed_shift_sum,
    negative_dilates,
    shift_energy,
)
from ffkit.filterbank import TrigPolyMatrix, check_tight_fb, polyphase_matrix
from ffkit.lift import (
    check_dual_reduction,
    check_reduction,
    compact_support_reduce_1d,
    gramian_from_family,
    lift_homogeneous,
    reduce_generators,
    reduce_generators_dual,
    reduce_wavelet_generators,
    shift_energy_sum,
)
from ffkit.testfuncs import trial_functions, trial_pairs

from conftest import indicator, journe_psi, shannon_psi, sinc, system
from test_bandlimited import functions


def cells_close(f, g, tol=1e-12):
    pts = sorted(set(f.breakpoints()) | set(g.breakpoints()))
    return all(abs(complex(f.at((a + b) / 2)) - complex(g.at((a + b) / 2))) <= tol
               for a, b in zip(pts, pts[1:]))


def test_gramian_sinc():
    G = gramian_from_family(system(sinc()))
    assert G.r == 1
    assert np.allclose(G.A.matrices, 1)
    assert bracket(G.phi.functions[0], G.phi.functions[0]).values == (1,)


def test_gramian_duplicate():
    G = gramian_from_family(system(sinc(), sinc()))
    assert np.allclose(G.A.matrices, 2)
    eta = reduce_generators(system(sinc(), sinc()))
    assert len(eta) == 1
    assert cells_close(eta.functions[0], sinc().scaled(complex(math.sqrt(2))))


def test_gramian_journe_trace():
    H = negative_dilates(system(journe_psi()), 2).H
    G = gramian_from_family(H)
    assert G.A.shape == (2, 2)
    ends = list(G.A.mesh[1:]) + [Fr(1)]
    trace = sum(np.trace(m).real * float(b - a) for m, a, b in zip(G.A.matrices, G.A.mesh, ends)) / 2
    direct = sum(complex(h.norm2()).real for h in H.functions)
    assert trace == pytest.approx(direct, abs=1e-12)


def test_reduce_identity_cases():
    eta = reduce_generators(system(sinc()))
    assert cells_close(eta.functions[0], sinc())
    f = indicator((0, 1), (2, 3))
    tests = trial_functions(3, (-3, 3))
    H = system(f, f)
    eta = reduce_generators(H)
    assert len(eta) == 1
    for g in tests:
        assert complex(shift_energy_sum(g, eta)) == pytest.approx(2 * complex(shift_energy(g, f)), abs=1e-12)


def test_reduce_journe_energy():
    H = negative_dilates(system(journe_psi()), 2).H
    eta = reduce_generators(H)
    assert len(eta) == 2
    rep = check_reduction(H, eta, trial_functions(2024, (-5, 5)))
    assert rep.passed and rep.residual <= 1e-8


def test_dual_reduction_sinc():
    red = reduce_generators_dual(system(sinc()), system(sinc()))
    assert cells_close(red.eta.functions[0], sinc())
    assert cells_close(red.eta_dual.functions[0], sinc())


def test_dual_reduction_duplicates():
    f, g = indicator((0, 1)), indicator((0, 1), value=3)
    H, Ht = system(f, f), system(g, g)
    red = reduce_generators_dual(H, Ht)
    mixed, bessel = check_dual_reduction(H, Ht, red.eta, red.eta_dual, trial_pairs(5, (-2, 2)))
    assert mixed.passed and bessel.passed
    a, b = trial_pairs(9, (-2, 2), count=1)[0]
    want = 2 * complex(mixed_shift_sum(a, f, g, b))
    got = sum(complex(mixed_shift_sum(a, p, q, b)) for p, q in zip(red.eta.functions, red.eta_dual.functions))
    assert got == pytest.approx(want, abs=1e-12)


def test_journe_rows_orthonormal():
    fam = negative_dilates(system(journe_psi()), 2, system(journe_psi()))
    red = reduce_generators_dual(fam.H, fam.H_dual)
    assert red.rows_residual <= 1e-9


def test_lift_shannon():
    res = lift_homogeneous(system(shannon_psi()), 2)
    assert res.passed and len(res.Phi) == 1
    phi = res.Phi.functions[0]
    assert phi.support() == sinc().support()
    assert all(abs(abs(complex(v)) - 1) <= 1e-12 for _, _, v in phi.cells)
    assert res.tight_report.residual <= 1e-8


def test_lift_journe():
    res = lift_homogeneous(system(journe_psi()), 2, seed=2024)
    assert len(res.Phi) == 2
    assert res.energy_check.residual <= 1e-8
    assert res.tight_report.passed and res.tight_report.residual <= 1e-8


def test_lift_journe_dual():
    res = lift_homogeneous(system(journe_psi()), 2, mode="dual", Psi_dual=system(journe_psi()), seed=1)
    assert res.passed
    assert res.energy_check.residual <= 1e-8 and res.rows_residual <= 1e-9


def test_lift_rejects_zero_in_support():
    with pytest.raises(CertificateError):
        lift_homogeneous(system(sinc()), 2)


@pytest.mark.parametrize("J", [-1, 0, 1, 2])
def test_lift_scale_invariance(J):
    res = lift_homogeneous(system(journe_psi()), 2, seed=7, trials=6, J=J)
    assert res.tight_report.passed


def test_wavelet_reduction():
    red = reduce_wavelet_generators(system(shannon_psi(), shannon_psi()), 2)
    assert len(red.Psi) == 1 and red.check.passed
    assert cells_close(red.Psi.functions[0], shannon_psi().scaled(complex(math.sqrt(2))))
    red = reduce_wavelet_generators(system(shannon_psi()), 2)
    assert cells_close(red.Psi.functions[0], shannon_psi())
    f, g = indicator((1, 2)), indicator((1, Fr(3, 2)), value=2)
    red = reduce_wavelet_generators(system(f, g), 2)
    assert len(red.Psi) == 1 and red.check.residual <= 1e-8


def test_compact_reduce_unitary_passthrough():
    s = 1 / math.sqrt(2)
    b = TrigPolyMatrix({(0,): [[s], [0]], (1,): [[0], [s]]}, (2, 1))
    assert np.allclose(polyphase_matrix(b, 2).coeffs[(0,)], np.eye(2))
    red = compact_support_reduce_1d(b, 2)
    assert red.passed
    xi = np.linspace(-np.pi, np.pi, 17)
    assert np.allclose(np.abs(red.reduced.evaluate(xi)), np.abs(b.evaluate(xi)), atol=1e-8)


def test_compact_reduce_bspline(hat):
    a, b = hat
    red = compact_support_reduce_1d(b, 2)
    assert red.reduced.shape == (2, 1)
    assert red.residual <= 1e-6
    assert check_tight_fb(a, red.reduced, 2, tol=1e-6).passed


def test_compact_reduce_redundant_rows(rng):
    b = TrigPolyMatrix({(k,): rng.normal(size=(4, 1)) for k in range(3)}, (4, 1))
    red = compact_support_reduce_1d(b, 2)
    assert red.reduced.shape == (2, 1)
    theta = polyphase_matrix(b, 2)
    again = polyphase_matrix(red.reduced, 2)
    assert ((again.adjoint() @ again) - theta.adjoint() @ theta).max_coefficient() <= 1e-6


@given(st.lists(functions(lo=-3, hi=3), min_size=1, max_size=3))
def test_reduce_preserves_dimension(fs):
    H = system(*fs)
    eta = reduce_generators(H)
    assert dimension_function(eta) == dimension_function(H)


@given(st.lists(functions(lo=-3, hi=3), min_size=1, max_size=3), st.integers(0, 1000))
def test_energy_equality_per_test_function(fs, seed):
    H = system(*fs)
    eta = reduce_generators(H)
    for f in trial_functions(seed, (-3, 3), count=4):
        lhs = complex(shift_energy_sum(f, eta))
        rhs = complex(shift_energy_sum(f, H))
        assert abs(lhs - rhs) <= 1e-8 * (1 + complex(f.norm2()).real)


@given(st.lists(functions(lo=-3, hi=3), min_size=1, max_size=2))
def test_dual_symmetry(fs):
    H = system(*fs)
    red = reduce_generators_dual(H, H)
    G = red.gramian
    assert red.rows_residual <= 1e-9
    for c, a in enumerate(G.table.mesh):
        for i, p in enumerate(red.eta.functions):
            for j, q in enumerate(red.eta_dual.functions):
                assert abs(complex(bracket(p, q).at(a)) - G.A.matrices[c][i, j]) <= 1e-9


def test_dual_symmetry_projection_case():
    H = system(shannon_psi(), sinc())
    red = reduce_generators_dual(H, H)
    G = red.gramian
    for c, a in enumerate(G.table.mesh):
        got = np.array([[complex(bracket(p, q).at(a)) for q in red.eta_dual.functions]
                        for p in red.eta.functions])
        assert np.allclose(got, np.diag(G.sgn[c]), atol=1e-12)
