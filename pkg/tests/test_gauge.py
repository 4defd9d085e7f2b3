import math
from fractions import Fraction

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from defectwb import cellular, gauge
from defectwb import linalg as la


@given(arrays(np.float64, (3, 3), elements=st.floats(-6, 6)), arrays(np.float64, (3, 3), elements=st.floats(-6, 6)))
@settings(max_examples=80, deadline=None)
def test_expm_matches_scipy(re, im):
    a = re + 1j * im
    want = scipy.linalg.expm(a)
    assert np.allclose(gauge.expm(a), want, rtol=1e-9, atol=1e-9 * max(1.0, np.abs(want).max()))


def test_expm_rejects_non_square():
    with pytest.raises(gauge.StructuralError):
        gauge.expm(np.zeros((2, 3)))


@pytest.mark.parametrize("name", sorted(gauge.LIE_ALGEBRAS))
def test_builtin_algebras_pass_their_checks(name):
    assert gauge.get_algebra(name).check()["ok"]


def test_broken_structure_constants_are_rejected():
    c = la.zeros((3, 3, 3), True)
    c[0, 1, 2] = Fraction(1)  # not antisymmetric
    with pytest.raises(gauge.DomainError):
        gauge.LieAlgebraData("bad", ("a", "b", "c"), c)
    with pytest.raises(gauge.DomainError):
        gauge.get_algebra("e8")


@pytest.mark.parametrize("flux", [0.3, -1.2, 5.0])
def test_u1_monodromy_is_a_phase(flux):
    g = gauge.monodromy(gauge.u1_loop(flux, segments=7))
    assert abs(g[0, 0] - complex(math.cos(flux), math.sin(flux))) < 1e-12


def test_sl2_monodromy_matches_ode_for_piecewise_constant():
    lie = gauge.sl2()
    c = gauge.LoopConnection((([0.2, 0.4, -0.1], 1.0), ([0.0, 0.3, 0.5], 2.0)), lie)
    mats = c.matrices()
    want = scipy.linalg.expm(mats[1][0] * 2.0) @ scipy.linalg.expm(mats[0][0] * 1.0)
    assert np.allclose(gauge.monodromy(c), want, atol=1e-12)
    assert abs(np.linalg.det(gauge.monodromy(c)) - 1) < 1e-12


def test_conjugacy_invariants_are_gauge_invariant():
    lie = gauge.sl2()
    mats = gauge.LoopConnection(tuple(gauge.LoopConnection((([0.3, 0.5, 0.0], 1.0), ([0.1, 0.0, 0.4], 2.0)),
                                                           lie).matrices()))
    base = np.array(gauge.conjugacy_invariants(gauge.monodromy(mats)))
    h = scipy.linalg.expm(np.array([[0.4, 1.1], [-0.7, -0.4]]))
    moved = np.array(gauge.conjugacy_invariants(gauge.monodromy(mats.gauge(h))))
    assert np.allclose(base, moved, atol=1e-10)


def test_exact_characteristic_polynomial():
    assert gauge.conjugacy_invariants(la.exact([[1, 2], [3, 4]])) == [1, -5, -2]
    assert np.allclose(gauge.conjugacy_invariants(np.array([[1.0, 2.0], [3.0, 4.0]])), [1, -5, -2])


def test_refinement_is_second_order():
    rep = gauge.refinement_convergence(gauge.default_smooth_connection)
    errs = [r["error"] for r in rep["rows"]]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert 1.9 <= rep["slope"] <= 2.2


@pytest.mark.parametrize("s", [-3, Fraction(1, 2), 0, 7])
def test_bf_graph_lagrangians(s):
    r = gauge.bf_lagrangian_graph(s, gauge.sl2())
    assert r["isotropic"] and r["strict_self_perp"] and r["dim"] == 3 and r["kappa_symmetric"]


def test_bf_graph_needs_a_form():
    with pytest.raises(gauge.DomainError):
        gauge.bf_lagrangian_graph(1, gauge.heisenberg())
    with pytest.raises(gauge.DomainError):
        gauge.bf_lagrangian_graph(1, gauge.sl2(), kappa=[[1, 0, 0], [0, 0, 0], [0, 0, 0]])


def test_antisymmetric_kappa_graph_is_not_isotropic():
    K = [[0, 1, 0], [-1, 0, 0], [0, 0, 1]]
    r = gauge.bf_lagrangian_graph(1, gauge.sl2(), kappa=K)
    assert not r["isotropic"] and not r["kappa_symmetric"]


@pytest.mark.parametrize("name", ["sl2", "heisenberg", "abelian2"])
def test_subalgebra_lagrangians(name):
    lie = gauge.get_algebra(name)
    for basis in gauge.named_subalgebras(lie).values():
        r = gauge.bf_lagrangian_subalgebra(lie, basis)
        assert r["strict_self_perp"] and r["dim"] == lie.dim


def test_non_subalgebra_rejected():
    lie = gauge.sl2()
    ef = la.identity(3, True)[:, [1, 2]]
    assert not gauge.subalgebra_check(lie, ef)["closed"]
    with pytest.raises(gauge.DomainError):
        gauge.bf_lagrangian_subalgebra(lie, ef)


def test_bf_equations_on_annulus():
    lie, grid = gauge.sl2(), gauge.AnnulusGrid(6, 3)
    A = gauge.winding_connection(lie, grid, [0.8, 0.0, 0.0])
    B = np.tile([1.0, 0.0, 0.0], (grid.nv, 1))
    r = gauge.eom_residuals_bf(lie, A, B, grid)
    assert r["F_A"] < 1e-14 and r["nabla_B"] < 1e-14
    # a covector along e* is moved by the h-connection
    B2 = np.tile([0.0, 1.0, 0.0], (grid.nv, 1))
    assert gauge.eom_residuals_bf(lie, A, B2, grid)["nabla_B"] > 0.1
    with pytest.raises(gauge.StructuralError):
        gauge.eom_residuals_bf(lie, A[:-1], B, grid)


def test_annulus_grid_cells_form_a_complex():
    grid = gauge.AnnulusGrid(5, 2)
    b = np.arange(grid.nv, dtype=float) ** 2
    assert np.allclose(gauge._d1(grid, gauge._d0(grid, b)), 0)


@pytest.mark.parametrize("n", [2, 3, -2, 5])
def test_wilson_loop_weight_n_is_nth_power(n):
    loop = gauge.u1_loop(0.7)
    w1 = gauge.wilson_loop(loop, gauge.u1_weight(1))
    assert abs(gauge.wilson_loop(loop, gauge.u1_weight(n)) - w1**n) < 1e-12
    assert abs(w1 - complex(math.cos(0.7), math.sin(0.7))) < 1e-12


def test_coupled_dgla_checks():
    base = cellular.unit_interval(2)
    for n in (1, -3):
        _, r = gauge.coupled_dgla(gauge.abelian_line(), gauge.u1_semidirect_rep(n), "even", base)
        assert r["passed"]
    _, r = gauge.coupled_dgla(gauge.sl2(), gauge.standard_rep_sl2(), "odd", base)
    assert r["passed"] and r["descriptor"] == "sl2 ⋉ ΠV (dim 2)"


def test_coupled_dgla_rejects_non_module():
    bad = gauge.standard_rep_sl2()
    bad[0] = bad[0] * 2
    _, r = gauge.coupled_dgla(gauge.sl2(), bad, "odd", cellular.unit_interval(1))
    assert not r["module"]["ok"] and not r["passed"]
    with pytest.raises(gauge.DomainError):
        gauge.coupled_dgla(gauge.sl2(), gauge.standard_rep_sl2(), "neither", cellular.unit_interval(1))
    with pytest.raises(gauge.DomainError):
        gauge.coupled_dgla(gauge.u1(), gauge.u1_weight(1), "odd", cellular.unit_interval(1))


def test_trivial_defect_descriptor():
    L, r = gauge.coupled_dgla(gauge.sl2(), [], "odd", cellular.unit_interval(1))
    assert L.is_trivial_defect and r["descriptor"] == "trivial defect" and r["passed"]


def test_minimal_coupling_against_closed_forms():
    x = np.linspace(0.0, 1.0, 2001)
    psi = np.stack([np.cos(x), np.sin(x)], axis=1)
    skew = [[0.0, 1.0], [-1.0, 0.0]]
    # psi1 psi2' - psi2 psi1' = 1; a scalar connection drops out of a skew pairing
    assert gauge.minimal_coupling_action(psi, np.zeros((2, 2)), x, skew) == pytest.approx(1.0, abs=1e-6)
    assert gauge.minimal_coupling_action(psi, 0.3 * np.eye(2), x, skew) == pytest.approx(1.0, abs=1e-6)
    # symmetric pairing: |psi|^2 = 1 is constant, so only A contributes
    eye = np.eye(2)
    assert gauge.minimal_coupling_action(psi, 0.3 * eye, x, eye, "even") == pytest.approx(0.3, abs=1e-6)
    with pytest.raises(gauge.DomainError):
        gauge.minimal_coupling_action(psi, 0 * eye, x, eye, "odd")
