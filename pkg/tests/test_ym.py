import math
from fractions import Fraction

import numpy as np
import pytest

from defectwb import linalg as la
from defectwb import ym


def midpoint_oracle(m, n):
    # midpoint sum of sin over (0, pi) with step h is h / sin(h / 2)
    h = math.pi / n
    return m * h / (2 * math.sin(h / 2))


def test_wavevector_count():
    ks = ym.wavevectors(4, 1)
    assert ks[0] == (0, 0, 0, 0) and len(ks) == 1 + (3**4 - 1) // 2
    assert len(set(ks)) == len(ks)
    assert all(tuple(-x for x in k) not in ks for k in ks[1:])
    with pytest.raises(ValueError):
        ym.wavevectors(4, -1)


@pytest.mark.parametrize("c", [0, 1, -1, Fraction(3, 2)])
def test_d_squared_and_row_decoupling(c):
    rep = ym.build_ym_complex(1, c)
    assert rep["d_squared_zero"] and rep["d_squared_residual"] == 0
    assert rep["rows_decouple"] == (c == 0)
    N = 1 + 2 * 40
    assert rep["dims"] == {-1: N, 0: 7 * N, 1: 7 * N, 2: N}


def test_d_squared_with_constant_abelian_background():
    rep = ym.build_ym_complex(1, 2, background=(1, 0, Fraction(1, 2), -3))
    assert rep["d_squared_zero"]


def test_cutoff_must_be_positive():
    with pytest.raises(ValueError):
        ym.build_ym_complex(0, 1)


def test_assembled_split_matches_coupling():
    assert ym.assembled_split(ym.assemble_ym(1, 0))
    assert not ym.assembled_split(ym.assemble_ym(1, 1))


def test_assembled_d_squared():
    d = ym.assemble_ym(1, 1)["d"]
    assert la.is_zero(la.matmul(d[0], d[-1])) and la.is_zero(la.matmul(d[1], d[0]))


def test_projector_and_self_dual_basis():
    rep = ym.projector_checks()
    assert rep == {"idempotent": True, "star_fixes_image": True, "self_dual_rank": 3}
    star = ym.flat_star()
    assert la.is_zero(la.matmul(star, star) - la.identity(6, True))


def test_zero_mode_cohomology():
    assert ym.zero_mode_cohomology(0) == {-1: 1, 0: 7, 1: 7, 2: 1}
    assert ym.zero_mode_cohomology(1) == {-1: 1, 0: 4, 1: 4, 2: 1}


def test_gauge_modes_solve_the_equations():
    f = ym.YMField.zero(1)
    for k in f.A:
        chi = la.exact([Fraction(i + 1, 3) for i in range(ym.sector_size(k))]).reshape(-1, 1)
        f.A[k][:] = la.matmul(ym.ext_d(4, 0, k), chi).ravel()
    res = ym.eom_residuals_ym(f, 1)
    assert res["first"] == 0 and res["second"] == 0


def test_constant_A_and_random_A():
    res = ym.eom_residuals_ym(ym.YMField.constant_A(1, [1, 2, 3, 4]), 1)
    assert res == {"first": 0, "second": 0}
    rnd = ym.YMField.random(1, seed=3)
    assert ym.eom_residuals_ym(rnd, 1)["first"] > 0
    solved = ym.field_with_B_from_A(rnd, 2)
    assert ym.eom_residuals_ym(solved, 2)["first"] == 0
    with pytest.raises(ValueError):
        ym.field_with_B_from_A(rnd, 0)


def test_boundary_B0_condition():
    bnd = ym.build_boundary_complex(1)
    rep = ym.boundary_condition_B0(bnd)
    assert rep["chain_map"] and rep["isotropic"] and rep["strict_self_perp"]
    assert rep["cohomology_lagrangian"] and rep["half_cohomology"]


def test_boundary_negative_controls():
    bnd = ym.build_boundary_complex(1)
    assert not ym.boundary_condition_B0(bnd, extra_b=[0])["isotropic"]
    zero = ym.boundary_condition_B0(bnd, zero=True)
    assert zero["isotropic"] and not zero["strict_self_perp"]


def test_boundary_pairing():
    rep = ym.boundary_pairing_report(ym.build_boundary_complex(1))
    assert rep["skew"] and rep["d_compatible"] and rep["d_sign"] == -1


@pytest.mark.parametrize("m", [-3, -1, 1, 2])
@pytest.mark.parametrize("n", [8, 16, 64])
def test_quadrature_matches_closed_form(m, n):
    plain = ym.magnetic_charge(ym.MonopoleField(m), n, "midpoint")["estimate"]
    assert plain == pytest.approx(midpoint_oracle(m, n), rel=1e-13)
    rich = ym.magnetic_charge(ym.MonopoleField(m), n)["estimate"]
    want = (4 * midpoint_oracle(m, 2 * n) - midpoint_oracle(m, n)) / 3
    assert rich == pytest.approx(want, rel=1e-13)


def test_zero_charge_is_exact():
    assert ym.magnetic_charge(ym.MonopoleField(0), 16)["error"] == 0


def test_convergence_orders():
    assert ym.charge_convergence(2)["slope"] == pytest.approx(-4.0, abs=0.1)
    assert ym.charge_convergence(2, method="midpoint")["slope"] == pytest.approx(-2.0, abs=0.05)
    # plain midpoint misses the 1e-6 tolerance at n = 64
    assert ym.magnetic_charge(ym.MonopoleField(1), 64, "midpoint")["error"] > 1e-6


def test_quadrature_argument_errors():
    with pytest.raises(ValueError):
        ym.magnetic_charge(ym.MonopoleField(1), 4)
    with pytest.raises(ValueError):
        ym.magnetic_charge(ym.MonopoleField(1), 16, "simpson")


def test_field_is_closed_away_from_origin():
    assert ym.closedness_residual(ym.MonopoleField(3)) < 1e-6


@pytest.mark.parametrize("m,n,kind", [(0, 0, "trivial"), (2, 0, "monopole"), (0, -1, "wilson"), (1, 2, "dyonic")])
def test_dyonic_labels(m, n, kind):
    rep = ym.dyonic_label(m, n, flux=0.9)
    assert rep["kind"] == kind and rep["passed"]
    assert np.allclose(rep["wilson"]["value"], [math.cos(n * 0.9), math.sin(n * 0.9)])
