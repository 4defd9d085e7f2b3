from fractions import Fraction

import pytest
import sympy as sp

from defectwb import linalg as la
from defectwb import scalar_defect as sd
from defectwb.complexes import LagrangianCandidate, is_isotropic


def sympy_block(R, M, k):
    """Oracle: expand (u'' + u'/r - k^2 u / r^2) about r = R for u = t^n, n = 0..M."""
    t = sp.symbols("t")
    r = sp.Rational(R) + t
    rows = []
    cols = []
    for n in range(M + 1):
        u = t**n
        expr = sp.diff(u, t, 2) + sp.diff(u, t) / r - k**2 * u / r**2
        ser = sp.series(expr, t, 0, M - 1).removeO()
        cols.append([sp.Rational(ser.coeff(t, m)) for m in range(M - 1)])
    for m in range(M - 1):
        rows.append([cols[n][m] for n in range(M + 1)])
    return rows


@pytest.mark.parametrize("R,M,k", [(1, 5, 0), (1, 6, 2), ("3/2", 5, -3), (2, 4, 1)])
def test_operator_block_matches_series_expansion(R, M, k):
    block = sd.operator_block(R, M, k)
    want = sympy_block(Fraction(R), M, k)
    for m in range(M - 1):
        for n in range(M + 1):
            assert block[m, n] == Fraction(int(want[m][n].p), int(want[m][n].q))


def test_power_and_log_jets_against_sympy():
    t = sp.symbols("t")
    R = sp.Rational(3, 2)
    for power in (3, 0, -2):
        ser = sp.series((R + t) ** power, t, 0, 6).removeO()
        got = sd.power_jet_coeffs(Fraction(3, 2), 5, power)
        assert got == [Fraction(str(ser.coeff(t, m))) for m in range(6)]
    ser = sp.series(sp.log(1 + t / R), t, 0, 6).removeO()
    assert sd.log_jet_coeffs(Fraction(3, 2), 5) == [Fraction(str(ser.coeff(t, m))) for m in range(6)]


@pytest.mark.parametrize("R", [1, "2/3", 5])
def test_harmonic_jets_are_annihilated_exactly(R):
    for k in range(-4, 5):
        r = sd.annihilation_residual(sd.harmonic_jet(R, 8, 4, k))
        assert isinstance(r, Fraction) and r == 0
    log = sd.jet_from_modes(R, 8, 4, {0: sd.log_jet_coeffs(R, 8)})
    assert sd.annihilation_residual(log) == 0


def test_non_harmonic_jet_is_not_annihilated():
    j = sd.jet_from_modes(1, 6, 2, {1: [0, 0, 1]})
    assert sd.annihilation_residual(j) > 0


def test_float_mode_agrees_with_exact():
    exact = sd.annihilation_residual(sd.harmonic_jet(2, 8, 3, 3))
    approx = sd.annihilation_residual(sd.harmonic_jet(2.0, 8, 3, 3))
    assert exact == 0 and approx < 1e-12


def test_operator_is_block_diagonal_and_surjective():
    assert sd.jet_operator(1, 6, 3).is_block_diagonal()
    rep = sd.surjectivity_report(1, 5, 8)
    assert rep["surjective"] and rep["cokernel_dim"] == 0


def test_kernel_dimension_is_reported_not_asserted():
    rep = sd.kernel_report(1, 3, 8)
    # a second-order ODE in r: two free Cauchy coefficients per mode
    assert rep["kernel_dim_per_mode"] == [2]
    assert rep["claimed_dim_per_mode"] == 1 and not rep["matches_claimed_dim"]
    assert all(m["parameterised_by_a0_a1"] for m in rep["modes"])


def test_omega_D_values():
    assert sd.omega_D(2, -2) == 1 and sd.omega_D(-2, 2) == -1
    assert sd.omega_D(0, 0) == 0 and sd.omega_D(1, 2) == 0
    rep = sd.omega_D_report(4)
    assert rep["skew"] and rep["radical_dim"] == 1 and rep["radical_is_constant_mode"]


@pytest.mark.parametrize("K", [1, 2, 3, 4])
def test_every_spectral_set_gives_a_lagrangian(K):
    sets = sd.all_spectral_sets(K)
    assert len(sets) == 2**K
    for S in sets:
        rep = sd.spectral_lagrangian_check(S, K)
        assert rep["passed"] and rep["radical_dim"] == 1


@pytest.mark.parametrize("S,K", [({0, 1}, 1), ({1, -1}, 1), ({2}, 1), (set(), 1)])
def test_spectral_set_validation(S, K):
    with pytest.raises(sd.DomainError):
        sd.validate_spectral_set(S, K)


def test_keeping_both_k_and_minus_k_breaks_isotropy():
    pairing = sd.boundary_circle_pairing(1)
    cols = la.zeros((3, 2), True)
    cols[0, 0] = cols[2, 1] = Fraction(1)
    assert not is_isotropic(LagrangianCandidate.inclusion(pairing.complex, {0: cols}), pairing)


def test_radius_validation():
    for bad in (0, -1, "-1/2"):
        with pytest.raises(sd.DomainError):
            sd.operator_block(bad, 4, 0)
    with pytest.raises(sd.DomainError):
        sd.operator_block(1, 1, 0)
    with pytest.raises(sd.DomainError):
        sd.jet_from_modes(1, 4, 1, {2: [1]})


@pytest.mark.parametrize("k", [0, 1, -3])
def test_scaling_relation(k):
    assert sd.scaling_check(1, 7, k, 2)["ok"]
    assert sd.scaling_check(Fraction(1, 3), 6, k, Fraction(5, 2))["ok"]


def test_harmonic_lagrangian_summary():
    rep = sd.harmonic_lagrangian(3, 8, 1)
    assert rep["in_kernel"] and rep["t0_image_is_all_modes"]
    assert rep["wronskian_isotropic"] and rep["wronskian_lagrangian"]
    assert not rep["omega_D_isotropic_after_t0"]


def test_defect_summary_shape():
    s = sd.defect_summary(1, 2, 6)
    assert s["surjectivity"]["surjective"] and s["harmonic_residuals_zero"] and s["log_residual_zero"]
    assert s["spectral_sets_checked"] == 4 and s["spectral_all_pass"]
