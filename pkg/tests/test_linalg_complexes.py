from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectwb import cellular
from defectwb import linalg as la
from defectwb.complexes import (
    ChainMap,
    CochainComplex,
    LagrangianCandidate,
    ShiftedPairing,
    StructuralError,
    check_d_squared,
    check_pairing,
    cohomology,
    direct_sum,
    identity_map,
    is_isotropic,
    is_lagrangian,
    is_quasi_iso,
    shift,
    tensor,
)
from defectwb.tolerance import get_eps, override_eps

small_ints = st.integers(min_value=-4, max_value=4)


def int_matrix(rows, cols):
    return st.lists(st.lists(small_ints, min_size=cols, max_size=cols), min_size=rows, max_size=rows)


@st.composite
def matmul_pair(draw):
    n, k, m = (draw(st.integers(1, 5)) for _ in range(3))
    den = draw(st.integers(1, 6))
    a = [[Fraction(x, den) for x in row] for row in draw(int_matrix(n, k))]
    b = [[Fraction(x, 3) for x in row] for row in draw(int_matrix(k, m))]
    return a, b


@given(matmul_pair())
@settings(max_examples=60, deadline=None)
def test_exact_matmul_matches_naive_sums(pair):
    a, b = pair
    got = la.matmul(la.exact(a), la.exact(b))
    for i in range(len(a)):
        for j in range(len(b[0])):
            want = sum((a[i][t] * b[t][j] for t in range(len(b))), Fraction(0))
            assert got[i, j] == want
            assert isinstance(got[i, j], Fraction)


def test_exact_matmul_large_entries_fall_back_to_python_ints():
    big = 10**15
    a = la.exact([[big, big], [1, 0]])
    b = la.exact([[big], [big]])
    assert la.matmul(a, b)[0, 0] == 2 * big * big


@given(st.integers(1, 5).flatmap(lambda r: st.integers(1, 5).flatmap(lambda c: int_matrix(r, c))))
@settings(max_examples=60, deadline=None)
def test_rank_and_nullspace_agree_with_numpy(rows):
    a = la.exact(rows)
    assert la.rank(a) == np.linalg.matrix_rank(np.array(rows, dtype=float))
    ns = la.nullspace(a)
    assert ns.shape[1] == a.shape[1] - la.rank(a)
    assert la.is_zero(la.matmul(a, ns))


def test_numeric_nullspace_and_mode_mixing():
    a = la.numeric([[1.0, 2.0], [2.0, 4.0]])
    ns = la.nullspace(a)
    assert ns.shape == (2, 1) and np.allclose(a @ ns, 0)
    with pytest.raises(la.ModeError):
        la.matmul(la.exact([[1]]), la.numeric([[1.0]]))
    with pytest.raises(la.ModeError):
        la.exact([[0.5]])


def test_eps_override_and_env(monkeypatch):
    assert get_eps() == 1e-9
    monkeypatch.setenv("DEFECTWB_EPS", "1e-6")
    assert get_eps() == 1e-6
    with override_eps(1e-3):
        assert get_eps() == 1e-3
    monkeypatch.setenv("DEFECTWB_EPS", "nonsense")
    with pytest.raises(ValueError):
        get_eps()


def test_sphere_and_torus_cohomology():
    assert cohomology(cellular.sphere(0)).dims == {0: 2}
    assert cohomology(cellular.sphere(3)).betti() == (1, 0, 0, 1)
    assert cohomology(cellular.circle(5)).betti() == (1, 1)
    assert cohomology(cellular.torus(3)).betti() == (1, 2, 1)
    assert cohomology(cellular.torus(2, dim=3)).betti() == (1, 3, 3, 1)


def test_kunneth_for_tensor_and_direct_sum():
    s1 = cellular.circle(3)
    t = tensor(s1, cellular.interval([0, 1, 3]))
    assert cohomology(t).betti() == (1, 1, 0)
    ds = direct_sum(s1, cellular.sphere(2))
    assert cohomology(ds).betti() == (2, 1, 1)
    assert cohomology(shift(s1, 1)).dims[-1] == 1


def test_d_squared_report_flags_degree():
    bad = CochainComplex.build({0: 1, 1: 1, 2: 1}, {0: la.exact([[1]]), 1: la.exact([[1]])})
    rep = check_d_squared(bad)
    assert not rep.ok and rep.offending == [0]
    assert check_d_squared(cellular.torus(2)).ok


def test_quasi_iso_examples():
    c = cellular.circle(4)
    assert is_quasi_iso(identity_map(c))
    zero = ChainMap(c, c, {0: la.zeros((4, 4), True), 1: la.zeros((4, 4), True)})
    assert not is_quasi_iso(zero)
    big, small = cellular.interval([0, 1, 2, 3]), cellular.interval([Fraction(1, 2), 2])
    assert is_quasi_iso(cellular.interval_restriction(big, small))


def test_acyclic_complex_has_no_cohomology():
    c = CochainComplex.build({0: 1, 1: 1}, {0: la.exact([[1]])})
    assert cohomology(c).dims == {0: 0, 1: 0}


def _symplectic_plane():
    c = CochainComplex.build({0: 2}, {}, {0: ("x", "y")})
    return c, ShiftedPairing(c, 0, {0: la.exact([[0, 1], [-1, 0]])})


def test_pairing_checks_on_circle():
    rep = check_pairing(cellular.circle_pairing(3))
    assert rep.skew and rep.d_compatible
    assert rep.d_sign in (1, -1)


def test_lagrangian_examples_in_the_plane():
    c, w = _symplectic_plane()
    line = LagrangianCandidate.inclusion(c, {0: la.exact([[1], [0]])})
    rep = is_lagrangian(line, w)
    assert rep.isotropic and rep.strict_self_perp and rep.half_dimension
    whole = LagrangianCandidate.inclusion(c, {0: la.identity(2, True)})
    assert not is_isotropic(whole, w)
    zero = LagrangianCandidate.inclusion(c, {0: la.zeros((2, 0), True)})
    zrep = is_lagrangian(zero, w)
    assert zrep.isotropic and not zrep.strict_self_perp


def test_pairing_shape_validation():
    c, _ = _symplectic_plane()
    with pytest.raises(StructuralError):
        ShiftedPairing(c, 0, {0: la.exact([[1]])})


def test_inclusion_rejects_non_subcomplex():
    c = cellular.interval([0, 1])
    with pytest.raises(StructuralError):
        LagrangianCandidate.inclusion(c, {0: la.exact([[1], [0]]), 1: la.zeros((1, 0), True)})
