import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from defectwb import cellular, collapse
from defectwb.collapse import NormalPoint, OpenSet1D
from defectwb.complexes import cohomology


def h_oracle(u, lam):
    return (1 - lam) * (2.5 * u**2 - 1.5 * u**3) + lam * (3.5 * u**3 - 2.5 * u**4)


def test_profile_values_against_closed_form():
    f = collapse.make_profile(0.25)
    assert f(0.2) == 0.0
    assert f(0.6) == 0.6
    assert f(0.4) == pytest.approx(0.5 * h_oracle(0.6, 0.0), abs=1e-15)
    assert f(0.4) == pytest.approx(0.288, abs=1e-15)


@pytest.mark.parametrize("lam", [0.0, 0.3, 1.0])
def test_profile_is_c1_at_the_seams(lam):
    t = 0.3
    f = collapse.make_profile(t, lam)
    for s in (t, 2 * t):
        assert f.derivative(s - 1e-9) == pytest.approx(f.derivative(s + 1e-9), abs=1e-6)
    assert f.derivative(2 * t + 1e-12) == 1.0


@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0), st.floats(0.0, 3.0))
@settings(max_examples=200, deadline=None)
def test_profile_non_increasing_in_t(t, lam, s):
    t2 = min(t + 0.03, 0.99)
    assert collapse.make_profile(t2, lam)(s) <= collapse.make_profile(t, lam)(s) + 1e-12


@given(st.floats(0.05, 0.95), st.floats(0.0, 1.0))
@settings(max_examples=50, deadline=None)
def test_profile_contract_holds_across_family(t, lam):
    rep = collapse.check_profile(collapse.make_profile(t, lam), 1000)
    assert rep["zero_on_[0,t]"] and rep["identity_on_[2t,3]"] and rep["monotone"]


def test_domain_errors():
    for bad in (0.0, 1.0, -0.5):
        with pytest.raises(ValueError):
            collapse.make_profile(bad)
    with pytest.raises(ValueError):
        collapse.make_profile(0.5, 1.5)
    with pytest.raises(ValueError):
        NormalPoint("x", (3.0, 0.0))


def test_inverse_matches_brentq():
    f = collapse.make_profile(0.25)
    for y in (0.01, 0.1, 0.3, 0.49):
        want = brentq(lambda s: f(s) - y, 0.25, 0.5, xtol=1e-14)
        assert f.inverse(y) == pytest.approx(want, abs=1e-11)
    assert f.inverse(1.7) == 1.7


def test_preimage_of_small_interval_around_defect():
    pre = collapse.preimage_open(OpenSet1D.of((-0.1, 0.1)), 0.25)
    (a, b), = pre.intervals
    f = collapse.make_profile(0.25)
    want = brentq(lambda s: f(s) - 0.1, 0.25, 0.5, xtol=1e-14)
    assert b == pytest.approx(want, abs=1e-11) and a == pytest.approx(-want, abs=1e-11)
    assert want == pytest.approx(0.32849, abs=1e-5)


def test_preimage_fixes_far_opens():
    for U in (OpenSet1D.of((1, 2)), OpenSet1D.of((-3, 3)), OpenSet1D.of((-2.5, -0.6), (0.7, 0.9))):
        assert collapse.preimage_open(U, 0.25) == U


def test_collapse_point_radial():
    f = collapse.make_profile(0.25)
    p = collapse.collapse_point(NormalPoint("x", (0.3, 0.4)), f)
    assert math.hypot(*p.v) == pytest.approx(f(0.5))
    assert collapse.collapse_point(NormalPoint("x", (0.1, 0.0)), f).v == (0.0, 0.0)


def test_openset_merging_and_relations():
    U = OpenSet1D.of((0, 1), (0.5, 2), (3, 4))
    assert U.intervals == ((0.0, 2.0), (3.0, 4.0))
    assert U.contains(OpenSet1D.of((0.2, 0.4)))
    assert U.disjoint(OpenSet1D.of((2, 3)))
    with pytest.raises(ValueError):
        OpenSet1D.of((1, 1))


def test_locality_grid_and_check():
    opens = collapse.locality_grid(0.25, 50)
    assert len(opens) == 50
    assert collapse.check_locality(0.25, opens)["all_equal"]
    near = [OpenSet1D.of((-0.4, 0.45))]
    assert not collapse.check_locality(0.25, near)["all_equal"]


def test_annulus_equivalence_and_massive_control():
    cs = cellular.THEORIES["abelian_cs"]()
    assert collapse.annulus_equivalence(cs, ("1/4", "11/4"), ("1/2", "5/2"))
    massive = cellular.THEORIES["massive"]()
    assert not collapse.annulus_equivalence(massive, ("1/4", "11/4"), ("1/2", "5/2"))
    with pytest.raises(ValueError):
        collapse.annulus_equivalence(cs, ("1/2", "1"), ("1/4", "2"))


@pytest.mark.parametrize("n,k,betti", [
    (2, 2, {0: 1, 1: 1}),
    (3, 2, {0: 1, 1: 1}),
    (3, 3, {0: 1, 2: 1}),
    (1, 1, {0: 2}),
    (4, 1, {0: 2}),
])
def test_blowup_boundary_cohomology(n, k, betti):
    b = collapse.blowup_boundary(n, k)
    dims = {p: v for p, v in cohomology(b.complex).dims.items() if v}
    assert dims == betti


def test_blowup_description_and_errors():
    assert collapse.blowup_boundary(3, 2).description == "S^1 × R^1"
    assert collapse.blowup_boundary(2, 2).description == "S^1"
    with pytest.raises(ValueError):
        collapse.blowup_boundary(2, 3)
    with pytest.raises(ValueError):
        collapse.blowup_boundary(2, 0)


def test_profile_table_is_csv_ready():
    rows = collapse.make_profile(0.25).table(7)
    assert rows[0] == (0.0, 0.0) and rows[-1] == (3.0, 3.0)
    assert np.all(np.diff([r[1] for r in rows]) >= 0)
