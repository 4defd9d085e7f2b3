import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from defectwb import fact_line as fl
from defectwb.collapse import OpenSet1D, locality_grid


@pytest.fixture(scope="module")
def V():
    return fl.SymplecticVS.darboux(1)


@pytest.fixture(scope="module")
def A(V):
    return fl.WeylAlgebra(V, hbar=1, cap=8)


# --------------------------------------------------------------------------
# operator oracle: q -> x*, p -> -d/dx on polynomials, so [q, p] = 1
# --------------------------------------------------------------------------


def _apply_word(poly: dict, a: int, b: int) -> dict:
    """P^b Q^a acting on {power: coeff} (symbol q^a p^b, q to the left)."""
    out = {k + a: c for k, c in poly.items()}
    for _ in range(b):
        out = {k - 1: -c * k for k, c in out.items() if k > 0}
    return out


def _operator(element, poly: dict) -> dict:
    total: dict = {}
    for (a, b), c in element.specialize().items():
        for k, v in _apply_word(poly, a, b).items():
            total[k] = total.get(k, 0) + c * v
    return {k: v for k, v in total.items() if v != 0}


def _compose(x, y, poly):
    return _operator(x, _operator(y, poly))


def test_canonical_commutator(A):
    q, p = A.gen("q"), A.gen("p")
    assert fl.commutator(q, p) == A.hbar_element()
    h = A.hbar_element()
    want = A.monomial((2, 2)) + A.monomial((1, 1)).scale(4) * h + (h * h).scale(2)
    assert A.parse("q^2") * A.parse("p^2") == want


@pytest.mark.parametrize("deg", [1, 2, 3])
def test_product_matches_operator_representation(A, deg):
    mons = [m for d in range(deg + 1) for m in fl.monomials(2, d)]
    for a in mons:
        for b in mons:
            x, y = A.monomial(a), A.monomial(b)
            for j in range(6):
                assert _operator(x * y, {j: 1}) == _compose(x, y, {j: 1})


@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(-3, 3)), min_size=1, max_size=4),
       st.lists(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(-3, 3)), min_size=1, max_size=4))
@settings(max_examples=40, deadline=None)
def test_random_elements_multiply_like_operators(A, xs, ys):
    def build(terms):
        out = A.zero()
        for a, b, c in terms:
            out = out + A.monomial((a, b)).scale(c)
        return out
    x, y = build(xs), build(ys)
    for j in range(5):
        assert _operator(x * y, {j: 1}) == _compose(x, y, {j: 1})


def test_associativity_up_to_cap(A):
    rep = fl.weyl_associativity(fl.WeylAlgebra(A.V, cap=5))
    assert rep["ok"] and rep["checked"] > 0


def test_hbar_expansion_identity_degree_four(A):
    mons = [m for d in range(5) for m in fl.monomials(2, d)]
    for a in mons:
        for b in mons:
            if sum(a) + sum(b) <= 4:
                assert fl.hbar_expansion_check(A.monomial(a), A.monomial(b))["ok"]


def test_poisson_bracket_of_generators(A):
    pb = fl.poisson_bracket(A.gen("q"), A.gen("p"))
    assert pb == A.one()


def test_symplectic_space_validation():
    with pytest.raises(fl.DomainError):
        fl.SymplecticVS(("a", "b"), np.array([[Fraction(0), Fraction(1)], [Fraction(1), Fraction(0)]], dtype=object))
    with pytest.raises(fl.DomainError):
        fl.SymplecticVS(("a", "b"), np.array([[Fraction(0)] * 2] * 2, dtype=object))


def test_lagrangian_subspaces(V):
    assert fl.is_lagrangian_subspace(V, np.array([[Fraction(1)], [Fraction(0)]], dtype=object))
    V2 = fl.SymplecticVS.darboux(2)
    assert not fl.is_lagrangian_subspace(V2, np.array([[Fraction(1), 0], [0, 0], [0, 1], [0, 0]], dtype=object))
    assert fl.fock_graded_dims(fl.LagrangianSubspace.span(V2, ["q1", "q2"]), cap=3) == [1, 2, 3, 4]


def test_fock_actions(V, A):
    Lm = fl.LagrangianSubspace.span(V, ["q"], "L-")
    vac = fl.FockVector.vacuum(Lm)
    assert str(fl.fock_act(vac, A.gen("p"), "right")) == "0"
    assert str(fl.fock_act(vac, A.gen("q"), "right")) == "q"
    with pytest.raises(fl.DomainError):
        fl.fock_act(vac, A.gen("q"), "middle")


def test_structure_map_example(V):
    P = fl.build_defect_prefact(V, "q", "p")
    A = P.algebra
    out = P.structure_map((-3, 3), [(-2, -1), (1, 2)], [A.gen("q"), A.gen("p")])
    assert str(out) == "-(q)⊗(p)"
    assert P.space((-1, 1)) == "Fock(L-*)⊗Fock(L+*)"
    assert P.space((1, 2)) == "Weyl(V*)"
    with pytest.raises(fl.DomainError):
        P.structure_map((-1, 1), [(-2, 0)], [A.gen("q")])


def test_axioms_pass_and_flip_fails(V):
    ok = fl.check_prefact_axioms(fl.build_defect_prefact(V, "q", "p", cap=6), depth=3)
    assert ok.passed and not ok.truncated and ok.configurations > 1000
    free = fl.check_prefact_axioms(fl.weyl_only_prefact(V), depth=2)
    assert free.passed
    bad = fl.check_prefact_axioms(fl.build_defect_prefact(V, "q", "p", flip=True), depth=2)
    assert not bad.passed and bad.first_failure is not None


def test_axioms_in_four_dimensions():
    V2 = fl.SymplecticVS.darboux(2)
    P = fl.build_defect_prefact(V2, ["q1", "q2"], ["p1", "p2"], cap=4)
    assert fl.check_prefact_axioms(P, depth=2).passed


def test_configuration_depth_limits(V):
    P = fl.weyl_only_prefact(V)
    with pytest.raises(fl.DomainError):
        fl.configurations(P, 4)
    trees = fl.configurations(P, 2, limit=10)
    assert len(trees) == 10 and {t.depth for t in trees} == {1, 2}


def test_locality_of_collapsed_line(V):
    P = fl.build_defect_prefact(V, "q", "p")
    assert fl.check_locality(P, 0.25, locality_grid(0.25, 20))["passed"]
    assert not fl.check_locality(P, 0.25, [OpenSet1D.of((-0.3, 0.3))])["passed"]


def test_coisotropy_reports(V):
    assert fl.coisotropy_report(V, ["p"])["bracket_closed"]
    V2 = fl.SymplecticVS.darboux(2)
    assert not fl.coisotropy_report(V2, ["q1", "p1"])["bracket_closed"]
    _, rep = fl.classical_defect_prefact(V, "q", "p")
    assert rep["L-"]["restriction_is_homomorphism"] and rep["L+"]["restriction_is_homomorphism"]


def test_domain_wall():
    out = fl.domain_wall_assignment(OpenSet1D.of((-1, 1)), 1)
    assert out["V_dim"] == 4 and out["labels"] == ["A0", "A1", "B0", "B1"]
    assert fl.domain_wall_assignment(OpenSet1D.of((-1, 1)), 0)["trivial"]


def test_multiplication_table_rows(A):
    rows = fl.multiplication_table(fl.WeylAlgebra(A.V, cap=4), 1)
    assert rows[0] == ["a", "b", "a*b"]
    assert ["q", "p", "q*p + hbar"] in rows
    assert len(rows) == 1 + 3 * 3


def test_hbar_value_scales_commutator(V):
    A2 = fl.WeylAlgebra(V, hbar=Fraction(1, 3))
    c = fl.commutator(A2.gen("q"), A2.gen("p"))
    assert c.specialize() == {(0, 0): Fraction(1, 3)}
    assert math.isclose(float(c.specialize()[(0, 0)]), 1 / 3)
