"""Weyl algebras, Fock modules and the point-defect prefactorization algebra on R.

Conventions
-----------
Generators ``x_1..x_2n`` are coordinate functions on ``V`` in a fixed order
(positions first).  The bracket matrix ``omega`` gives ``[x_i, x_j] = hbar *
omega[i, j]``.  Elements are stored as normal-ordered symbols, where a
commutative monomial ``x^a`` stands for the operator product with
higher-index generators on the left.  The product is

    a * b = m o exp(hbar * sum_{i<j} omega_ij d_i (x) d_j)(a (x) b),

which reproduces ``q * p - p * q = hbar`` and is associative exactly.

``hbar`` is kept as a formal variable: coefficient tables are keyed by
``(hbar_power, multi_index)``.  ``WeylAlgebra.hbar`` only matters when an
element is specialised to a number.

Module geometry: the defect sits at 0.  Fock(L_-*) lives on the left half-line,
whose boundary is on its right, so bulk elements act on it from the left.
Fock(L_+*) lives on the right half-line, whose boundary is on its left, so bulk
elements act on it from the right.  Structure maps read inputs left to right:
``(a_1 ... a_k) . m . (b_1 ... b_l)``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import linalg as la
from .collapse import OpenSet1D, make_profile, preimage_open

DEFAULT_CAP = 6

Key = tuple  # (hbar_power, multi_index) or (hbar_power, mi_minus, mi_plus)


class DomainError(ValueError):
    pass


def _frac_matrix(m) -> np.ndarray:
    return la.exact(m)


# --------------------------------------------------------------------------
# symplectic data
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SymplecticVS:
    labels: tuple[str, ...]
    omega: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        w = _frac_matrix(self.omega) if len(self.labels) else la.zeros((0, 0), True)
        object.__setattr__(self, "omega", w)
        n = len(self.labels)
        if len(set(self.labels)) != n:
            raise DomainError("generator labels must be unique")
        if w.shape != (n, n):
            raise DomainError(f"omega has shape {w.shape}, expected {(n, n)}")
        if not la.is_zero(w + w.T):
            raise DomainError("omega is not skew")
        if n % 2 or la.rank(w) != n:
            raise DomainError("omega is degenerate")

    @property
    def dim(self) -> int:
        return len(self.labels)

    @property
    def half(self) -> int:
        return self.dim // 2

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"unknown generator {label!r}") from None

    @classmethod
    def darboux(cls, n: int, positions=None, momenta=None) -> "SymplecticVS":
        """Standard form with [q_i, p_i] = hbar; n = 1 uses labels q, p."""
        if positions is None:
            positions = ["q"] if n == 1 else [f"q{i + 1}" for i in range(n)]
        if momenta is None:
            momenta = ["p"] if n == 1 else [f"p{i + 1}" for i in range(n)]
        w = la.zeros((2 * n, 2 * n), True)
        for i in range(n):
            w[i, n + i] = Fraction(1)
            w[n + i, i] = Fraction(-1)
        return cls(tuple(positions) + tuple(momenta), w)

    def __eq__(self, other):
        return (
            isinstance(other, SymplecticVS)
            and self.labels == other.labels
            and bool(np.all(self.omega == other.omega))
        )

    def __hash__(self):
        return hash(self.labels)


@dataclass(frozen=True, eq=False)
class LagrangianSubspace:
    """L inside V, given by column vectors in the basis dual to the generators.

    ``annihilator`` rows span Ann(L), the linear functions vanishing on L.
    ``beta`` rows complete them to a basis with ``[beta_a, alpha_b] = hbar
    delta_ab`` and ``[beta_a, beta_b] = 0``; Fock(L*) is the polynomial ring in
    the betas.
    """

    parent: SymplecticVS
    basis: np.ndarray
    name: str = "L"
    alpha: np.ndarray = field(init=False, repr=False)
    beta: np.ndarray = field(init=False, repr=False)
    beta_labels: tuple[str, ...] = field(init=False)
    to_beta_alpha: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        V = self.parent
        B = _frac_matrix(self.basis).reshape(V.dim, -1) if V.dim else la.zeros((0, 0), True)
        object.__setattr__(self, "basis", B)
        n = V.half
        if B.shape[1] != n or la.rank(B) != n:
            raise DomainError(f"{self.name}: need {n} independent vectors, got rank {la.rank(B) if B.size else 0}")
        ann = la.nullspace(B.T).T if V.dim else la.zeros((0, 0), True)
        w = V.omega
        if V.dim and not la.is_zero(la.matmul(la.matmul(ann, w), ann.T)):
            raise DomainError(f"{self.name} is not isotropic")
        # complement from coordinate functions, preferring earliest indices
        basis_rows = list(ann)
        comp = []
        for i in range(V.dim):
            e = la.zeros(V.dim, True)
            e[i] = Fraction(1)
            trial = np.array(basis_rows + comp + [e], dtype=object)
            if la.rank(trial) > len(basis_rows) + len(comp):
                comp.append(e)
            if len(comp) == n:
                break
        gamma = np.array(comp, dtype=object).reshape(n, V.dim)
        if n:
            m = la.matmul(la.matmul(gamma, w), ann.T)
            alpha = la.matmul(_inverse(m), ann)
            g = la.matmul(la.matmul(gamma, w), gamma.T)
            beta = gamma + la.matmul(g, alpha) * Fraction(1, 2)
        else:
            alpha = la.zeros((0, V.dim), True)
            beta = la.zeros((0, V.dim), True)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)
        labels = []
        for a in range(n):
            row = beta[a]
            hits = [i for i in range(V.dim) if row[i] != 0]
            if len(hits) == 1 and row[hits[0]] == 1:
                labels.append(V.labels[hits[0]])
            else:
                labels.append(f"{self.name}.b{a + 1}")
        object.__setattr__(self, "beta_labels", tuple(labels))
        # x_i = sum_a T[i, a] beta_a + sum_b T[i, n + b] alpha_b
        full = np.concatenate([beta, alpha], axis=0) if V.dim else la.zeros((0, 0), True)
        object.__setattr__(self, "to_beta_alpha", _inverse(full).T if V.dim else full)

    @property
    def dim(self) -> int:
        return self.parent.half

    @classmethod
    def span(cls, V: SymplecticVS, labels: Sequence[str], name: str = "L") -> "LagrangianSubspace":
        cols = la.zeros((V.dim, len(labels)), True)
        for k, lab in enumerate(labels):
            cols[V.index(lab), k] = Fraction(1)
        return cls(V, cols, name)

    def restriction(self) -> np.ndarray:
        """Row i gives x_i restricted to L in the beta coordinates."""
        return self.to_beta_alpha[:, : self.dim]


def _inverse(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    aug = np.concatenate([m, la.identity(n, True)], axis=1)
    r, piv = la.rref(aug)
    if piv[:n] != list(range(n)):
        raise DomainError("matrix is singular")
    return r[:, n:]


def is_lagrangian_subspace(V: SymplecticVS, vectors) -> bool:
    try:
        LagrangianSubspace(V, vectors)
    except DomainError:
        return False
    return True


# --------------------------------------------------------------------------
# polynomial helpers
# --------------------------------------------------------------------------


def _add(out: dict, key, c):
    if c == 0:
        return
    v = out.get(key, 0) + c
    if v == 0:
        out.pop(key, None)
    else:
        out[key] = v


def _unit(n: int, i: int) -> tuple[int, ...]:
    return tuple(1 if j == i else 0 for j in range(n))


def _plus(a, b):
    return tuple(x + y for x, y in zip(a, b))


def monomials(n: int, degree: int) -> list[tuple[int, ...]]:
    """All multi-indices in n variables of exactly this total degree."""
    if n == 0:
        return [()] if degree == 0 else []
    out = []
    for c in itertools.combinations_with_replacement(range(n), degree):
        mi = [0] * n
        for i in c:
            mi[i] += 1
        out.append(tuple(mi))
    return sorted(out, reverse=True)


def _fmt_monomial(mi, labels) -> str:
    parts = []
    for e, lab in zip(mi, labels):
        if e == 1:
            parts.append(lab)
        elif e > 1:
            parts.append(f"{lab}^{e}")
    return "*".join(parts)


def _fmt_poly(coeffs: Mapping, labels_for_key) -> str:
    if not coeffs:
        return "0"
    terms = []
    for key in sorted(coeffs, key=lambda k: (k[0], tuple(-x for x in _flat(k[1:])))):
        c = coeffs[key]
        mono = labels_for_key(key)
        hb = "" if key[0] == 0 else ("hbar" if key[0] == 1 else f"hbar^{key[0]}")
        body = "*".join(x for x in (hb, mono) if x)
        if not body:
            terms.append(str(c))
        elif c == 1:
            terms.append(body)
        elif c == -1:
            terms.append(f"-{body}")
        else:
            terms.append(f"{c}*{body}")
    return " + ".join(terms).replace("+ -", "- ")


def _flat(parts):
    return tuple(x for p in parts for x in p)


# --------------------------------------------------------------------------
# Weyl algebra
# --------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _star_terms(a: tuple, b: tuple, upper: tuple) -> tuple:
    """Normal-ordered product of monomials: tuple of (n, multi_index, coeff).

    ``upper`` lists (i, j, omega_ij) with i < j and omega_ij != 0.
    """
    current = {(a, b): Fraction(1)}
    out = {}
    n = 0
    while current:
        fact = Fraction(1, math.factorial(n))
        for (x, y), c in current.items():
            _add(out, (n, _plus(x, y)), c * fact)
        nxt: dict = {}
        for (x, y), c in current.items():
            for i, j, w in upper:
                if x[i] and y[j]:
                    x2 = x[:i] + (x[i] - 1,) + x[i + 1 :]
                    y2 = y[:j] + (y[j] - 1,) + y[j + 1 :]
                    _add(nxt, (x2, y2), c * w * x[i] * y[j])
        current = nxt
        n += 1
    return tuple((k[0], k[1], v) for k, v in sorted(out.items()))


@dataclass(frozen=True, eq=False)
class WeylAlgebra:
    """Weyl(V*) with formal hbar; ``classical=True`` keeps only hbar^0 (Sym(V*))."""

    V: SymplecticVS
    hbar: Fraction = Fraction(1)
    cap: int = DEFAULT_CAP
    classical: bool = False

    def __post_init__(self):
        object.__setattr__(self, "hbar", la.exact([self.hbar])[0])
        if self.cap < 1:
            raise DomainError("degree cap must be >= 1")

    @property
    def n(self) -> int:
        return self.V.dim

    @property
    def _upper(self) -> tuple:
        w = self.V.omega
        return tuple(
            (i, j, w[i, j]) for i in range(self.n) for j in range(i + 1, self.n) if w[i, j] != 0
        )

    def element(self, coeffs: Mapping, truncated: bool = False) -> "WeylElement":
        clean = {}
        trunc = truncated
        for (h, mi), c in coeffs.items():
            if self.classical and h > 0:
                continue
            if sum(mi) > self.cap:
                trunc = True
                continue
            _add(clean, (h, tuple(mi)), Fraction(c))
        return WeylElement(self, tuple(sorted(clean.items())), trunc)

    def one(self) -> "WeylElement":
        return self.element({(0, (0,) * self.n): 1})

    def zero(self) -> "WeylElement":
        return self.element({})

    def gen(self, label: str) -> "WeylElement":
        return self.element({(0, _unit(self.n, self.V.index(label))): 1})

    def monomial(self, mi: Sequence[int], coeff=1, hbar_power: int = 0) -> "WeylElement":
        return self.element({(hbar_power, tuple(mi)): coeff})

    def hbar_element(self) -> "WeylElement":
        return self.element({(1, (0,) * self.n): 1})

    def parse(self, text: str) -> "WeylElement":
        """Product of generator labels separated by '*' (e.g. 'q*p'); '1' is the unit."""
        out = self.one()
        text = text.strip()
        if text == "1":
            return out
        for tok in text.split("*"):
            tok = tok.strip()
            base, _, exp = tok.partition("^")
            for _ in range(int(exp) if exp else 1):
                out = weyl_mul(out, self.gen(base))
        return out

    def basis_monomials(self, max_degree: int) -> list["WeylElement"]:
        return [self.monomial(mi) for d in range(max_degree + 1) for mi in monomials(self.n, d)]

    def __eq__(self, other):
        return (
            isinstance(other, WeylAlgebra)
            and self.V == other.V
            and self.hbar == other.hbar
            and self.cap == other.cap
            and self.classical == other.classical
        )

    def __hash__(self):
        return hash((self.V, self.hbar, self.cap, self.classical))


@dataclass(frozen=True, eq=False)
class WeylElement:
    algebra: WeylAlgebra
    terms: tuple  # sorted ((hbar_power, multi_index), Fraction)
    truncated: bool = False

    @property
    def coeffs(self) -> dict:
        return dict(self.terms)

    def __eq__(self, other):
        return isinstance(other, WeylElement) and self.algebra == other.algebra and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __add__(self, other):
        _same(self, other)
        out = self.coeffs
        for k, c in other.terms:
            _add(out, k, c)
        return self.algebra.element(out, self.truncated or other.truncated)

    def __neg__(self):
        return self.scale(-1)

    def __sub__(self, other):
        return self + (-other)

    def __mul__(self, other):
        return weyl_mul(self, other)

    def scale(self, c) -> "WeylElement":
        c = Fraction(c)
        return self.algebra.element({k: v * c for k, v in self.terms}, self.truncated)

    @property
    def degree(self) -> int:
        return max((sum(mi) for (_, mi), _ in self.terms), default=-1)

    def hbar_part(self, power: int) -> dict:
        return {mi: c for (h, mi), c in self.terms if h == power}

    def specialize(self, hbar=None) -> dict:
        """Collapse the formal hbar to a rational value; returns multi_index -> coeff."""
        value = self.algebra.hbar if hbar is None else Fraction(hbar)
        out: dict = {}
        for (h, mi), c in self.terms:
            _add(out, mi, c * value**h)
        return out

    def __str__(self):
        labels = self.algebra.V.labels
        return _fmt_poly(self.coeffs, lambda k: _fmt_monomial(k[1], labels))

    def to_dict(self) -> dict:
        return {
            "terms": [
                {"hbar": h, "monomial": list(mi), "coeff": str(c)} for (h, mi), c in self.terms
            ],
            "truncated": self.truncated,
            "text": str(self),
        }


def _same(a: WeylElement, b: WeylElement):
    if a.algebra != b.algebra:
        raise DomainError("elements belong to different Weyl algebras (parent or hbar differ)")


def weyl_mul(a: WeylElement, b: WeylElement) -> WeylElement:
    _same(a, b)
    alg = a.algebra
    upper = () if alg.classical else alg._upper
    out: dict = {}
    for (ha, ma), ca in a.terms:
        for (hb, mb), cb in b.terms:
            for n, mi, c in _star_terms(ma, mb, upper):
                _add(out, (ha + hb + n, mi), ca * cb * c)
    return alg.element(out, a.truncated or b.truncated)


def weyl_product(elements: Iterable[WeylElement], algebra: WeylAlgebra) -> WeylElement:
    out = algebra.one()
    for e in elements:
        out = weyl_mul(out, e)
    return out


def commutator(a: WeylElement, b: WeylElement) -> WeylElement:
    return weyl_mul(a, b) - weyl_mul(b, a)


def poisson_bracket(a: WeylElement, b: WeylElement) -> WeylElement:
    """{a, b} = sum omega_ij d_i a d_j b on the hbar^0 parts."""
    _same(a, b)
    alg = a.algebra
    w = alg.V.omega
    out: dict = {}
    for ma, ca in a.hbar_part(0).items():
        for mb, cb in b.hbar_part(0).items():
            for i in range(alg.n):
                if not ma[i]:
                    continue
                for j in range(alg.n):
                    if not mb[j] or w[i, j] == 0:
                        continue
                    mi = list(_plus(ma, mb))
                    mi[i] -= 1
                    mi[j] -= 1
                    _add(out, (0, tuple(mi)), ca * cb * w[i, j] * ma[i] * mb[j])
    return alg.element(out)


def hbar_expansion_check(a: WeylElement, b: WeylElement) -> dict:
    """ab - ba = hbar {a, b} + O(hbar^2), checked coefficientwise in hbar."""
    comm = commutator(a, b)
    classical = poisson_bracket(a, b)
    order0 = comm.hbar_part(0)
    order1 = comm.hbar_part(1)
    return {
        "a": str(a),
        "b": str(b),
        "order0_vanishes": not order0,
        "order1_matches": order1 == classical.hbar_part(0),
        "ok": not order0 and order1 == classical.hbar_part(0),
    }


# --------------------------------------------------------------------------
# Fock modules
# --------------------------------------------------------------------------


LEFT, RIGHT = "left", "right"


@dataclass(frozen=True, eq=False)
class FockVector:
    """Polynomial in the beta coordinates of L, with formal hbar."""

    L: LagrangianSubspace
    terms: tuple  # ((hbar_power, multi_index), Fraction)
    cap: int = DEFAULT_CAP
    truncated: bool = False

    @classmethod
    def build(cls, L, coeffs: Mapping, cap=DEFAULT_CAP, truncated=False, classical=False):
        clean: dict = {}
        for (h, mi), c in coeffs.items():
            if classical and h > 0:
                continue
            if sum(mi) > cap:
                truncated = True
                continue
            _add(clean, (h, tuple(mi)), Fraction(c))
        return cls(L, tuple(sorted(clean.items())), cap, truncated)

    @classmethod
    def vacuum(cls, L, cap=DEFAULT_CAP):
        return cls.build(L, {(0, (0,) * L.dim): 1}, cap)

    @property
    def coeffs(self) -> dict:
        return dict(self.terms)

    def __eq__(self, other):
        return isinstance(other, FockVector) and self.L is other.L and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __str__(self):
        return _fmt_poly(self.coeffs, lambda k: _fmt_monomial(k[1], self.L.beta_labels))


def fock_graded_dims(L: LagrangianSubspace, cap: int = DEFAULT_CAP) -> list[int]:
    return [len(monomials(L.dim, d)) for d in range(cap + 1)]


def _generator_op(L: LagrangianSubspace, i: int, side: str, classical: bool):
    """x_i as (multiply-coefficients, derivative-coefficients) on C[beta]."""
    T = L.to_beta_alpha
    n = L.dim
    mult = [T[i, a] for a in range(n)]
    sign = Fraction(1) if side == RIGHT else Fraction(-1)
    deriv = [] if classical else [sign * T[i, n + b] for b in range(n)]
    return mult, deriv


def _apply_generator(coeffs: dict, L, i: int, side: str, classical: bool) -> dict:
    mult, deriv = _generator_op(L, i, side, classical)
    out: dict = {}
    for (h, mi), c in coeffs.items():
        for a, m in enumerate(mult):
            if m != 0:
                _add(out, (h, _plus(mi, _unit(L.dim, a))), c * m)
        for b, d in enumerate(deriv):
            if d != 0 and mi[b]:
                mi2 = mi[:b] + (mi[b] - 1,) + mi[b + 1 :]
                _add(out, (h + 1, mi2), c * d * mi[b])
    return out


def _letters(mi: tuple, side: str, flip: bool) -> list[int]:
    """Generator indices of a normal-ordered symbol, in the order they act."""
    word = [i for i in reversed(range(len(mi))) for _ in range(mi[i])]  # written left to right
    order = list(reversed(word)) if side == LEFT else word
    return list(reversed(order)) if flip else order


def _act(coeffs: dict, L, a: WeylElement, side: str, flip: bool = False) -> dict:
    classical = a.algebra.classical
    out: dict = {}
    for (ha, ma), ca in a.terms:
        cur = coeffs
        for i in _letters(ma, side, flip):
            cur = _apply_generator(cur, L, i, side, classical)
        for (h, mi), c in cur.items():
            _add(out, (h + ha, mi), c * ca)
    return out


def fock_act(v: FockVector, a: WeylElement, side: str, flip: bool = False) -> FockVector:
    """Action of Weyl(V*) on Fock(L*) through the quotient by Ann(L).

    On the right, alpha_b acts as +hbar d/d beta_b; on the left as -hbar d/d beta_b.
    Betas act by multiplication on either side.
    """
    if side not in (LEFT, RIGHT):
        raise DomainError(f"side must be 'left' or 'right', got {side!r}")
    if a.algebra.V is not v.L.parent and a.algebra.V != v.L.parent:
        raise DomainError("Lagrangian does not live in the algebra's vector space")
    out = _act(v.coeffs, v.L, a, side, flip)
    return FockVector.build(
        v.L, out, v.cap, v.truncated or a.truncated, classical=a.algebra.classical
    )


# --------------------------------------------------------------------------
# the defect bimodule and the prefactorization line
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class DefectVector:
    """Element of Fock(L_-*) (x) Fock(L_+*); keys (hbar_power, mi_minus, mi_plus)."""

    Lm: LagrangianSubspace
    Lp: LagrangianSubspace
    terms: tuple
    truncated: bool = False

    @property
    def coeffs(self) -> dict:
        return dict(self.terms)

    def __eq__(self, other):
        return isinstance(other, DefectVector) and self.terms == other.terms

    def __hash__(self):
        return hash(self.terms)

    def __str__(self):
        lm, lp = self.Lm.beta_labels, self.Lp.beta_labels

        def mono(k):
            left = _fmt_monomial(k[1], lm) or "1"
            right = _fmt_monomial(k[2], lp) or "1"
            return f"({left})⊗({right})"

        return _fmt_poly(self.coeffs, mono)


@dataclass(frozen=True, eq=False)
class PrefactLine:
    """Open-interval assignment on R with an optional point defect at 0.

    ``Lm``/``Lp`` are None for the defect-free assignment.  ``flip`` reverses
    the composition order of module actions (a deliberately broken model).
    """

    algebra: WeylAlgebra
    Lm: LagrangianSubspace | None = None
    Lp: LagrangianSubspace | None = None
    t: float | None = None
    flip: bool = False

    @property
    def has_defect(self) -> bool:
        return self.Lm is not None

    @property
    def cap(self) -> int:
        return self.algebra.cap

    def space(self, interval: tuple[float, float]) -> str:
        a, b = interval
        if not a < b:
            raise DomainError(f"empty interval {interval}")
        if self.has_defect and a < 0 < b:
            kind = "O" if self.algebra.classical else "Fock"
            return f"{kind}({self.Lm.name}*)⊗{kind}({self.Lp.name}*)"
        return "Sym(V*)" if self.algebra.classical else "Weyl(V*)"

    def space_of_open(self, U: OpenSet1D) -> tuple[str, ...]:
        return tuple(self.space(iv) for iv in U.intervals)

    def vacuum(self) -> DefectVector:
        return self.defect_vector({(0, (0,) * self.Lm.dim, (0,) * self.Lp.dim): 1})

    def defect_vector(self, coeffs: Mapping, truncated=False) -> DefectVector:
        clean: dict = {}
        for (h, mm, mp), c in coeffs.items():
            if self.algebra.classical and h > 0:
                continue
            if sum(mm) > self.cap or sum(mp) > self.cap:
                truncated = True
                continue
            _add(clean, (h, tuple(mm), tuple(mp)), Fraction(c))
        return DefectVector(self.Lm, self.Lp, tuple(sorted(clean.items())), truncated)

    def act_left(self, a: WeylElement, m: DefectVector) -> DefectVector:
        out: dict = {}
        for (h, mm, mp), c in m.terms:
            for (h2, mm2), c2 in _act({(h, mm): c}, self.Lm, a, LEFT, self.flip).items():
                _add(out, (h2, mm2, mp), c2)
        return self.defect_vector(out, m.truncated or a.truncated)

    def act_right(self, m: DefectVector, b: WeylElement) -> DefectVector:
        out: dict = {}
        for (h, mm, mp), c in m.terms:
            for (h2, mp2), c2 in _act({(h, mp): c}, self.Lp, b, RIGHT, self.flip).items():
                _add(out, (h2, mm, mp2), c2)
        return self.defect_vector(out, m.truncated or b.truncated)

    def structure_map(self, outer: tuple, intervals: Sequence[tuple], inputs: Sequence):
        """Multilinear map A(I_1) (x) ... (x) A(I_r) -> A(outer), inputs in spatial order."""
        ivs = list(intervals)
        if len(ivs) != len(inputs):
            raise DomainError("one input per interval is required")
        order = sorted(range(len(ivs)), key=lambda k: ivs[k][0])
        ivs = [ivs[k] for k in order]
        inputs = [inputs[k] for k in order]
        lo, hi = outer
        for k, (a, b) in enumerate(ivs):
            if not (lo <= a < b <= hi):
                raise DomainError(f"interval {(a, b)} not inside {outer}")
            if k and ivs[k - 1][1] > a:
                raise DomainError("intervals overlap")
        outer_kind = self.space(outer)
        if outer_kind.startswith(("Weyl", "Sym")):
            return weyl_product(inputs, self.algebra)
        left, right, m = [], [], None
        for iv, x in zip(ivs, inputs):
            if iv[0] < 0 < iv[1]:
                m = x
            elif iv[1] <= 0:
                left.append(x)
            else:
                right.append(x)
        if m is None:
            m = self.vacuum()
        m = self.act_left(weyl_product(left, self.algebra), m) if left else m
        m = self.act_right(m, weyl_product(right, self.algebra)) if right else m
        return m


def build_defect_prefact(V: SymplecticVS, Lm, Lp, t: float = 0.25, hbar=1,
                         cap: int = DEFAULT_CAP, flip: bool = False) -> PrefactLine:
    make_profile(t)  # domain check on t
    Lm = _as_lagrangian(V, Lm, "L-")
    Lp = _as_lagrangian(V, Lp, "L+")
    return PrefactLine(WeylAlgebra(V, hbar, cap), Lm, Lp, t, flip)


def weyl_only_prefact(V: SymplecticVS, hbar=1, cap: int = DEFAULT_CAP) -> PrefactLine:
    return PrefactLine(WeylAlgebra(V, hbar, cap))


def _as_lagrangian(V, L, name) -> LagrangianSubspace:
    if isinstance(L, LagrangianSubspace):
        return L
    if isinstance(L, str):
        L = [s for s in L.replace(",", " ").split() if s]
    if isinstance(L, (list, tuple)) and all(isinstance(s, str) for s in L):
        return LagrangianSubspace.span(V, L, name)
    return LagrangianSubspace(V, L, name)


# --------------------------------------------------------------------------
# axiom enumeration
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfigTree:
    """An interval with an optional nested configuration of disjoint children."""

    interval: tuple
    children: tuple = ()

    @property
    def leaves(self) -> list[tuple]:
        if not self.children:
            return [self.interval]
        return [leaf for c in self.children for leaf in c.leaves]

    @property
    def depth(self) -> int:
        return 0 if not self.children else 1 + max(c.depth for c in self.children)

    def to_list(self):
        if not self.children:
            return [self.interval[0], self.interval[1]]
        return {"interval": list(self.interval), "children": [c.to_list() for c in self.children]}


def _partitions(lo: Fraction, hi: Fraction) -> list[tuple]:
    """Child layouts inside (lo, hi): one left piece, two pieces, three pieces."""
    q = (hi - lo) / 4
    mid = (lo + hi) / 2
    w = (hi - lo) / 6
    return [
        ((lo, lo + q),),
        ((lo, lo + q), (lo + q, hi)),
        ((lo, mid - w), (mid - w, mid + w), (mid + w, hi)),
    ]


def _trees(interval: tuple, depth: int, max_leaves: int) -> list[ConfigTree]:
    """Every nested configuration from the fixed layouts with at most ``max_leaves`` leaves."""
    out = [ConfigTree(interval)]
    if depth == 0:
        return out
    for parts in _partitions(*interval):
        if len(parts) > max_leaves:
            continue
        subs = [_trees(p, depth - 1, max_leaves - len(parts) + 1) for p in parts]
        for combo in itertools.product(*subs):
            if sum(len(c.leaves) for c in combo) <= max_leaves:
                out.append(ConfigTree(interval, tuple(combo)))
    return out


def configurations(P: PrefactLine, depth: int, limit: int | None = None,
                   max_leaves: int = 5) -> list[ConfigTree]:
    """All configurations up to ``max_leaves`` leaves (or ``limit`` of them), smallest first.

    A limit is filled round-robin over depths so every depth stays covered.
    """
    if not 1 <= depth <= 3:
        raise DomainError("depth must be between 1 and 3")
    F = Fraction
    if P.has_defect:
        roots = [(F(-3), F(3)), (F(-2), F(1))]
    else:
        roots = [(F(1, 2), F(3)), (F(-3), F(-1, 2))]
    pool = []
    seen = set()
    for r in roots:
        for tree in _trees(r, depth, max_leaves):
            key = repr(tree)
            if tree.children and len(tree.leaves) <= max_leaves and key not in seen:
                seen.add(key)
                pool.append(tree)
    by_depth: dict[int, list] = {}
    for tree in pool:
        by_depth.setdefault(tree.depth, []).append(tree)
    if limit is None:
        limit = len(pool)
    chosen: list = []
    while len(chosen) < limit and any(by_depth.values()):
        for d in sorted(by_depth):
            if by_depth[d] and len(chosen) < limit:
                chosen.append(by_depth[d].pop(0))
    return sorted(chosen, key=lambda t: (len(t.leaves), t.depth))


def _test_inputs(P: PrefactLine, leaves: list[tuple], seed: int) -> list:
    A = P.algebra
    gens = [A.gen(lab) for lab in A.V.labels]
    module_inputs = []
    if P.has_defect:
        nm, np_ = P.Lm.dim, P.Lp.dim
        module_inputs = [P.vacuum()]
        for i in range(nm):
            for j in range(np_):
                module_inputs.append(
                    P.defect_vector({(0, _unit(nm, i), _unit(np_, j)): 1, (1, (0,) * nm, (0,) * np_): 2})
                )
    out = []
    for k, (a, b) in enumerate(leaves):
        if P.has_defect and a < 0 < b:
            out.append(module_inputs[(seed + k) % len(module_inputs)])
        else:
            g = gens[(seed + 3 * k) % len(gens)]
            if (seed + k) % 4 == 3:
                g = g + A.one().scale(Fraction(1, 2))
            out.append(g)
    return out


def _evaluate_nested(P: PrefactLine, tree: ConfigTree, inputs: list, pos: list) -> object:
    if not tree.children:
        x = inputs[pos[0]]
        pos[0] += 1
        return x
    values = [_evaluate_nested(P, c, inputs, pos) for c in tree.children]
    return P.structure_map(tree.interval, [c.interval for c in tree.children], values)


def _evaluate_flat(P: PrefactLine, tree: ConfigTree, inputs: list):
    return P.structure_map(tree.interval, tree.leaves, inputs)


@dataclass
class AxiomReport:
    depth: int
    cap: int
    configurations: int
    passed: bool
    truncated: bool
    first_failure: dict | None = None
    bimodule_checks: int = 0

    def to_dict(self) -> dict:
        return {
            "depth": self.depth,
            "cap": self.cap,
            "configurations": self.configurations,
            "bimodule_checks": self.bimodule_checks,
            "truncated": self.truncated,
            "passed": self.passed,
            "first_failure": self.first_failure,
        }


def check_prefact_axioms(P: PrefactLine, depth: int = 3) -> AxiomReport:
    """Nested composites against the flattened structure map, plus bimodule triples."""
    trees = configurations(P, depth)
    truncated = False
    failure = None
    for seed, tree in enumerate(trees):
        inputs = _test_inputs(P, tree.leaves, seed)
        nested = _evaluate_nested(P, tree, inputs, [0])
        flat = _evaluate_flat(P, tree, inputs)
        truncated |= nested.truncated or flat.truncated
        if nested != flat and failure is None:
            failure = {
                "configuration": tree.to_list(),
                "nested": str(nested),
                "flat": str(flat),
            }
    checks = 0
    if P.has_defect:
        res = _bimodule_checks(P)
        checks = res["count"]
        if res["failure"] and failure is None:
            failure = res["failure"]
    return AxiomReport(depth, P.cap, len(trees), failure is None and not truncated, truncated, failure, checks)


def _bimodule_checks(P: PrefactLine, max_degree: int = 2) -> dict:
    """(a.m).b = a.(m.b) and (aa').m = a.(a'.m), m.(bb') = (m.b).b' on monomials."""
    A = P.algebra
    elems = [e for e in A.basis_monomials(max_degree) if e.degree > 0]
    m0 = P.vacuum()
    mods = [m0]
    for i in range(P.Lm.dim):
        mods.append(P.defect_vector({(0, _unit(P.Lm.dim, i), (0,) * P.Lp.dim): 1}))
    count = 0
    for a in elems:
        for b in elems:
            for m in mods:
                count += 3
                lhs = P.act_right(P.act_left(a, m), b)
                rhs = P.act_left(a, P.act_right(m, b))
                if lhs != rhs:
                    return {"count": count, "failure": {"triple": [str(a), "m", str(b)], "lhs": str(lhs), "rhs": str(rhs)}}
                if P.act_left(weyl_mul(a, b), m) != P.act_left(a, P.act_left(b, m)):
                    return {"count": count, "failure": {"left_module": [str(a), str(b)], "m": str(m)}}
                if P.act_right(m, weyl_mul(a, b)) != P.act_right(P.act_right(m, a), b):
                    return {"count": count, "failure": {"right_module": [str(a), str(b)], "m": str(m)}}
    return {"count": count, "failure": None}


def weyl_associativity(A: WeylAlgebra, max_degree: int | None = None) -> dict:
    """(ab)c = a(bc) for all monomial triples whose total degree fits under the cap."""
    cap = A.cap if max_degree is None else max_degree
    mons = [m for d in range(cap + 1) for m in monomials(A.n, d)]
    checked = 0
    for a in mons:
        for b in mons:
            if sum(a) + sum(b) > cap:
                continue
            ab = weyl_mul(A.monomial(a), A.monomial(b))
            for c in mons:
                if sum(a) + sum(b) + sum(c) > cap:
                    continue
                checked += 1
                C = A.monomial(c)
                if weyl_mul(ab, C) != weyl_mul(A.monomial(a), weyl_mul(A.monomial(b), C)):
                    return {"checked": checked, "ok": False, "triple": [a, b, c]}
    return {"checked": checked, "ok": True}


# --------------------------------------------------------------------------
# locality of the collapsed defect
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PushforwardLine:
    """(pi_t)_* P: value on U is P(pi_t^{-1} U)."""

    base: PrefactLine
    t: float

    def preimage(self, iv: tuple) -> tuple:
        pre = preimage_open(OpenSet1D((tuple(float(x) for x in iv),)), self.t)
        if len(pre.intervals) != 1:
            raise DomainError("preimage of an interval is not an interval")
        return pre.intervals[0]

    def space(self, iv: tuple) -> str:
        return self.base.space(self.preimage(iv))

    def structure_map(self, outer, intervals, inputs):
        return self.base.structure_map(
            self.preimage(outer), [self.preimage(i) for i in intervals], inputs
        )


def check_locality(P: PrefactLine, t: float, opens: Iterable[OpenSet1D]) -> dict:
    """Compare (pi_t)_* P with the defect-free line on opens away from [-2t, 2t]."""
    push = PushforwardLine(P, t)
    free = weyl_only_prefact(P.algebra.V, P.algebra.hbar, P.cap)
    A = P.algebra
    gens = [A.gen(lab) for lab in A.V.labels]
    rows = []
    for idx, U in enumerate(opens):
        spaces_equal = all(push.space(iv) == free.space(iv) for iv in U.intervals)
        maps_equal = spaces_equal
        for iv in U.intervals if spaces_equal else ():
            lo, hi = iv
            w = (hi - lo) / 3
            subs = [(lo, lo + w), (lo + w, lo + 2 * w), (lo + 2 * w, hi)]
            inputs = [gens[(idx + k) % len(gens)] for k in range(3)]
            if push.structure_map(iv, subs, inputs) != free.structure_map(iv, subs, inputs):
                maps_equal = False
            if push.structure_map(iv, [], []) != free.structure_map(iv, [], []):
                maps_equal = False
        rows.append({"open": U.to_list(), "spaces_equal": spaces_equal, "maps_equal": maps_equal})
    ok = all(r["spaces_equal"] and r["maps_equal"] for r in rows)
    return {"t": t, "count": len(rows), "passed": ok, "opens": rows}


# --------------------------------------------------------------------------
# classical counterpart
# --------------------------------------------------------------------------


def classical_defect_prefact(V: SymplecticVS, Lm, Lp, cap: int = DEFAULT_CAP) -> tuple[PrefactLine, dict]:
    """Poisson flavour: Sym(V*) acting on O(L_-) (x) O(L_+) by restriction."""
    A = WeylAlgebra(V, 0, cap, classical=True)
    report = {}
    lags = []
    for name, L in (("L-", Lm), ("L+", Lp)):
        try:
            lag = _as_lagrangian(V, L, name)
        except DomainError:
            lag = None
        report[name] = coisotropy_report(V, L, name)
        lags.append(lag)
    P = PrefactLine(A, lags[0], lags[1]) if all(lags) else None
    return P, report


def _vanishing_generators(V: SymplecticVS, L, name: str):
    if isinstance(L, LagrangianSubspace):
        vecs = L.basis
    elif isinstance(L, (str, list, tuple)) and all(isinstance(s, str) for s in (L.split() if isinstance(L, str) else L)):
        labels = L.replace(",", " ").split() if isinstance(L, str) else list(L)
        vecs = la.zeros((V.dim, len(labels)), True)
        for k, lab in enumerate(labels):
            vecs[V.index(lab), k] = Fraction(1)
    else:
        vecs = _frac_matrix(L).reshape(V.dim, -1)
    return vecs, la.nullspace(vecs.T).T


def _restrict_poly(coeffs: dict, vecs: np.ndarray) -> dict:
    """Pull a polynomial on V back along the parametrisation u -> vecs @ u."""
    k = vecs.shape[1]
    result: dict = {}
    for mi, c in coeffs.items():
        term = {(0,) * k: c}
        for i, e in enumerate(mi):
            lin = {_unit(k, a): vecs[i, a] for a in range(k) if vecs[i, a] != 0}
            for _ in range(e):
                nxt: dict = {}
                for m1, c1 in term.items():
                    for m2, c2 in lin.items():
                        _add(nxt, _plus(m1, m2), c1 * c2)
                term = nxt
        for m, c in term.items():
            _add(result, m, c)
    return result


def coisotropy_report(V: SymplecticVS, L, name: str = "L", max_degree: int = 2) -> dict:
    """Is the vanishing ideal of L closed under the Poisson bracket?

    Membership in the ideal is tested by restriction to L, which is exact because
    the ideal of a linear subspace is radical.
    """
    vecs, ann = _vanishing_generators(V, L, name)
    A = WeylAlgebra(V, 0, 2 * max_degree + 4, classical=True)
    gens = []
    for row in ann:
        gens.append(A.element({(0, _unit(V.dim, i)): row[i] for i in range(V.dim) if row[i] != 0}))
    mons = [A.monomial(m) for d in range(max_degree + 1) for m in monomials(V.dim, d)]
    checked = 0
    failure = None
    for g1 in gens:
        for g2 in gens:
            for f in mons:
                for g in mons:
                    checked += 1
                    br = poisson_bracket(weyl_mul(g1, f), weyl_mul(g2, g))
                    if _restrict_poly(br.hbar_part(0), vecs):
                        failure = failure or {"f": str(weyl_mul(g1, f)), "g": str(weyl_mul(g2, g)), "bracket": str(br)}
    hom = restriction_homomorphism_check(V, vecs, max_degree=2)
    return {
        "name": name,
        "ideal_generators": [str(g) for g in gens],
        "checked": checked,
        "bracket_closed": failure is None,
        "failure": failure,
        "restriction_is_homomorphism": hom,
    }


def restriction_homomorphism_check(V: SymplecticVS, vecs: np.ndarray, max_degree: int = 2) -> bool:
    A = WeylAlgebra(V, 0, 2 * max_degree, classical=True)
    mons = [m for d in range(max_degree + 1) for m in monomials(V.dim, d)]
    for a in mons:
        for b in mons:
            prod = weyl_mul(A.monomial(a), A.monomial(b)).hbar_part(0)
            ra = _restrict_poly({a: Fraction(1)}, vecs)
            rb = _restrict_poly({b: Fraction(1)}, vecs)
            rab: dict = {}
            for m1, c1 in ra.items():
                for m2, c2 in rb.items():
                    _add(rab, _plus(m1, m2), c1 * c2)
            if _restrict_poly(prod, vecs) != rab:
                return False
    return True


# --------------------------------------------------------------------------
# BF domain walls compactified on a circle
# --------------------------------------------------------------------------


def domain_wall_space(lie_dim: int, betti: Sequence[int] = (1, 1)) -> SymplecticVS:
    """V = H(D) (x) (g + g*) for an abelian g and a closed 1-manifold D.

    A-coordinates come first.  The pairing matches H^p (x) g with
    H^{1-p} (x) g*, which is the wedge-integrate pairing on D combined with
    the canonical g/g* pairing.
    """
    if len(betti) != 2 or betti[0] != betti[1]:
        raise DomainError("D must be a closed 1-manifold model with matching Betti numbers")
    b = betti[0]
    r = lie_dim
    labels = []
    for fld in ("A", "B"):
        for p in (0, 1):
            for c in range(b):
                for k in range(r):
                    labels.append(f"{fld}{p}.{c + 1}.{k + 1}" if (b > 1 or r > 1) else f"{fld}{p}")
    n = len(labels)
    w = la.zeros((n, n), True)
    block = b * r
    for p in (0, 1):
        for c in range(block):
            i = p * block + c
            j = 2 * block + (1 - p) * block + c
            w[i, j] = Fraction(1)
            w[j, i] = Fraction(-1)
    return SymplecticVS(tuple(labels), w)


def domain_wall_assignment(U: OpenSet1D, lie_dim: int, L0="A", L1="A", cap: int = 4) -> dict:
    """Defect assignment for a BF domain wall, compactified along a circle D."""
    V = domain_wall_space(lie_dim)
    if V.dim == 0:
        return {"V_dim": 0, "spaces": ["C" for _ in U.intervals], "trivial": True, "fock_dims": []}

    def pick(L):
        if L in ("A", "B"):
            return [lab for lab in V.labels if lab.startswith(L)]
        return L

    P = build_defect_prefact(V, pick(L0), pick(L1), cap=cap)
    return {
        "V_dim": V.dim,
        "labels": list(V.labels),
        "spaces": list(P.space_of_open(U)),
        "trivial": False,
        "fock_minus_generators": list(P.Lm.beta_labels),
        "fock_plus_generators": list(P.Lp.beta_labels),
        "fock_dims": fock_graded_dims(P.Lm, cap),
        "prefact": P,
    }


def multiplication_table(A: WeylAlgebra, max_degree: int = 2) -> list[list[str]]:
    """CSV-ready rows (a, b, a*b) over monomials of degree <= max_degree."""
    rows = [["a", "b", "a*b"]]
    mons = A.basis_monomials(max_degree)
    for a in mons:
        for b in mons:
            rows.append([str(a), str(b), str(weyl_mul(a, b))])
    return rows
