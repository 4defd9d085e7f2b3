"""Finite cellular cochain models standing in for de Rham complexes.

Intervals carry explicit rational vertex positions so that restriction to a
subinterval is the Whitney pullback: 0-cochains are linearly interpolated,
1-cochains are integrated over the overlap. Both are exact rational chain maps.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import linalg as la
from .complexes import (
    ChainMap,
    CochainComplex,
    LagrangianCandidate,
    ShiftedPairing,
    StructuralError,
    identity_map,
    shift,
    tensor,
    tensor_map,
)


def as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, float):
        return Fraction(repr(x))
    return Fraction(x)


def point() -> CochainComplex:
    return CochainComplex.build({0: 1}, {}, {0: ("pt",)})


def interval(vertices: Sequence) -> CochainComplex:
    """Cochains of the subdivided interval with the given increasing vertex positions."""
    xs = [as_fraction(v) for v in vertices]
    if len(xs) < 2 or any(b <= a for a, b in zip(xs, xs[1:])):
        raise StructuralError("interval needs at least two increasing vertices")
    n = len(xs) - 1
    d = la.zeros((n, n + 1), True)
    for i in range(n):
        d[i, i] = Fraction(-1)
        d[i, i + 1] = Fraction(1)
    labels = {
        0: tuple(f"v({x})" for x in xs),
        1: tuple(f"e({a},{b})" for a, b in zip(xs, xs[1:])),
    }
    return CochainComplex.build({0: n + 1, 1: n}, {0: d}, labels)


def unit_interval(cells: int) -> CochainComplex:
    return interval([Fraction(i, cells) for i in range(cells + 1)])


def interval_vertices(c: CochainComplex) -> list[Fraction]:
    return [Fraction(s[2:-1]) for s in c.space.labels[0]]


def circle(cells: int = 2) -> CochainComplex:
    if cells < 1:
        raise StructuralError("circle needs at least one cell")
    d = la.zeros((cells, cells), True)
    for i in range(cells):
        d[i, i] += Fraction(-1)
        d[i, (i + 1) % cells] += Fraction(1)
    labels = {
        0: tuple(f"v{i}" for i in range(cells)),
        1: tuple(f"e{i}" for i in range(cells)),
    }
    return CochainComplex.build({0: cells, 1: cells}, {0: d}, labels)


def sphere(k: int) -> CochainComplex:
    """Minimal CW model: S^0 is two points, S^k (k >= 1) is a vertex and a k-cell."""
    if k < 0:
        raise StructuralError("sphere dimension must be >= 0")
    if k == 0:
        return CochainComplex.build({0: 2}, {}, {0: ("N", "S")})
    return CochainComplex.build({0: 1, k: 1}, {}, {0: ("pt",), k: (f"cell{k}",)})


def torus(cells: int = 2, dim: int = 2) -> CochainComplex:
    c = circle(cells)
    for _ in range(dim - 1):
        c = tensor(c, circle(cells), sep="×")
    return c


def product(*factors: CochainComplex) -> CochainComplex:
    out = factors[0]
    for f in factors[1:]:
        out = tensor(out, f, sep="×")
    return out


def interval_restriction(big: CochainComplex, small: CochainComplex) -> ChainMap:
    """Whitney pullback of cochains on ``big`` to the subinterval ``small``."""
    X, Y = interval_vertices(big), interval_vertices(small)
    if Y[0] < X[0] or Y[-1] > X[-1]:
        raise StructuralError("restriction target is not contained in the source interval")
    r0 = la.zeros((len(Y), len(X)), True)
    for j, y in enumerate(Y):
        i = max(k for k in range(len(X) - 1) if X[k] <= y) if y < X[-1] else len(X) - 2
        lam = (y - X[i]) / (X[i + 1] - X[i])
        r0[j, i] += 1 - lam
        r0[j, i + 1] += lam
    r1 = la.zeros((len(Y) - 1, len(X) - 1), True)
    for j in range(len(Y) - 1):
        a, b = Y[j], Y[j + 1]
        for i in range(len(X) - 1):
            lo, hi = max(a, X[i]), min(b, X[i + 1])
            if hi > lo:
                r1[j, i] = (hi - lo) / (X[i + 1] - X[i])
    return ChainMap(big, small, {0: r0, 1: r1})


def circle_pairing(cells: int = 2) -> ShiftedPairing:
    """Wedge-and-integrate on the cellular circle shifted by one (degrees -1, 0).

    A vertex function pairs with an edge cochain by averaging over the edge's
    endpoints; the reverse order carries the graded-skew sign.
    """
    c = shift(circle(cells), 1)
    w = la.zeros((cells, cells), True)
    for e in range(cells):
        for v in (e, (e + 1) % cells):
            w[v, e] += Fraction(1, 2)
    return ShiftedPairing.from_half(c, -1, {-1: w})


# --------------------------------------------------------------------------
# annulus models
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnulusSet:
    r: Fraction
    R: Fraction

    def __post_init__(self):
        r, R = as_fraction(self.r), as_fraction(self.R)
        if not (0 < r < R < 3):
            raise StructuralError(f"annulus radii must satisfy 0 < r < R < 3, got ({r}, {R})")
        object.__setattr__(self, "r", r)
        object.__setattr__(self, "R", R)


def collar_vertices(a: AnnulusSet, step: Fraction = Fraction(1, 4)) -> list[Fraction]:
    inner = []
    k = (a.r // step) + 1
    while k * step < a.R:
        inner.append(k * step)
        k += 1
    return [a.r, *inner, a.R]


class AnnulusTheory:
    """A factory of annulus complexes A_(r,R) together with restriction maps."""

    name = "theory"
    circle_cells = 2

    def collar(self, a: AnnulusSet) -> CochainComplex:
        return interval(collar_vertices(a))

    def collar_restriction(self, big: CochainComplex, small: CochainComplex) -> ChainMap:
        return interval_restriction(big, small)

    def fibre(self) -> CochainComplex:
        return circle(self.circle_cells)

    def wrap(self, c: CochainComplex) -> CochainComplex:
        return c

    def wrap_map(self, f: ChainMap, src: CochainComplex, tgt: CochainComplex) -> ChainMap:
        return ChainMap(src, tgt, dict(f.blocks))

    def complex(self, a: AnnulusSet) -> CochainComplex:
        return self.wrap(tensor(self.fibre(), self.collar(a), sep="×"))

    def restriction(self, big: AnnulusSet, small: AnnulusSet) -> ChainMap:
        if not (big.r <= small.r and small.R <= big.R):
            raise StructuralError("restriction needs a nested annulus")
        cb, cs = self.collar(big), self.collar(small)
        fib = self.fibre()
        raw_src, raw_tgt = tensor(fib, cb, sep="×"), tensor(fib, cs, sep="×")
        raw = tensor_map(identity_map(fib), self.collar_restriction(cb, cs), raw_src, raw_tgt)
        return self.wrap_map(raw, self.complex(big), self.complex(small))


class AbelianChernSimons(AnnulusTheory):
    """Omega(annulus) ⊗ g[1] for an abelian g of dimension ``rank``."""

    name = "abelian_cs"

    def __init__(self, rank: int = 1):
        self.rank = rank

    def wrap(self, c):
        return shift(_copies(c, self.rank), 1)

    def wrap_map(self, f, src, tgt):
        return _copies_map(f, self.rank, src, tgt)


class AbelianBF(AbelianChernSimons):
    """Omega(annulus) ⊗ (g ⊕ g*)[1]: two copies per generator of g."""

    name = "abelian_bf"

    def __init__(self, rank: int = 1):
        super().__init__(2 * rank)


class MassiveCollar(AnnulusTheory):
    """Counterexample: a mass term m·phi added alongside the collar derivative.

    Degree 0 holds vertex values, degree 1 holds (edge cochains, vertex values)
    and d = (collar derivative, m·id). The cokernel grows with the number of
    collar cells, so restriction cannot be a quasi-isomorphism.
    """

    name = "massive"

    def __init__(self, mass=1):
        self.mass = as_fraction(mass)

    def collar(self, a):
        base = interval(collar_vertices(a))
        nv, ne = base.dim(0), base.dim(1)
        d = la.zeros((ne + nv, nv), True)
        d[:ne, :] = base.d(0)
        for i in range(nv):
            d[ne + i, i] = self.mass
        labels = {0: base.space.labels[0],
                  1: base.space.labels[1] + tuple(f"m{s}" for s in base.space.labels[0])}
        return CochainComplex.build({0: nv, 1: ne + nv}, {0: d}, labels)

    def collar_restriction(self, big, small):
        ib = interval(interval_vertices(big))
        is_ = interval(interval_vertices(small))
        r = interval_restriction(ib, is_)
        r1 = la.block_diag([r.block(1), r.block(0)], True)
        return ChainMap(big, small, {0: r.block(0), 1: r1})


def _copies(c: CochainComplex, n: int) -> CochainComplex:
    from .complexes import direct_sum

    return direct_sum(*([c] * n)) if n > 1 else c


def _copies_map(f: ChainMap, n: int, src: CochainComplex, tgt: CochainComplex) -> ChainMap:
    blocks = {p: la.block_diag([f.block(p)] * n, f.exact) for p in f.source.degrees}
    # src/tgt may be shifted copies; the shift moves degrees by one
    offset = min(src.degrees) - min(f.source.degrees) if src.degrees else 0
    return ChainMap(src, tgt, {p + offset: b for p, b in blocks.items()})


THEORIES = {
    "abelian_cs": AbelianChernSimons,
    "abelian_bf": AbelianBF,
    "massive": MassiveCollar,
}


# --------------------------------------------------------------------------
# holomorphic boundary condition on a Fourier torus
# --------------------------------------------------------------------------


def torus_fourier_boundary(cutoff: int = 1):
    """Omega(T^2)[1] on Fourier modes |k_i| <= cutoff, with the (1,*)-form inclusion.

    Returns ``(pairing, candidate)``; numeric complex mode. Per mode the basis is
    f (deg -1), dx, dy (deg 0), dx∧dy (deg 1). The pairing is normalized wedge
    and integrate, nonzero only between modes k and -k.
    """
    modes = [(a, b) for a in range(-cutoff, cutoff + 1) for b in range(-cutoff, cutoff + 1)]
    n = len(modes)
    pos = {m: i for i, m in enumerate(modes)}
    d_m1 = np.zeros((2 * n, n), dtype=complex)
    d_0 = np.zeros((n, 2 * n), dtype=complex)
    for i, (k1, k2) in enumerate(modes):
        d_m1[2 * i, i] = 1j * k1
        d_m1[2 * i + 1, i] = 1j * k2
        # d(a dx + b dy) = (i k1 b - i k2 a) dx∧dy
        d_0[i, 2 * i] = -1j * k2
        d_0[i, 2 * i + 1] = 1j * k1
    labels = {
        -1: tuple(f"f{m}" for m in modes),
        0: tuple(f"{c}{m}" for m in modes for c in ("dx", "dy")),
        1: tuple(f"dxdy{m}" for m in modes),
    }
    amb = CochainComplex.build({-1: n, 0: 2 * n, 1: n}, {-1: d_m1, 0: d_0}, labels, exact=False)
    w_m1 = np.zeros((n, n), dtype=complex)
    w_0 = np.zeros((2 * n, 2 * n), dtype=complex)
    for i, (k1, k2) in enumerate(modes):
        j = pos[(-k1, -k2)]
        w_m1[i, j] = 1.0
        w_0[2 * i, 2 * j + 1] = 1.0
        w_0[2 * i + 1, 2 * j] = -1.0
    pairing = ShiftedPairing.from_half(amb, 0, {-1: w_m1, 0: w_0})
    # (1,0): dz = dx + i dy ; (1,1): dz∧dz̄ = -2i dx∧dy
    c0 = np.zeros((2 * n, n), dtype=complex)
    c1 = np.zeros((n, n), dtype=complex)
    for i in range(n):
        c0[2 * i, i] = 1.0
        c0[2 * i + 1, i] = 1j
        c1[i, i] = -2j
    cand = LagrangianCandidate.inclusion(amb, {0: c0, 1: c1})
    return pairing, cand
