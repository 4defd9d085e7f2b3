"""Gauge-theoretic defects: monodromy, BF Lagrangians, Wilson loops, coupled dg Lie algebras.

Holonomy convention: a loop starts at angle 0, segments run counterclockwise,
and the monodromy composes right to left, ``exp(A_n d_n) ... exp(A_1 d_1)``,
so it solves ``U' = A U``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np

from . import linalg as la
from .complexes import (
    CochainComplex,
    LagrangianCandidate,
    ShiftedPairing,
    is_isotropic,
    is_lagrangian,
)


class DomainError(ValueError):
    pass


class StructuralError(ValueError):
    pass


# --------------------------------------------------------------------------
# matrix exponential
# --------------------------------------------------------------------------

_PADE_Q = 6
_PADE = [
    math.factorial(2 * _PADE_Q - j) * math.factorial(_PADE_Q)
    / (math.factorial(2 * _PADE_Q) * math.factorial(j) * math.factorial(_PADE_Q - j))
    for j in range(_PADE_Q + 1)
]


def expm(a: np.ndarray) -> np.ndarray:
    """Scaling and squaring with a diagonal [6/6] Pade approximant."""
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise StructuralError(f"expm needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    norm = np.linalg.norm(a, 1) if n else 0.0
    s = max(0, int(math.ceil(math.log2(norm / 0.5)))) if norm > 0.5 else 0
    x = a / (2**s)
    eye = np.eye(n, dtype=complex)
    num = np.zeros_like(eye)
    den = np.zeros_like(eye)
    power = eye
    for j, c in enumerate(_PADE):
        num = num + c * power
        den = den + ((-1) ** j) * c * power
        power = power @ x
    r = np.linalg.solve(den, num)
    for _ in range(s):
        r = r @ r
    return r


# --------------------------------------------------------------------------
# Lie algebras
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LieAlgebraData:
    """Structure constants ``c[i, j, k] = c^k_ij`` so that [e_i, e_j] = sum_k c^k_ij e_k."""

    name: str
    labels: tuple[str, ...]
    structure: np.ndarray
    kappa: np.ndarray | None = None
    realization: tuple | None = None

    def __post_init__(self):
        n = len(self.labels)
        c = la.exact(self.structure) if n else np.empty((0, 0, 0), dtype=object)
        object.__setattr__(self, "structure", c.reshape(n, n, n))
        if self.kappa is not None:
            object.__setattr__(self, "kappa", la.exact(self.kappa).reshape(n, n))
        if self.realization is not None:
            mats = tuple(np.asarray(m, dtype=complex) for m in self.realization)
            if len(mats) != n:
                raise StructuralError("one realization matrix per basis element is required")
            object.__setattr__(self, "realization", mats)
        rep = self.check()
        if not rep["ok"]:
            raise DomainError(f"{self.name}: {rep}")

    @property
    def dim(self) -> int:
        return len(self.labels)

    def bracket(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=object)
        y = np.asarray(y, dtype=object)
        out = la.zeros(self.dim, True)
        for i in range(self.dim):
            if x[i] == 0:
                continue
            for j in range(self.dim):
                if y[j] == 0:
                    continue
                out = out + x[i] * y[j] * self.structure[i, j]
        return out

    def basis_vector(self, i: int) -> np.ndarray:
        v = la.zeros(self.dim, True)
        v[i] = Fraction(1)
        return v

    def check(self) -> dict:
        c = self.structure
        n = self.dim
        if not la.is_zero(c + c.transpose(1, 0, 2)):
            return {"ok": False, "failure": "antisymmetry"}
        for i, j, k in itertools.combinations(range(n), 3):
            ei, ej, ek = (self.basis_vector(t) for t in (i, j, k))
            jac = (
                self.bracket(ei, self.bracket(ej, ek))
                + self.bracket(ej, self.bracket(ek, ei))
                + self.bracket(ek, self.bracket(ei, ej))
            )
            if not la.is_zero(jac):
                return {"ok": False, "failure": "jacobi", "triple": [self.labels[t] for t in (i, j, k)]}
        if self.kappa is not None:
            K = self.kappa
            for i, j, k in itertools.product(range(n), repeat=3):
                ei, ej, ek = (self.basis_vector(t) for t in (i, j, k))
                v = _form(K, self.bracket(ei, ej), ek) + _form(K, ej, self.bracket(ei, ek))
                if v != 0:
                    return {"ok": False, "failure": "kappa_invariance", "triple": [i, j, k]}
        if self.realization is not None:
            mats = self.realization
            for i, j in itertools.product(range(n), repeat=2):
                lhs = mats[i] @ mats[j] - mats[j] @ mats[i]
                rhs = sum(complex(c[i, j, k]) * mats[k] for k in range(n)) if n else 0
                if np.max(np.abs(lhs - rhs), initial=0.0) > 1e-12:
                    return {"ok": False, "failure": "realization", "pair": [i, j]}
        return {"ok": True}

    def ad(self, i: int) -> np.ndarray:
        """Matrix of ad(e_i) acting on coordinate columns."""
        return self.structure[i].T.copy()


def _form(K, x, y):
    return sum(x[i] * K[i, j] * y[j] for i in range(len(x)) for j in range(len(y)))


def abelian(n: int) -> LieAlgebraData:
    mats = []
    for i in range(n):
        m = np.zeros((n, n))
        m[i, i] = 1.0
        mats.append(m)
    return LieAlgebraData(
        f"abelian{n}", tuple(f"e{i + 1}" for i in range(n)),
        la.zeros((n, n, n), True), la.identity(n, True), tuple(mats),
    )


def sl2() -> LieAlgebraData:
    """Basis (h, e, f) with [h,e] = 2e, [h,f] = -2f, [e,f] = h and the Killing form."""
    c = la.zeros((3, 3, 3), True)
    H, E, F = 0, 1, 2
    c[H, E, E], c[E, H, E] = Fraction(2), Fraction(-2)
    c[H, F, F], c[F, H, F] = Fraction(-2), Fraction(2)
    c[E, F, H], c[F, E, H] = Fraction(1), Fraction(-1)
    kappa = la.exact([[8, 0, 0], [0, 0, 4], [0, 4, 0]])
    mats = (np.diag([1.0, -1.0]), np.array([[0.0, 1.0], [0.0, 0.0]]), np.array([[0.0, 0.0], [1.0, 0.0]]))
    return LieAlgebraData("sl2", ("h", "e", "f"), c, kappa, mats)


def heisenberg() -> LieAlgebraData:
    """[x, y] = z; no nondegenerate invariant form, so kappa is omitted."""
    c = la.zeros((3, 3, 3), True)
    c[0, 1, 2], c[1, 0, 2] = Fraction(1), Fraction(-1)
    def unit(i, j):
        m = np.zeros((3, 3))
        m[i, j] = 1.0
        return m
    return LieAlgebraData("heisenberg", ("x", "y", "z"), c, None, (unit(0, 1), unit(1, 2), unit(0, 2)))


def u1() -> LieAlgebraData:
    return LieAlgebraData("u1", ("t",), la.zeros((1, 1, 1), True), la.identity(1, True), (np.array([[1j]]),))


LIE_ALGEBRAS: dict[str, Callable[[], LieAlgebraData]] = {
    "sl2": sl2,
    "heisenberg": heisenberg,
    "u1": u1,
    "abelian1": lambda: abelian(1),
    "abelian2": lambda: abelian(2),
    "abelian3": lambda: abelian(3),
}


def get_algebra(name: str) -> LieAlgebraData:
    try:
        return LIE_ALGEBRAS[name]()
    except KeyError:
        raise DomainError(f"unknown Lie algebra {name!r}; choose from {sorted(LIE_ALGEBRAS)}") from None


def u1_weight(n: int) -> list[np.ndarray]:
    """Weight-n representation of u(1) on C: t acts by i n."""
    return [np.array([[1j * n]])]


def trivial_rep(lie: LieAlgebraData, dim: int) -> list[np.ndarray]:
    return [np.zeros((dim, dim), dtype=complex) for _ in range(lie.dim)]


# --------------------------------------------------------------------------
# connections on a loop
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LoopConnection:
    """Piecewise-constant connection: segment i carries A_i for a length d_i.

    Each A_i is either a square matrix or, when ``lie`` is set, a coordinate
    vector in the Lie algebra.
    """

    segments: tuple
    lie: LieAlgebraData | None = None

    def __post_init__(self):
        segs = []
        size = None
        for a, d in self.segments:
            d = float(d)
            if d <= 0:
                raise DomainError(f"segment lengths must be positive, got {d}")
            a = np.asarray(a, dtype=complex)
            if self.lie is not None:
                if a.shape != (self.lie.dim,):
                    raise StructuralError(f"expected {self.lie.dim} coordinates, got shape {a.shape}")
            else:
                if a.ndim != 2 or a.shape[0] != a.shape[1]:
                    raise StructuralError(f"segment matrix must be square, got {a.shape}")
                if size is not None and a.shape != size:
                    raise StructuralError("segment matrices differ in size")
                size = a.shape
            segs.append((a, d))
        object.__setattr__(self, "segments", tuple(segs))

    @property
    def length(self) -> float:
        return math.fsum(d for _, d in self.segments)

    def matrices(self, rep: Sequence[np.ndarray] | None = None) -> list[tuple[np.ndarray, float]]:
        if self.lie is None:
            if rep is not None:
                raise StructuralError("a representation needs Lie-algebra coordinates")
            return list(self.segments)
        mats = self.lie.realization if rep is None else [np.asarray(m, dtype=complex) for m in rep]
        if mats is None:
            raise StructuralError(f"{self.lie.name} has no matrix realization")
        if len(mats) != self.lie.dim:
            raise StructuralError("representation must give one matrix per basis element")
        shape = mats[0].shape
        if any(m.shape != shape or m.shape[0] != m.shape[1] for m in mats):
            raise StructuralError("representation matrices must be square and of one size")
        return [(sum(a[i] * mats[i] for i in range(len(mats))), d) for a, d in self.segments]

    def refined(self, pieces: int) -> "LoopConnection":
        return LoopConnection(
            tuple((a, d / pieces) for a, d in self.segments for _ in range(pieces)), self.lie
        )

    def gauge(self, h: np.ndarray) -> "LoopConnection":
        """Constant gauge transformation A -> h A h^-1 (matrix segments only)."""
        if self.lie is not None:
            raise StructuralError("gauge transform acts on matrix segments")
        hinv = np.linalg.inv(h)
        return LoopConnection(tuple((h @ a @ hinv, d) for a, d in self.segments))


def monodromy(c: LoopConnection, rep: Sequence[np.ndarray] | None = None) -> np.ndarray:
    mats = c.matrices(rep)
    n = mats[0][0].shape[0] if mats else 0
    out = np.eye(n, dtype=complex)
    for a, d in mats:
        out = expm(a * d) @ out
    return out


def sampled_connection(fn: Callable[[float], np.ndarray], segments: int, length: float = 2 * math.pi) -> LoopConnection:
    """Midpoint samples of a smooth matrix-valued A(theta)."""
    h = length / segments
    return LoopConnection(tuple((fn((i + 0.5) * h), h) for i in range(segments)))


def ode_holonomy(fn: Callable[[float], np.ndarray], length: float = 2 * math.pi) -> np.ndarray:
    """Reference holonomy by integrating U' = A(theta) U with a high-order solver."""
    from scipy.integrate import solve_ivp

    n = np.asarray(fn(0.0)).shape[0]

    def rhs(theta, y):
        u = y.reshape(n, n)
        return (np.asarray(fn(theta), dtype=complex) @ u).ravel()

    sol = solve_ivp(rhs, (0.0, length), np.eye(n, dtype=complex).ravel(),
                    method="DOP853", rtol=1e-13, atol=1e-13)
    return sol.y[:, -1].reshape(n, n)


def refinement_convergence(fn: Callable[[float], np.ndarray], n0: int = 4,
                           ks: Sequence[int] = range(1, 7)) -> dict:
    """Error of the piecewise-constant holonomy against the ODE reference, and its log-log slope."""
    ref = ode_holonomy(fn)
    rows = []
    for k in ks:
        segs = n0 * 2**k
        err = float(np.max(np.abs(monodromy(sampled_connection(fn, segs)) - ref)))
        rows.append({"k": k, "segments": segs, "error": err})
    x = np.log([2 * math.pi / r["segments"] for r in rows])
    y = np.log([r["error"] for r in rows])
    slope = float(np.polyfit(x, y, 1)[0])
    return {"rows": rows, "slope": slope}


def default_smooth_connection(theta: float) -> np.ndarray:
    """A fixed non-commuting sl2-valued connection used by the convergence check."""
    h = np.diag([1.0, -1.0])
    e = np.array([[0.0, 1.0], [0.0, 0.0]])
    f = np.array([[0.0, 0.0], [1.0, 0.0]])
    return 0.3 * h + 0.5 * math.cos(theta) * e + 0.4 * math.sin(2 * theta) * f


# --------------------------------------------------------------------------
# conjugacy invariants
# --------------------------------------------------------------------------


def _faddeev_leverrier(a: np.ndarray) -> list:
    n = a.shape[0]
    coeffs = [Fraction(1)]
    m = la.zeros((n, n), True)
    eye = la.identity(n, True)
    c = Fraction(1)
    for k in range(1, n + 1):
        m = la.matmul(a, m) + eye * c
        am = la.matmul(a, m)
        c = -sum(am[i, i] for i in range(n)) / k
        coeffs.append(c)
    return coeffs


def conjugacy_invariants(g) -> list:
    """Coefficients of det(lambda I - g), highest power first."""
    g = np.asarray(g)
    if g.ndim != 2 or g.shape[0] != g.shape[1]:
        raise StructuralError(f"square matrix expected, got shape {g.shape}")
    if g.dtype == object:
        return _faddeev_leverrier(la.exact(g))
    return list(np.poly(g)) if g.shape[0] else [1.0]


# --------------------------------------------------------------------------
# BF Lagrangians in T*g
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class TStarFiber:
    """g + g* with omega((x, xi), (y, eta)) = xi(y) - eta(x)."""

    lie: LieAlgebraData
    pairing: ShiftedPairing = field(init=False)

    def __post_init__(self):
        n = self.lie.dim
        labels = list(self.lie.labels) + [f"{lab}*" for lab in self.lie.labels]
        c = CochainComplex.build({0: 2 * n}, {}, {0: labels}, exact=True)
        w = la.zeros((2 * n, 2 * n), True)
        for i in range(n):
            w[i, n + i] = Fraction(-1)
            w[n + i, i] = Fraction(1)
        object.__setattr__(self, "pairing", ShiftedPairing(c, 0, {0: w}))

    @property
    def complex(self) -> CochainComplex:
        return self.pairing.complex


def _lagrangian_report(fiber: TStarFiber, cols: np.ndarray, **extra) -> dict:
    L = LagrangianCandidate.inclusion(fiber.complex, {0: cols})
    rep = is_lagrangian(L, fiber.pairing)
    out = {
        "dim": la.rank(cols) if cols.shape[1] else 0,
        "ambient_dim": 2 * fiber.lie.dim,
        "isotropic": rep.isotropic,
        "strict_self_perp": rep.strict_self_perp,
        "cohomology_lagrangian": rep.cohomology_lagrangian,
        "half_dimension": rep.half_dimension,
    }
    out.update(extra)
    out["candidate"] = L
    return out


def bf_lagrangian_graph(s, lie: LieAlgebraData, kappa=None) -> dict:
    """L_s = {(x, s kappa(x, .))}; kappa defaults to the algebra's invariant form."""
    K = lie.kappa if kappa is None else la.exact(kappa).reshape(lie.dim, lie.dim)
    if K is None:
        raise DomainError(f"{lie.name} carries no invariant pairing")
    if la.rank(K) != lie.dim:
        raise DomainError("kappa is degenerate")
    s = Fraction(s)
    n = lie.dim
    cols = la.zeros((2 * n, n), True)
    for i in range(n):
        cols[i, i] = Fraction(1)
    # the covector x -> s kappa(x, .) has components s * sum_i x_i K[i, j]
    cols[n:, :] = K.T * s
    fiber = TStarFiber(lie)
    return _lagrangian_report(fiber, cols, s=str(s), kappa_symmetric=bool(la.is_zero(K - K.T)))


def subalgebra_check(lie: LieAlgebraData, basis: np.ndarray) -> dict:
    basis = la.exact(basis).reshape(lie.dim, -1) if np.size(basis) else la.zeros((lie.dim, 0), True)
    for a in range(basis.shape[1]):
        for b in range(a + 1, basis.shape[1]):
            br = lie.bracket(basis[:, a], basis[:, b])
            if la.solve_in_span(basis, br) is None:
                return {"closed": False, "failing_pair": [a, b], "bracket": [str(v) for v in br]}
    return {"closed": True}


def bf_lagrangian_subalgebra(lie: LieAlgebraData, basis) -> dict:
    """L_l = l + Ann(l) for a subalgebra l, given by column vectors."""
    basis = la.exact(basis).reshape(lie.dim, -1) if np.size(basis) else la.zeros((lie.dim, 0), True)
    chk = subalgebra_check(lie, basis)
    if not chk["closed"]:
        raise DomainError(f"not a subalgebra: {chk}")
    n = lie.dim
    ann = la.nullspace(basis.T) if basis.shape[1] else la.identity(n, True)
    cols = la.zeros((2 * n, basis.shape[1] + ann.shape[1]), True)
    cols[:n, : basis.shape[1]] = basis
    cols[n:, basis.shape[1]:] = ann
    return _lagrangian_report(TStarFiber(lie), cols, subalgebra_dim=basis.shape[1])


def named_subalgebras(lie: LieAlgebraData) -> dict[str, np.ndarray]:
    n = lie.dim
    eye = la.identity(n, True)
    out = {"zero": la.zeros((n, 0), True), "full": eye}
    if lie.name == "sl2":
        out["cartan"] = eye[:, [0]]
        out["borel"] = eye[:, [0, 1]]
    elif lie.name == "heisenberg":
        out["center"] = eye[:, [2]]
        out["xz"] = eye[:, [0, 2]]
    elif n >= 1:
        out["first"] = eye[:, [0]]
    return out


# --------------------------------------------------------------------------
# BF equations of motion on a cellular annulus
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class AnnulusGrid:
    """Circle with n vertices times an interval with m edges.

    Horizontal edge h(i, j): v(i, j) -> v(i+1, j); vertical edge u(i, j):
    v(i, j) -> v(i, j+1); face f(i, j) has bottom h(i, j), right u(i+1, j),
    top h(i, j+1) and left u(i, j).
    """

    n: int = 4
    m: int = 2

    def v(self, i, j):
        return (i % self.n) * (self.m + 1) + j

    @property
    def nv(self):
        return self.n * (self.m + 1)

    @property
    def nh(self):
        return self.n * (self.m + 1)

    @property
    def nu(self):
        return self.n * self.m

    @property
    def ne(self):
        return self.nh + self.nu

    @property
    def nf(self):
        return self.n * self.m

    def h(self, i, j):
        return (i % self.n) * (self.m + 1) + j

    def u(self, i, j):
        return self.nh + (i % self.n) * self.m + j

    def f(self, i, j):
        return (i % self.n) * self.m + j

    def edges(self):
        for i in range(self.n):
            for j in range(self.m + 1):
                yield self.h(i, j), self.v(i, j), self.v(i + 1, j)
        for i in range(self.n):
            for j in range(self.m):
                yield self.u(i, j), self.v(i, j), self.v(i, j + 1)

    def faces(self):
        for i in range(self.n):
            for j in range(self.m):
                yield self.f(i, j), self.h(i, j), self.u(i + 1, j), self.h(i, j + 1), self.u(i, j)


def _d0(grid: AnnulusGrid, b: np.ndarray) -> np.ndarray:
    out = np.zeros((grid.ne,) + b.shape[1:], dtype=b.dtype)
    for e, s, t in grid.edges():
        out[e] = b[t] - b[s]
    return out


def _d1(grid: AnnulusGrid, a: np.ndarray) -> np.ndarray:
    out = np.zeros((grid.nf,) + a.shape[1:], dtype=a.dtype)
    for f, bot, right, top, left in grid.faces():
        out[f] = a[bot] + a[right] - a[top] - a[left]
    return out


def eom_residuals_bf(lie: LieAlgebraData, A: np.ndarray, B: np.ndarray, grid: AnnulusGrid) -> dict:
    """F_A = dA + 1/2 [A u A] and nabla_A B = dB + A . B (coadjoint), cubical cup products.

    A: array (edges, dim g); B: array (vertices, dim g*).
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != (grid.ne, lie.dim) or B.shape != (grid.nv, lie.dim):
        raise StructuralError("field shapes do not match the grid")
    c = np.array([[[float(x) for x in row] for row in plane] for plane in lie.structure]) if lie.dim else np.zeros((0, 0, 0))
    F = _d1(grid, A)
    for f, bot, right, top, left in grid.faces():
        cup = np.einsum("i,j,ijk->k", A[bot], A[right], c) - np.einsum("i,j,ijk->k", A[left], A[top], c)
        F[f] += 0.5 * cup
    DB = _d0(grid, B)
    for e, s, t in grid.edges():
        # coadjoint: (a . xi)_k = -sum c^j_{ik} a_i xi_j, evaluated at the end vertex
        DB[e] += -np.einsum("i,j,ikj->k", A[e], B[t], c)
    return {
        "F_A": float(np.max(np.abs(F), initial=0.0)),
        "nabla_B": float(np.max(np.abs(DB), initial=0.0)),
    }


def winding_connection(lie: LieAlgebraData, grid: AnnulusGrid, coeff: Sequence[float]) -> np.ndarray:
    """Closed, non-exact A: every horizontal edge carries coeff / n."""
    A = np.zeros((grid.ne, lie.dim))
    for i in range(grid.n):
        for j in range(grid.m + 1):
            A[grid.h(i, j)] = np.asarray(coeff, dtype=float) / grid.n
    return A


# --------------------------------------------------------------------------
# Wilson loops
# --------------------------------------------------------------------------


def wilson_loop(c: LoopConnection, rep: Sequence[np.ndarray] | None = None) -> complex:
    return complex(np.trace(monodromy(c, rep)))


def u1_loop(flux: float, segments: int = 4) -> LoopConnection:
    """u(1) connection with integral of the coordinate equal to ``flux``."""
    return LoopConnection(tuple(([flux / (2 * math.pi)], 2 * math.pi / segments) for _ in range(segments)), u1())


# --------------------------------------------------------------------------
# coupled dg Lie algebras
# --------------------------------------------------------------------------


def square_zero_cdga(c: CochainComplex):
    """Unit plus the remaining cochains with all products in the ideal set to 0.

    Returns (complex in the new basis, degrees, product tensor).  The unit is
    the constant 0-cochain; the ideal is spanned by the other basis vectors
    after a change of basis that keeps d exact.
    """
    if not c.exact:
        raise DomainError("exact cochains required")
    degs = c.degrees
    if 0 not in degs or c.dim(0) == 0:
        raise DomainError("need 0-cochains for the unit")
    n0 = c.dim(0)
    # basis of degree 0: unit = sum of all vertices, then vertices 2..n0
    g0 = la.zeros((n0, n0), True)
    for i in range(n0):
        g0[i, 0] = Fraction(1)
    for i in range(1, n0):
        g0[i, i] = Fraction(1)
    if c.dim(1) and not la.is_zero(la.matmul(c.d(0), g0[:, [0]])):
        raise DomainError("constant 0-cochain is not closed")
    basis_deg = []
    for p in degs:
        basis_deg += [p] * c.dim(p)
    N = len(basis_deg)
    # differential in the new basis (only the degree-0 block changes)
    D = la.zeros((N, N), True)
    offs = {}
    o = 0
    for p in degs:
        offs[p] = o
        o += c.dim(p)
    for p in degs:
        if p + 1 in offs and c.dim(p) and c.dim(p + 1):
            blk = c.d(p)
            if p == 0:
                blk = la.matmul(blk, g0)
            if p + 1 == 0:
                blk = la.matmul(_inv(g0), blk)
            D[offs[p + 1]: offs[p + 1] + c.dim(p + 1), offs[p]: offs[p] + c.dim(p)] = blk
    unit = offs[0]
    prod = np.empty((N, N), dtype=object)
    for i in range(N):
        for j in range(N):
            v = la.zeros(N, True)
            if i == unit:
                v[j] = Fraction(1)
            elif j == unit:
                v[i] = Fraction(1)
            prod[i, j] = v
    return basis_deg, D, prod


def _inv(m):
    n = m.shape[0]
    r, piv = la.rref(np.concatenate([m, la.identity(n, True)], axis=1))
    return r[:, n:]


@dataclass(frozen=True, eq=False)
class CoupledDGLA:
    """(C (x) g) + (C (x) W) with W = V[-1], optionally parity shifted.

    Basis elements are pairs (a, x) of a cochain basis vector and a basis vector
    of g + W; ``parity[i]`` is the Koszul parity used for signs.
    """

    lie: LieAlgebraData
    rep: tuple
    odd: bool
    base_degrees: tuple
    labels: tuple
    degrees: tuple
    parity: tuple
    bracket_tensor: np.ndarray  # [i, j] -> coefficient vector
    differential: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.labels)

    def bracket(self, i: int, j: int) -> np.ndarray:
        return self.bracket_tensor[i, j]

    def bracket_vec(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        out = la.zeros(self.dim, True)
        for i in np.nonzero(x != 0)[0]:
            for j in np.nonzero(y != 0)[0]:
                out = out + x[i] * y[j] * self.bracket_tensor[i, j]
        return out

    @property
    def is_trivial_defect(self) -> bool:
        return len(self.rep) == 0 or self.rep[0].shape[0] == 0


def _exact_rep(rep, lie) -> tuple:
    mats = []
    for m in rep:
        m = np.asarray(m)
        if np.iscomplexobj(m) and np.any(np.imag(m) != 0):
            raise DomainError("coupled dg Lie algebras need real rational action matrices")
        mats.append(la.exact(np.real(m).astype(object) if m.dtype != object else m))
    if len(mats) != lie.dim:
        raise StructuralError("one action matrix per Lie algebra basis element is required")
    return tuple(mats)


def module_check(lie: LieAlgebraData, rep) -> dict:
    """rho([e_i, e_j]) = [rho(e_i), rho(e_j)] for all basis pairs."""
    mats = _exact_rep(rep, lie)
    if not mats or mats[0].shape[0] == 0:
        return {"ok": True}
    for i, j in itertools.product(range(lie.dim), repeat=2):
        lhs = la.zeros(mats[0].shape, True)
        for k in range(lie.dim):
            if lie.structure[i, j, k] != 0:
                lhs = lhs + mats[k] * lie.structure[i, j, k]
        rhs = la.matmul(mats[i], mats[j]) - la.matmul(mats[j], mats[i])
        if not la.is_zero(lhs - rhs):
            return {"ok": False, "pair": [lie.labels[i], lie.labels[j]]}
    return {"ok": True}


def coupled_dgla(lie: LieAlgebraData, rep, parity: str, base: CochainComplex) -> tuple[CoupledDGLA, dict]:
    """Build (C (x) g) semidirect (C (x) W) and run the Jacobi, Leibniz and module checks."""
    if parity not in ("odd", "even"):
        raise DomainError("parity must be 'odd' or 'even'")
    mats = _exact_rep(rep, lie) if len(rep) else tuple(la.zeros((0, 0), True) for _ in range(lie.dim))
    vdim = mats[0].shape[0] if mats else 0
    odd = parity == "odd"
    # g + W as a graded Lie algebra: g even, W in degree 1 with parity (1 + odd)
    gdim = lie.dim
    tot = gdim + vdim
    w_parity = (1 + int(odd)) % 2
    gdeg = [0] * gdim + [1] * vdim
    gpar = [0] * gdim + [w_parity] * vdim
    gbr = np.empty((tot, tot), dtype=object)
    for i in range(tot):
        for j in range(tot):
            v = la.zeros(tot, True)
            if i < gdim and j < gdim:
                v[:gdim] = lie.structure[i, j]
            elif i < gdim <= j:
                v[gdim:] = mats[i][:, j - gdim]
            elif j < gdim <= i:
                v[gdim:] = -mats[j][:, i - gdim]
            gbr[i, j] = v
    cdeg, D, prod = square_zero_cdga(base)
    N = len(cdeg)
    glabels = list(lie.labels) + [f"v{k + 1}" for k in range(vdim)]
    labels, degrees, pars, index = [], [], [], {}
    for a in range(N):
        for x in range(tot):
            index[(a, x)] = len(labels)
            labels.append(f"c{a}⊗{glabels[x]}")
            degrees.append(cdeg[a] + gdeg[x])
            pars.append((cdeg[a] + gpar[x]) % 2)
    dimL = len(labels)
    br = np.empty((dimL, dimL), dtype=object)
    for (a, x), I in index.items():
        for (b, y), J in index.items():
            out = la.zeros(dimL, True)
            sign = -1 if (gpar[x] * cdeg[b]) % 2 else 1
            ab = prod[a, b]
            xy = gbr[x, y]
            for c_ in np.nonzero(ab != 0)[0]:
                for z in np.nonzero(xy != 0)[0]:
                    out[index[(c_, z)]] += sign * ab[c_] * xy[z]
            br[I, J] = out
    dL = la.zeros((dimL, dimL), True)
    for (a, x), I in index.items():
        for c_ in np.nonzero(D[:, a] != 0)[0]:
            dL[index[(c_, x)], I] = D[c_, a]
    L = CoupledDGLA(lie, mats, odd, tuple(cdeg), tuple(labels), tuple(degrees), tuple(pars), br, dL)
    report = {
        "dim": dimL,
        "module": module_check(lie, mats) if vdim else {"ok": True},
        **dgla_checks(L),
        "descriptor": "trivial defect" if vdim == 0 else f"{lie.name} ⋉ {'Π' if odd else ''}V (dim {vdim})",
    }
    report["passed"] = report["module"]["ok"] and report["jacobi"]["ok"] and report["leibniz"]["ok"] \
        and report["antisymmetry"]["ok"] and report["d_squared"]
    return L, report


def _integer_tensor(arr: np.ndarray):
    """Scale an exact array to integers; returns (int64 array, scale) or None on overflow risk."""
    den = 1
    for v in arr.ravel():
        den = den * v.denominator // math.gcd(den, v.denominator)
    ints = np.array([int(v * den) for v in arr.ravel()], dtype=object).reshape(arr.shape)
    big = max((abs(v) for v in ints.ravel()), default=0)
    if big and big * big * arr.shape[0] ** 2 > 2**60:
        return None
    return ints.astype(np.int64), den


def _bracket_array(L: CoupledDGLA) -> np.ndarray:
    """T[k, i, j] = coefficient of e_k in [e_i, e_j]."""
    n = L.dim
    T = np.empty((n, n, n), dtype=object)
    for i in range(n):
        for j in range(n):
            T[:, i, j] = L.bracket_tensor[i, j]
    return T


def dgla_checks(L: CoupledDGLA) -> dict:
    """Graded antisymmetry, graded Jacobi and Leibniz on the monomial basis.

    The exact tensors are rescaled to integers, which keeps every identity
    exact (each one is homogeneous in the bracket) and lets numpy do the work.
    """
    n = L.dim
    p = np.array(L.parity, dtype=np.int64)
    out: dict = {}
    if n == 0:
        return {"antisymmetry": {"ok": True}, "jacobi": {"ok": True, "checked": 0, "failing_triple": None},
                "leibniz": {"ok": True}, "d_squared": True}
    T_exact = _bracket_array(L)
    scaled = _integer_tensor(T_exact)
    dscaled = _integer_tensor(L.differential)
    if scaled is None or dscaled is None:
        raise DomainError("structure constants too large for the integer fast path")
    T, _ = scaled
    D, _ = dscaled
    sign = np.where((p[:, None] * p[None, :]) % 2 == 1, -1, 1)  # (-1)^{p_i p_j}
    # antisymmetry: [e_i, e_j] = -(-1)^{p_i p_j} [e_j, e_i]
    anti = T + sign[None, :, :] * T.transpose(0, 2, 1)
    bad = np.argwhere(np.any(anti != 0, axis=0))
    out["antisymmetry"] = {"ok": bad.size == 0}
    if bad.size:
        i, j = bad[0]
        out["antisymmetry"]["pair"] = [L.labels[i], L.labels[j]]
    # Jacobi as operators: ad_i ad_j = ad_[i,j] + (-1)^{p_i p_j} ad_j ad_i
    adad = np.einsum("aib,bjc->ijac", T, T)
    ad_br = np.einsum("kij,akc->ijac", T, T)
    jac = adad - ad_br - sign[:, :, None, None] * adad.transpose(1, 0, 2, 3)
    bad = np.argwhere(np.any(jac != 0, axis=2))
    failure = None
    if bad.size:
        i, j, c = bad[0]
        failure = [L.labels[i], L.labels[j], L.labels[c]]
    out["jacobi"] = {"ok": failure is None, "checked": n**3, "failing_triple": failure}
    # Leibniz: d[e_i, e_j] = [d e_i, e_j] + (-1)^{p_i} [e_i, d e_j]
    lhs = np.einsum("ak,kij->aij", D, T)
    term1 = np.einsum("ai,kaj->kij", D, T)
    term2 = np.einsum("aj,kia->kij", D, T) * np.where(p % 2 == 1, -1, 1)[None, :, None]
    bad = np.argwhere(np.any(lhs - term1 - term2 != 0, axis=0))
    out["leibniz"] = {"ok": bad.size == 0}
    if bad.size:
        i, j = bad[0]
        out["leibniz"]["pair"] = [L.labels[i], L.labels[j]]
    out["d_squared"] = bool(not np.any(D @ D))
    return out


def _unit(n, i):
    v = la.zeros(n, True)
    v[i] = Fraction(1)
    return v


def standard_rep_sl2():
    return [la.exact([[1, 0], [0, -1]]), la.exact([[0, 1], [0, 0]]), la.exact([[0, 0], [1, 0]])]


def u1_semidirect_rep(n: int):
    """Real form of u(1) acting on V_n: [(1, 0), (0, v)] = (0, n v)."""
    return [la.exact([[n]])]


def abelian_line() -> LieAlgebraData:
    """u(1) with a real generator, used for the semidirect product with V_n."""
    return LieAlgebraData("u1", ("t",), la.zeros((1, 1, 1), True), la.identity(1, True), (np.array([[1.0]]),))


# --------------------------------------------------------------------------
# minimal coupling
# --------------------------------------------------------------------------


def minimal_coupling_action(psi, A, x, inner, parity: str = "odd") -> float:
    """Trapezoid rule for the integral of (psi, (d + A) psi) along a grid on D.

    psi: (N, dim V) samples; A: (N, dim V, dim V) or a constant matrix;
    inner: the pairing on V (skew for odd parity, symmetric for even).
    """
    psi = np.asarray(psi, dtype=float)
    x = np.asarray(x, dtype=float)
    G = np.asarray(inner, dtype=float)
    if psi.ndim != 2 or psi.shape[0] != x.shape[0]:
        raise StructuralError("psi samples must match the grid")
    N, dv = psi.shape
    A = np.asarray(A, dtype=float)
    if A.ndim == 2:
        A = np.broadcast_to(A, (N, dv, dv))
    if A.shape != (N, dv, dv) or G.shape != (dv, dv):
        raise StructuralError("connection or pairing has the wrong shape")
    expected = -G.T if parity == "odd" else G.T
    if not np.allclose(G, expected):
        raise DomainError(f"pairing must be {'skew' if parity == 'odd' else 'symmetric'} for {parity} parity")
    dpsi = np.gradient(psi, x, axis=0, edge_order=2) if N > 2 else np.zeros_like(psi)
    cov = dpsi + np.einsum("nij,nj->ni", A, psi)
    integrand = np.einsum("ni,ij,nj->n", psi, G, cov)
    return float(np.trapezoid(integrand, x))
