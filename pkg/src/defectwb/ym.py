"""First-order abelian Yang-Mills on a flat torus, its boundary model, and the Dirac monopole.

Fields are truncated Fourier series in a real basis.  A wavevector ``k`` in the
upper half-space (first nonzero entry positive) carries a (cos, sin) pair, and
the zero mode carries one real coefficient.  On the pair, ``d_j`` acts as
``k_j J`` with ``J = [[0, 1], [-1, 0]]``, so every matrix is an exact integer
matrix and the complex decomposes into independent mode sectors.

Degrees of the four-dimensional complex:

    -1: Omega^0
     0: Omega^1 + Omega^2_+   (A, B)
     1: Omega^2_+ + Omega^3
     2: Omega^4

with ``d(A, B) = (nabla_+ A - c B, nabla B)``.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np

from . import linalg as la
from .complexes import (
    CochainComplex,
    StructuralError,
    LagrangianCandidate,
    ShiftedPairing,
    check_d_squared,
    check_pairing,
    cohomology,
    is_lagrangian,
)

J = la.exact([[0, 1], [-1, 0]])


def wavevectors(dim: int, cutoff: int) -> list[tuple[int, ...]]:
    """Zero vector first, then the upper half-space of the box |k_j| <= cutoff."""
    if cutoff < 0:
        raise ValueError("cutoff must be non-negative")
    out = [(0,) * dim]
    for k in itertools.product(range(-cutoff, cutoff + 1), repeat=dim):
        nz = next((x for x in k if x != 0), 0)
        if nz > 0:
            out.append(k)
    return out


def sector_size(k) -> int:
    return 1 if not any(k) else 2


def partial(k, j: int, background=None) -> np.ndarray:
    """Matrix of d_j (+ a_j) on the sector of wavevector k."""
    a = Fraction(0) if background is None else Fraction(background[j])
    if not any(k):
        return la.exact([[a]])
    return J * k[j] + la.identity(2, True) * a


# --------------------------------------------------------------------------
# exterior algebra
# --------------------------------------------------------------------------


def forms(dim: int, p: int) -> list[tuple[int, ...]]:
    return list(itertools.combinations(range(dim), p))


def _sorted_sign(idx: Sequence[int]) -> tuple[int, tuple]:
    idx = list(idx)
    if len(set(idx)) < len(idx):
        return 0, ()
    sign = 1
    for i in range(len(idx)):
        for j in range(len(idx) - 1 - i):
            if idx[j] > idx[j + 1]:
                idx[j], idx[j + 1] = idx[j + 1], idx[j]
                sign = -sign
    return sign, tuple(idx)


def ext_d(dim: int, p: int, k, background=None) -> np.ndarray:
    """d: Omega^p -> Omega^{p+1} on the sector of k (form index major, sector minor)."""
    s = sector_size(k)
    src, tgt = forms(dim, p), forms(dim, p + 1)
    tindex = {I: n for n, I in enumerate(tgt)}
    out = la.zeros((len(tgt) * s, len(src) * s), True)
    for n, I in enumerate(src):
        for j in range(dim):
            sign, K = _sorted_sign((j,) + I)
            if sign == 0:
                continue
            m = tindex[K]
            out[m * s : (m + 1) * s, n * s : (n + 1) * s] += partial(k, j, background) * sign
    return out


def flat_star(dim: int = 4) -> np.ndarray:
    """Hodge star on 2-forms of flat R^4 in the basis 01, 02, 03, 12, 13, 23."""
    if dim != 4:
        raise ValueError("the self-dual splitting needs dimension 4")
    basis = forms(4, 2)
    out = la.zeros((6, 6), True)
    for n, I in enumerate(basis):
        comp = tuple(x for x in range(4) if x not in I)
        sign, _ = _sorted_sign(I + comp)
        out[basis.index(comp), n] = Fraction(sign)
    return out


def self_dual_basis(star: np.ndarray) -> np.ndarray:
    """Columns spanning ker(star - 1); for the flat star: 01+23, 02-13, 03+12."""
    if not la.is_zero(la.matmul(star, star) - la.identity(6, True)):
        raise ValueError("star must square to the identity on 2-forms")
    basis = la.nullspace(star - la.identity(6, True))
    # normalise so the leading nonzero entry of each column is 1
    for c in range(basis.shape[1]):
        lead = next(basis[r, c] for r in range(6) if basis[r, c] != 0)
        basis[:, c] = basis[:, c] / lead
    return basis


def projector_plus(star: np.ndarray) -> np.ndarray:
    return (la.identity(6, True) + star) * Fraction(1, 2)


def sd_coordinates(star: np.ndarray) -> np.ndarray:
    """Matrix sending a 2-form to the coordinates of its self-dual part."""
    S = self_dual_basis(star)
    P = projector_plus(star)
    # S has full column rank, so its left inverse on im(P) is (S^T S)^{-1} S^T
    sts = la.matmul(S.T, S)
    left = la.matmul(_inverse(sts), S.T)
    return la.matmul(left, P)


def _inverse(m):
    n = m.shape[0]
    r, piv = la.rref(np.concatenate([m, la.identity(n, True)], axis=1))
    if piv[:n] != list(range(n)):
        raise ValueError("singular matrix")
    return r[:, n:]


@functools.lru_cache(maxsize=16)
def _star_data(key: tuple) -> tuple[np.ndarray, np.ndarray]:
    star = la.exact(np.array(key, dtype=object).reshape(6, 6))
    return sd_coordinates(star), self_dual_basis(star)


def _star_key(star) -> tuple:
    star = flat_star() if star is None else la.exact(star)
    return tuple(star.ravel())


def _kron_sector(m: np.ndarray, s: int) -> np.ndarray:
    """Act with a form-index matrix on (form index, sector) coordinates."""
    rows, cols = m.shape
    out = la.zeros((rows * s, cols * s), True)
    for i in range(rows):
        for j in range(cols):
            if m[i, j] != 0:
                for a in range(s):
                    out[i * s + a, j * s + a] = m[i, j]
    return out


# --------------------------------------------------------------------------
# the four-dimensional complex
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ModeComplex:
    k: tuple
    complex: CochainComplex
    coupling: Fraction

    def cross_block(self) -> np.ndarray:
        """The B -> Omega^2_+ block of d_0 (zero iff the rows decouple)."""
        s = sector_size(self.k)
        n1 = 4 * s
        return self.complex.d(0)[: 3 * s, n1:]

    def lower_left(self) -> np.ndarray:
        s = sector_size(self.k)
        return self.complex.d(0)[3 * s :, : 4 * s]


def mode_complex(k, c, star=None, background=None) -> ModeComplex:
    c = Fraction(c)
    sd, sdb = _star_data(_star_key(star))
    s = sector_size(k)
    d0 = ext_d(4, 0, k, background)          # Omega^0 -> Omega^1
    d1 = ext_d(4, 1, k, background)          # Omega^1 -> Omega^2
    d2 = ext_d(4, 2, k, background)          # Omega^2 -> Omega^3
    d3 = ext_d(4, 3, k, background)          # Omega^3 -> Omega^4
    coords = _kron_sector(sd, s)       # Omega^2 -> Omega^2_+
    incl = _kron_sector(sdb, s)        # Omega^2_+ -> Omega^2
    nabla_plus = la.matmul(coords, d1)
    nabla_B = la.matmul(d2, incl)
    n0, n1, n2p, n3, n4 = s, 4 * s, 3 * s, 4 * s, s
    dm1 = la.zeros((n1 + n2p, n0), True)
    dm1[:n1, :] = d0
    dd0 = la.zeros((n2p + n3, n1 + n2p), True)
    dd0[:n2p, :n1] = nabla_plus
    dd0[:n2p, n1:] = la.identity(n2p, True) * (-c)
    dd0[n2p:, n1:] = nabla_B
    dd1 = la.zeros((n4, n2p + n3), True)
    dd1[:, n2p:] = d3
    labels = {
        -1: [f"Ω0[{a}]" for a in range(n0)],
        0: [f"A[{a}]" for a in range(n1)] + [f"B[{a}]" for a in range(n2p)],
        1: [f"Ω2+[{a}]" for a in range(n2p)] + [f"Ω3[{a}]" for a in range(n3)],
        2: [f"Ω4[{a}]" for a in range(n4)],
    }
    cx = CochainComplex.build(
        {-1: n0, 0: n1 + n2p, 1: n2p + n3, 2: n4}, {-1: dm1, 0: dd0, 1: dd1}, labels, exact=True
    )
    return ModeComplex(tuple(k), cx, c)


def build_ym_complex(cutoff: int, c, star=None, background=None) -> dict:
    """Modewise first-order YM complex with d^2 and decoupling reports."""
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    c = Fraction(c)
    residual = 0.0
    worst = None
    split = True
    dims = {-1: 0, 0: 0, 1: 0, 2: 0}
    ks = wavevectors(4, cutoff)
    for k in ks:
        mc = mode_complex(k, c, star, background)
        rep = check_d_squared(mc.complex)
        r = max(rep.residuals.values(), default=0.0)
        if r > residual:
            residual, worst = r, k
        split &= la.is_zero(mc.cross_block()) and la.is_zero(mc.lower_left())
        for p in dims:
            dims[p] += mc.complex.dim(p)
    return {
        "cutoff": cutoff,
        "coupling": str(c),
        "modes": len(ks),
        "dims": dims,
        "d_squared_zero": residual == 0,
        "d_squared_residual": residual,
        "worst_mode": worst,
        "rows_decouple": bool(split),
    }


_COMPONENTS = {-1: [("Ω0", 1)], 0: [("A", 4), ("B", 3)], 1: [("Ω2+", 3), ("Ω3", 4)], 2: [("Ω4", 1)]}


def assemble_ym(cutoff: int, c, star=None) -> dict:
    """Global differentials with coordinates grouped by field component, then by mode.

    Returns ``{"d": {p: matrix}, "blocks": {p: [(name, start, stop)]}}``.
    """
    ks = wavevectors(4, cutoff)
    sizes = [sector_size(k) for k in ks]
    N = sum(sizes)
    offs = np.cumsum([0] + sizes)
    blocks = {}
    for p, comps in _COMPONENTS.items():
        pos, out = 0, []
        for name, mult in comps:
            out.append((name, pos, pos + mult * N))
            pos += mult * N
        blocks[p] = out

    def glob(p, local, m):
        # local index inside a mode complex -> global index
        s = sizes[m]
        for (name, mult), (_, start, _) in zip(_COMPONENTS[p], blocks[p]):
            if local < mult * s:
                f, a = divmod(local, s)
                return start + f * N + offs[m] + a
            local -= mult * s
        raise IndexError(local)

    dims = {p: blocks[p][-1][2] for p in blocks}
    mats = {p: la.zeros((dims[p + 1], dims[p]), True) for p in (-1, 0, 1)}
    for m, k in enumerate(ks):
        cx = mode_complex(k, c, star).complex
        for p in mats:
            blk = cx.d(p)
            rows, cols = np.nonzero(blk != 0)
            for i, j in zip(rows, cols):
                mats[p][glob(p + 1, i, m), glob(p, j, m)] = blk[i, j]
    return {"d": mats, "blocks": blocks}


def assembled_split(assembled: dict) -> bool:
    """True iff the B -> Omega^2_+ and A -> Omega^3 blocks of the global d_0 vanish."""
    d0 = assembled["d"][0]
    (_, a0, a1), (_, b0, b1) = assembled["blocks"][0]
    (_, s0, s1), (_, t0, t1) = assembled["blocks"][1]
    return bool(la.is_zero(d0[s0:s1, b0:b1]) and la.is_zero(d0[t0:t1, a0:a1]))


def projector_checks(star=None) -> dict:
    star = flat_star() if star is None else la.exact(star)
    P = projector_plus(star)
    return {
        "idempotent": bool(la.is_zero(la.matmul(P, P) - P)),
        "star_fixes_image": bool(la.is_zero(la.matmul(star, P) - P)),
        "self_dual_rank": la.rank(P),
    }


def zero_mode_cohomology(c=0) -> dict:
    mc = mode_complex((0, 0, 0, 0), c)
    return cohomology(mc.complex).dims


# --------------------------------------------------------------------------
# equations of motion
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class YMField:
    """Modewise coefficients: A[k] has 4*s entries, B[k] has 3*s (self-dual coordinates)."""

    cutoff: int
    A: dict
    B: dict

    @classmethod
    def zero(cls, cutoff: int, exact: bool = True) -> "YMField":
        ks = wavevectors(4, cutoff)
        return cls(cutoff, {k: la.zeros(4 * sector_size(k), exact) for k in ks},
                   {k: la.zeros(3 * sector_size(k), exact) for k in ks})

    @classmethod
    def random(cls, cutoff: int, seed: int = 0) -> "YMField":
        rng = np.random.default_rng(seed)
        ks = wavevectors(4, cutoff)
        A = {k: la.exact([Fraction(int(x), 7) for x in rng.integers(-5, 6, size=4 * sector_size(k))]) for k in ks}
        return cls(cutoff, A, {k: la.zeros(3 * sector_size(k), True) for k in ks})

    @classmethod
    def constant_A(cls, cutoff: int, coeffs: Sequence) -> "YMField":
        f = cls.zero(cutoff)
        z = (0, 0, 0, 0)
        f.A[z][:] = la.exact(list(coeffs))
        return f


def _nabla_plus(k, c_star, background=None):
    s = sector_size(k)
    coords = _kron_sector(_star_data(_star_key(c_star))[0], s)
    return la.matmul(coords, ext_d(4, 1, k, background))


def _nabla_B(k, star, background=None):
    s = sector_size(k)
    return la.matmul(ext_d(4, 2, k, background), _kron_sector(_star_data(_star_key(star))[1], s))


def nabla_plus_field(field: YMField, star=None) -> dict:
    star = flat_star() if star is None else la.exact(star)
    return {k: la.matmul(_nabla_plus(k, star), a.reshape(-1, 1)).ravel() for k, a in field.A.items()}


def eom_residuals_ym(field: YMField, c, star=None) -> dict:
    """(max |nabla_+ A - c B|, max |nabla B|) over all modes."""
    star = flat_star() if star is None else la.exact(star)
    c = Fraction(c)
    r1 = 0.0
    r2 = 0.0
    for k in field.A:
        na = la.matmul(_nabla_plus(k, star), field.A[k].reshape(-1, 1)).ravel()
        r1 = max(r1, la.max_abs(na - field.B[k] * c))
        nb = la.matmul(_nabla_B(k, star), field.B[k].reshape(-1, 1)).ravel()
        r2 = max(r2, la.max_abs(nb))
    return {"first": r1, "second": r2}


def field_with_B_from_A(field: YMField, c, star=None) -> YMField:
    c = Fraction(c)
    if c == 0:
        raise ValueError("coupling must be nonzero to solve for B")
    na = nabla_plus_field(field, star)
    return YMField(field.cutoff, field.A, {k: v / c for k, v in na.items()})


# --------------------------------------------------------------------------
# boundary model on T^3
# --------------------------------------------------------------------------


def _integral_weight(k) -> Fraction:
    """Normalised integral of a squared basis function (the torus volume is dropped)."""
    return Fraction(1) if not any(k) else Fraction(1, 2)


@dataclass(frozen=True, eq=False)
class BoundaryMode:
    """One Fourier sector of Omega^0 -> Omega^1 (A row) and z Omega^2 -> z Omega^3 (B row).

    Degrees: -1: Omega^0; 0: Omega^1 + z Omega^2; 1: z Omega^3.  The pairing is
    wedge-and-integrate, 0-shifted.
    """

    k: tuple
    complex: CochainComplex
    pairing: ShiftedPairing
    a_row: dict
    b_row: dict


def boundary_mode(k) -> BoundaryMode:
    s = sector_size(k)
    f1, f2 = forms(3, 1), forms(3, 2)
    na, nb = 3 * s, 3 * s
    dm1 = la.zeros((na + nb, s), True)
    dm1[:na, :] = ext_d(3, 0, k)
    d0 = la.zeros((s, na + nb), True)
    d0[:, na:] = ext_d(3, 2, k)
    w = _integral_weight(k)
    W0 = la.zeros((na + nb, na + nb), True)
    for i, one in enumerate(f1):
        for j, two in enumerate(f2):
            sign, _ = _sorted_sign(one + two)
            if sign:
                for a in range(s):
                    r, c = i * s + a, na + j * s + a
                    W0[r, c] = w * sign
                    W0[c, r] = -w * sign
    Wm1 = la.identity(s, True) * w
    labels = {
        -1: [f"f[{a}]" for a in range(s)],
        0: [f"A[{a}]" for a in range(na)] + [f"zB[{a}]" for a in range(nb)],
        1: [f"zC[{a}]" for a in range(s)],
    }
    cx = CochainComplex.build({-1: s, 0: na + nb, 1: s}, {-1: dm1, 0: d0}, labels, exact=True)
    pairing = ShiftedPairing(cx, 0, {-1: Wm1, 0: W0, 1: Wm1.T})
    return BoundaryMode(tuple(k), cx, pairing,
                        a_row={-1: list(range(s)), 0: list(range(na))},
                        b_row={0: list(range(na, na + nb)), 1: list(range(s))})


@dataclass(frozen=True, eq=False)
class BoundaryYMComplex:
    """The truncated boundary complex as a direct sum of mode sectors."""

    cutoff: int
    modes: list

    def dims(self) -> dict:
        out: dict[int, int] = {}
        for m in self.modes:
            for p in m.complex.degrees:
                out[p] = out.get(p, 0) + m.complex.dim(p)
        return out


def build_boundary_complex(cutoff: int = 1) -> BoundaryYMComplex:
    return BoundaryYMComplex(cutoff, [boundary_mode(k) for k in wavevectors(3, cutoff)])


def _columns(dim: int, indices: Iterable[int]) -> np.ndarray:
    indices = list(indices)
    out = la.zeros((dim, len(indices)), True)
    for c, i in enumerate(indices):
        out[i, c] = Fraction(1)
    return out


def _sum_dims(dicts) -> dict:
    out: dict[int, int] = {}
    for d in dicts:
        for p, v in d.items():
            out[p] = out.get(p, 0) + v
    return out


def boundary_condition_B0(boundary: BoundaryYMComplex, extra_b: Sequence[int] = (),
                          zero: bool = False) -> dict:
    """The condition B = 0 (inclusion of the A row), checked sector by sector.

    ``extra_b`` adds zero-mode B-row basis vectors to the candidate; ``zero``
    replaces it by the zero subcomplex.
    """
    chain_ok = iso = strict = coh = True
    h_L, h_amb = [], []
    for mode in boundary.modes:
        cx = mode.complex
        cols = {}
        for p in cx.degrees:
            idx = [] if zero else list(mode.a_row.get(p, []))
            if p == 0 and not any(mode.k):
                idx += [mode.b_row[0][i] for i in extra_b]
            cols[p] = _columns(cx.dim(p), idx)
        h_amb.append(cohomology(cx).dims)
        try:
            L = LagrangianCandidate.inclusion(cx, cols)
        except StructuralError:
            chain_ok = iso = strict = coh = False
            continue
        if not L.map.is_chain_map():
            chain_ok = iso = strict = coh = False
            continue
        rep = is_lagrangian(L, mode.pairing)
        iso &= rep.isotropic
        strict &= rep.strict_self_perp
        coh &= rep.cohomology_lagrangian
        h_L.append(cohomology(L.map.source).dims)
    hl = _sum_dims(h_L) if chain_ok else None
    ha = _sum_dims(h_amb)
    return {
        "cutoff": boundary.cutoff,
        "chain_map": chain_ok,
        "isotropic": bool(iso),
        "strict_self_perp": bool(strict),
        "cohomology_lagrangian": bool(coh),
        "cohomology_dims_L": hl,
        "cohomology_dims_ambient": ha,
        "half_cohomology": bool(hl) and 2 * sum(hl.values()) == sum(ha.values()),
    }


def boundary_pairing_report(boundary: BoundaryYMComplex) -> dict:
    reps = [check_pairing(m.pairing) for m in boundary.modes]
    # the zero mode has d = 0 and is compatible with either sign
    signs = {r.d_sign for r, m in zip(reps, boundary.modes) if any(m.k)}
    return {
        "modes": len(reps),
        "skew": all(r.skew for r in reps),
        "d_compatible": all(r.d_compatible for r in reps),
        "d_sign": signs.pop() if len(signs) == 1 else None,
        "radical_dims": _sum_dims(r.radical_dims for r in reps),
    }


# --------------------------------------------------------------------------
# --------------------------------------------------------------------------
# the Dirac monopole
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class MonopoleField:
    charge: int

    def density(self, theta):
        """Coefficient of d(theta) ^ d(phi)."""
        return 0.5 * self.charge * np.sin(theta)


def _midpoint(F: MonopoleField, n: int) -> float:
    h_t = math.pi / n
    h_p = 2 * math.pi / n
    theta = (np.arange(n) + 0.5) * h_t
    # phi integral of a phi-independent density is exact with n midpoints
    col = math.fsum(F.density(theta) * h_t)
    return col * h_p * n / (2 * math.pi)


def magnetic_charge(F: MonopoleField, n: int = 64, method: str = "richardson") -> dict:
    """(1 / 2 pi) times the integral of F over S^2 by open product quadrature.

    ``midpoint`` is the plain product midpoint rule (second order).
    ``richardson`` combines midpoint grids n and 2n (fourth order); neither
    touches the poles.
    """
    if n < 8:
        raise ValueError("grid must have n >= 8")
    if method == "midpoint":
        value = _midpoint(F, n)
    elif method == "richardson":
        value = (4 * _midpoint(F, 2 * n) - _midpoint(F, n)) / 3
    else:
        raise ValueError(f"unknown quadrature method {method!r}")
    nearest = round(value)
    return {"charge": F.charge, "n": n, "method": method, "estimate": value,
            "error": abs(value - F.charge), "distance_to_integer": abs(value - nearest)}


def charge_convergence(m: int = 1, grids: Sequence[int] = (8, 16, 32, 64), method: str = "richardson") -> dict:
    F = MonopoleField(m)
    rows = [magnetic_charge(F, n, method) for n in grids]
    errs = [r["error"] for r in rows]
    slope = float(np.polyfit(np.log(list(grids)), np.log(errs), 1)[0]) if all(e > 0 for e in errs) else float("-inf")
    return {"charge": m, "method": method, "rows": [{"n": r["n"], "error": r["error"]} for r in rows], "slope": slope}


def closedness_residual(F: MonopoleField, samples: int = 12, h: float = 1e-4) -> float:
    """Largest |div B| for B = (m/2) x / |x|^3 on a shell, by central differences.

    This is dF = 0 for the 2-form on R^3 minus the origin; poles of the sphere
    chart are avoided by sampling interior angles only.
    """
    def field(x):
        r = np.linalg.norm(x)
        return 0.5 * F.charge * x / r**3

    worst = 0.0
    for i in range(samples):
        theta = (i + 0.5) * math.pi / samples
        phi = 2 * math.pi * i / samples
        x = np.array([math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta)])
        div = 0.0
        for j in range(3):
            e = np.zeros(3)
            e[j] = h
            div += (field(x + e)[j] - field(x - e)[j]) / (2 * h)
        worst = max(worst, abs(div))
    return worst


def dyonic_label(m: int, n: int, flux: float = 1.0) -> dict:
    """Magnetic charge m with a weight-n Wilson line; both checks are re-run."""
    from . import cellular, gauge

    mag = magnetic_charge(MonopoleField(m), 64)
    L, dg = gauge.coupled_dgla(gauge.abelian_line(), gauge.u1_semidirect_rep(n), "even",
                               cellular.unit_interval(1))
    w = gauge.wilson_loop(gauge.u1_loop(flux), gauge.u1_weight(n))
    expected = complex(math.cos(n * flux), math.sin(n * flux))
    kind = {(False, False): "trivial", (True, False): "monopole",
            (False, True): "wilson", (True, True): "dyonic"}[(m != 0, n != 0)]
    return {
        "charge": [m, n],
        "kind": kind,
        "magnetic": {"estimate": mag["estimate"], "ok": mag["error"] < 1e-6},
        "coupling": {"jacobi": dg["jacobi"]["ok"], "module": dg["module"]["ok"]},
        "wilson": {"flux": flux, "value": [w.real, w.imag], "expected": [expected.real, expected.imag],
                   "ok": abs(w - expected) < 1e-10},
        "passed": mag["error"] < 1e-6 and dg["passed"] and abs(w - expected) < 1e-10,
    }
