"""Graded vector spaces, cochain complexes, shifted pairings and Lagrangian checks.

Blocks are dense numpy arrays. A complex is *exact* when its blocks hold
``Fraction`` entries (dtype ``object``) and *numeric* otherwise; the two are
never combined without :func:`defectwb.linalg.promote`.

Pairing convention: a pairing of shift ``k`` pairs degree ``p`` with degree
``k - p`` through the block ``form[p]`` of shape ``(dim V_p, dim V_{k-p})``,
so that ``<x, y> = x^T form[p] y``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping

import numpy as np

from . import linalg as la


class StructuralError(ValueError):
    """Malformed graded data: shape mismatches, non-chain maps, bad degrees."""


# --------------------------------------------------------------------------
# graded spaces and maps
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class GradedVectorSpace:
    dims: Mapping[int, int]
    labels: Mapping[int, tuple[str, ...]] = field(default_factory=dict)

    def __post_init__(self):
        dims = {int(p): int(n) for p, n in self.dims.items() if int(n) != 0}
        for p, n in dims.items():
            if n < 0:
                raise StructuralError(f"negative dimension {n} in degree {p}")
        labels = {}
        for p in dims:
            lab = tuple(self.labels.get(p, ())) or tuple(f"b{p}_{i}" for i in range(dims[p]))
            if len(lab) != dims[p]:
                raise StructuralError(f"degree {p}: {len(lab)} labels for dimension {dims[p]}")
            if len(set(lab)) != len(lab):
                raise StructuralError(f"degree {p}: duplicate basis labels")
            labels[p] = lab
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "labels", labels)

    def dim(self, p: int) -> int:
        return self.dims.get(p, 0)

    @property
    def degrees(self) -> list[int]:
        return sorted(self.dims)

    @property
    def total_dim(self) -> int:
        return sum(self.dims.values())

    def to_dict(self) -> dict:
        return {
            "degrees": {str(p): self.dims[p] for p in self.degrees},
            "labels": {str(p): list(self.labels[p]) for p in self.degrees},
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GradedVectorSpace":
        dims = {int(p): int(n) for p, n in data["degrees"].items()}
        labels = {int(p): tuple(v) for p, v in data.get("labels", {}).items()}
        return cls(dims, labels)


def _check_block(block: np.ndarray, rows: int, cols: int, what: str):
    if block.ndim != 2 or block.shape != (rows, cols):
        raise StructuralError(f"{what}: block shape {block.shape}, expected {(rows, cols)}")


@dataclass(frozen=True)
class LinearMap:
    """Degree-``shift`` map; ``blocks[p]`` sends source degree p to target degree p+shift."""

    source: GradedVectorSpace
    target: GradedVectorSpace
    shift: int
    blocks: Mapping[int, np.ndarray]
    exact: bool = True

    def __post_init__(self):
        clean = {}
        for p, b in self.blocks.items():
            b = la.exact(b) if self.exact and b.dtype != object else b
            if not self.exact and b.dtype == object:
                raise la.ModeError("numeric LinearMap given exact block; promote first")
            _check_block(b, self.target.dim(p + self.shift), self.source.dim(p), f"degree {p}")
            if b.size:
                clean[int(p)] = b
        object.__setattr__(self, "blocks", clean)

    def block(self, p: int) -> np.ndarray:
        b = self.blocks.get(p)
        if b is None:
            return la.zeros((self.target.dim(p + self.shift), self.source.dim(p)), self.exact)
        return b

    def to_dict(self) -> dict:
        return {
            "source": self.source.to_dict(),
            "target": self.target.to_dict(),
            "shift": self.shift,
            "mode": "exact" if self.exact else "numeric",
            "blocks": {
                str(p): [[la.format_entry(v) for v in row] for row in self.blocks[p]]
                for p in sorted(self.blocks)
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "LinearMap":
        exact_mode = data.get("mode", "exact") == "exact"
        src = GradedVectorSpace.from_dict(data["source"])
        tgt = GradedVectorSpace.from_dict(data["target"])
        shift = int(data["shift"])
        blocks = {}
        for p, rows in data["blocks"].items():
            p = int(p)
            shape = (tgt.dim(p + shift), src.dim(p))
            vals = [la.parse_entry(v, exact_mode) for row in rows for v in row]
            arr = np.empty(shape, dtype=object if exact_mode else complex)
            arr[...] = np.array(vals, dtype=object).reshape(shape) if vals else arr
            blocks[p] = arr
        return cls(src, tgt, shift, blocks, exact_mode)


@dataclass(frozen=True)
class CochainComplex:
    space: GradedVectorSpace
    differential: LinearMap

    def __post_init__(self):
        if self.differential.shift != 1:
            raise StructuralError("differential must have degree +1")
        if self.differential.source != self.space or self.differential.target != self.space:
            raise StructuralError("differential must be an endomorphism of the space")

    @classmethod
    def build(cls, dims, diffs=None, labels=None, exact=True) -> "CochainComplex":
        space = GradedVectorSpace(dims, labels or {})
        d = LinearMap(space, space, 1, dict(diffs or {}), exact)
        return cls(space, d)

    @property
    def exact(self) -> bool:
        return self.differential.exact

    def d(self, p: int) -> np.ndarray:
        return self.differential.block(p)

    def dim(self, p: int) -> int:
        return self.space.dim(p)

    @property
    def degrees(self) -> list[int]:
        return self.space.degrees

    def to_dict(self) -> dict:
        out = self.space.to_dict()
        out["mode"] = "exact" if self.exact else "numeric"
        out["blocks"] = self.differential.to_dict()["blocks"]
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "CochainComplex":
        space = GradedVectorSpace.from_dict(data)
        d = LinearMap.from_dict(
            {"source": data, "target": data, "shift": 1, "mode": data.get("mode", "exact"),
             "blocks": data.get("blocks", {})}
        )
        return cls(space, d)

    def promoted(self) -> "CochainComplex":
        if not self.exact:
            return self
        blocks = {p: la.numeric(b) for p, b in self.differential.blocks.items()}
        return CochainComplex(self.space, LinearMap(self.space, self.space, 1, blocks, False))


@dataclass(frozen=True)
class ChainMap:
    source: CochainComplex
    target: CochainComplex
    blocks: Mapping[int, np.ndarray]

    def __post_init__(self):
        exact_mode = self.source.exact
        if self.target.exact != exact_mode:
            raise la.ModeError("chain map between exact and numeric complexes")
        lm = LinearMap(self.source.space, self.target.space, 0, dict(self.blocks), exact_mode)
        object.__setattr__(self, "blocks", lm.blocks)

    @property
    def exact(self) -> bool:
        return self.source.exact

    def block(self, p: int) -> np.ndarray:
        b = self.blocks.get(p)
        if b is None:
            return la.zeros((self.target.dim(p), self.source.dim(p)), self.exact)
        return b

    def chain_residuals(self) -> dict[int, float]:
        degs = sorted(set(self.source.degrees) | {q - 1 for q in self.target.degrees})
        out = {}
        for p in degs:
            lhs = la.matmul(self.block(p + 1), self.source.d(p))
            rhs = la.matmul(self.target.d(p), self.block(p))
            out[p] = la.max_abs(lhs - rhs)
        return out

    def is_chain_map(self) -> bool:
        return all(r <= (0 if self.exact else la.get_eps()) for r in self.chain_residuals().values())

    def require_chain_map(self):
        bad = {p: r for p, r in self.chain_residuals().items()
               if r > (0 if self.exact else la.get_eps())}
        if bad:
            raise StructuralError(f"not a chain map; residual in degrees {sorted(bad)}: {bad}")


# --------------------------------------------------------------------------
# constructions
# --------------------------------------------------------------------------


def direct_sum(*complexes: CochainComplex) -> CochainComplex:
    exact_mode = complexes[0].exact
    degs = sorted(set().union(*(c.degrees for c in complexes)))
    dims = {p: sum(c.dim(p) for c in complexes) for p in degs}
    labels = {}
    for p in degs:
        lab = []
        for i, c in enumerate(complexes):
            lab += [f"{i}:{s}" for s in c.space.labels.get(p, ())]
        labels[p] = tuple(lab)
    diffs = {p: la.block_diag([c.d(p) for c in complexes], exact_mode) for p in degs}
    return CochainComplex.build(dims, diffs, labels, exact_mode)


def shift(c: CochainComplex, n: int) -> CochainComplex:
    """c[n]: degree p of the result is degree p+n of c; differential scaled by (-1)^n."""
    sign = -1 if n % 2 else 1
    dims = {p - n: c.dim(p) for p in c.degrees}
    labels = {p - n: c.space.labels[p] for p in c.degrees}
    diffs = {p - n: sign * c.d(p) for p in c.degrees}
    return CochainComplex.build(dims, diffs, labels, c.exact)


def tensor(a: CochainComplex, b: CochainComplex, sep: str = "⊗") -> CochainComplex:
    """Tensor product with Koszul sign d(x⊗y) = dx⊗y + (-1)^|x| x⊗dy.

    Basis of degree n is ordered by (p, i, j) with p the degree of the left factor.
    """
    exact_mode = a.exact
    if b.exact != exact_mode:
        raise la.ModeError("tensor of exact and numeric complexes")
    index: dict[int, list[tuple[int, int, int]]] = {}
    for p in a.degrees:
        for q in b.degrees:
            for i in range(a.dim(p)):
                for j in range(b.dim(q)):
                    index.setdefault(p + q, []).append((p, i, j))
    pos = {n: {(p, i, j): k for k, (p, i, j) in enumerate(lst)} for n, lst in index.items()}
    dims = {n: len(lst) for n, lst in index.items()}
    labels = {
        n: tuple(f"{a.space.labels[p][i]}{sep}{b.space.labels[n - p][j]}" for p, i, j in lst)
        for n, lst in index.items()
    }
    one = Fraction(1) if exact_mode else 1.0
    diffs = {}
    for n, lst in index.items():
        if n + 1 not in index:
            continue
        m = la.zeros((dims[n + 1], dims[n]), exact_mode)
        for col, (p, i, j) in enumerate(lst):
            q = n - p
            da = a.d(p)
            for r in range(da.shape[0]):
                v = da[r, i]
                if v != 0:
                    m[pos[n + 1][(p + 1, r, j)], col] += v * one
            db = b.d(q)
            sgn = -1 if p % 2 else 1
            for r in range(db.shape[0]):
                v = db[r, j]
                if v != 0:
                    m[pos[n + 1][(p, i, r)], col] += sgn * v * one
        diffs[n] = m
    return CochainComplex.build(dims, diffs, labels, exact_mode)


def tensor_map(f: ChainMap, g: ChainMap, source: CochainComplex, target: CochainComplex) -> ChainMap:
    """f⊗g between tensor complexes built by :func:`tensor` (no signs: both maps have degree 0)."""
    a, b = f.source, g.source
    a2, b2 = f.target, g.target

    def index(x, y):
        out = {}
        for p in x.degrees:
            for q in y.degrees:
                for i in range(x.dim(p)):
                    for j in range(y.dim(q)):
                        out.setdefault(p + q, []).append((p, i, j))
        return out

    src_idx, tgt_idx = index(a, b), index(a2, b2)
    tgt_pos = {n: {k: r for r, k in enumerate(lst)} for n, lst in tgt_idx.items()}
    blocks = {}
    for n, lst in src_idx.items():
        m = la.zeros((target.dim(n), source.dim(n)), f.exact)
        for col, (p, i, j) in enumerate(lst):
            q = n - p
            fp, gq = f.block(p), g.block(q)
            for r in range(fp.shape[0]):
                if fp[r, i] == 0:
                    continue
                for s in range(gq.shape[0]):
                    if gq[s, j] != 0:
                        m[tgt_pos[n][(p, r, s)], col] += fp[r, i] * gq[s, j]
        blocks[n] = m
    return ChainMap(source, target, blocks)


def identity_map(c: CochainComplex) -> ChainMap:
    return ChainMap(c, c, {p: la.identity(c.dim(p), c.exact) for p in c.degrees})


def change_basis(c: CochainComplex, g: Mapping[int, np.ndarray]) -> CochainComplex:
    """Conjugate the differential by invertible per-degree matrices: d' = g_{p+1} d g_p^{-1}."""
    inv = {}
    for p in c.degrees:
        gp = g[p]
        if c.exact:
            aug = np.concatenate([gp, la.identity(c.dim(p), True)], axis=1)
            r, piv = la.rref(aug)
            if piv[: c.dim(p)] != list(range(c.dim(p))):
                raise StructuralError(f"change of basis in degree {p} is singular")
            inv[p] = r[:, c.dim(p):]
        else:
            inv[p] = np.linalg.inv(gp)
    diffs = {}
    for p in c.degrees:
        if c.dim(p + 1):
            diffs[p] = la.matmul(la.matmul(g[p + 1], c.d(p)), inv[p])
    return CochainComplex.build(c.space.dims, diffs, c.space.labels, c.exact)


# --------------------------------------------------------------------------
# d^2 and cohomology
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class DSquaredReport:
    ok: bool
    residuals: dict[int, float]
    offending: list[int]
    mode: str

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "mode": self.mode,
            "offending": self.offending,
            "residuals": {str(p): self.residuals[p] for p in sorted(self.residuals)},
        }


def check_d_squared(c: CochainComplex) -> DSquaredReport:
    tol = 0.0 if c.exact else la.get_eps()
    residuals = {}
    for p in c.degrees:
        if c.dim(p + 2) == 0:
            continue
        residuals[p] = la.max_abs(la.matmul(c.d(p + 1), c.d(p)))
    offending = [p for p, r in sorted(residuals.items()) if r > tol]
    return DSquaredReport(not offending, residuals, offending, "exact" if c.exact else "numeric")


@dataclass(frozen=True)
class CohomologyReport:
    dims: dict[int, int]
    representatives: dict[int, np.ndarray]

    def betti(self) -> tuple[int, ...]:
        if not self.dims:
            return ()
        lo, hi = min(self.dims), max(self.dims)
        return tuple(self.dims.get(p, 0) for p in range(lo, hi + 1))

    def to_dict(self) -> dict:
        return {"dims": {str(p): self.dims[p] for p in sorted(self.dims)}}


def _complement_in(kernel: np.ndarray, image: np.ndarray, exact_mode: bool) -> np.ndarray:
    """Columns of ``kernel`` (combinations) spanning a complement of span(image)."""
    if kernel.shape[1] == 0:
        return kernel
    if exact_mode:
        both = np.concatenate([image, kernel], axis=1)
        _, piv = la.rref(both)
        n_img = image.shape[1]
        return kernel[:, [c - n_img for c in piv if c >= n_img]]
    img = la.column_basis(image) if image.shape[1] else image
    proj = kernel - img @ (img.conj().T @ kernel) if img.shape[1] else kernel
    return la.column_basis(proj)


def cohomology(c: CochainComplex) -> CohomologyReport:
    dims, reps = {}, {}
    for p in c.degrees:
        ker = la.nullspace(c.d(p))
        img = c.d(p - 1)
        img = la.column_basis(img) if img.shape[1] else img
        rep = _complement_in(ker, img, c.exact)
        dims[p] = rep.shape[1]
        reps[p] = rep
    return CohomologyReport(dims, reps)


def _cohomology_coords(c: CochainComplex, coh: CohomologyReport, p: int, vecs: np.ndarray):
    """Coordinates of cocycles ``vecs`` (columns) in the representative basis of H^p."""
    rep = coh.representatives.get(p, la.zeros((c.dim(p), 0), c.exact))
    img = c.d(p - 1)
    img = la.column_basis(img) if img.shape[1] else img
    basis = np.concatenate([rep, img], axis=1)
    k = rep.shape[1]
    out = la.zeros((k, vecs.shape[1]), c.exact)
    for j in range(vecs.shape[1]):
        x = la.solve_in_span(basis, vecs[:, j])
        if x is None:
            raise StructuralError(f"degree {p}: vector is not a cocycle")
        out[:, j] = x[:k]
    return out


def induced_on_cohomology(f: ChainMap) -> dict[int, np.ndarray]:
    f.require_chain_map()
    hs, ht = cohomology(f.source), cohomology(f.target)
    out = {}
    for p in sorted(set(f.source.degrees) | set(f.target.degrees)):
        rs = hs.representatives.get(p, la.zeros((f.source.dim(p), 0), f.exact))
        out[p] = _cohomology_coords(f.target, ht, p, la.matmul(f.block(p), rs))
    return out


def is_quasi_iso(f: ChainMap) -> bool:
    for p, m in induced_on_cohomology(f).items():
        if m.shape[0] != m.shape[1] or la.rank(m) != m.shape[0]:
            return False
    return True


# --------------------------------------------------------------------------
# pairings
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ShiftedPairing:
    complex: CochainComplex
    shift: int
    form: Mapping[int, np.ndarray]

    def __post_init__(self):
        c = self.complex
        clean = {}
        for p, w in self.form.items():
            if c.exact and w.dtype != object:
                w = la.exact(w)
            if not c.exact and w.dtype == object:
                raise la.ModeError("numeric pairing given exact block")
            if w.ndim != 2 or w.shape != (c.dim(p), c.dim(self.shift - p)):
                raise StructuralError(
                    f"form block for degree {p} has shape {w.shape}, expected "
                    f"{(c.dim(p), c.dim(self.shift - p))}"
                )
            if w.size:
                clean[int(p)] = w
        object.__setattr__(self, "form", clean)

    @classmethod
    def from_half(cls, c: CochainComplex, k: int, half: Mapping[int, np.ndarray]) -> "ShiftedPairing":
        """Complete blocks for p <= k-p by graded skew-symmetry."""
        form = dict(half)
        for p, w in half.items():
            q = k - p
            if q != p:
                form[q] = -((-1) ** ((p * q) % 2)) * w.T
        return cls(c, k, form)

    def block(self, p: int) -> np.ndarray:
        w = self.form.get(p)
        if w is None:
            return la.zeros((self.complex.dim(p), self.complex.dim(self.shift - p)), self.complex.exact)
        return w

    def pair(self, p: int, x: np.ndarray, y: np.ndarray):
        return x @ self.block(p) @ y


@dataclass(frozen=True)
class PairingReport:
    skew: bool
    d_compatible: bool
    d_sign: int | None
    radical_dims: dict[int, int]
    cohomology_radical_dims: dict[int, int]
    skew_residual: float
    d_residual: float

    @property
    def degenerate(self) -> bool:
        return any(self.radical_dims.values())

    def to_dict(self) -> dict:
        return {
            "skew": self.skew,
            "d_compatible": self.d_compatible,
            "d_sign": self.d_sign,
            "radical_dims": {str(p): v for p, v in sorted(self.radical_dims.items())},
            "cohomology_radical_dims": {
                str(p): v for p, v in sorted(self.cohomology_radical_dims.items())
            },
            "skew_residual": self.skew_residual,
            "d_residual": self.d_residual,
        }


def _tol(exact_mode: bool) -> float:
    return 0.0 if exact_mode else la.get_eps()


def _radical(w: np.ndarray, exact_mode: bool) -> np.ndarray:
    """Left radical {x : x^T w = 0}."""
    if w.shape[1] == 0:
        return la.identity(w.shape[0], exact_mode)
    return la.nullspace(w.T)


def _d_residual(p: ShiftedPairing, sign: int) -> float:
    c, k = p.complex, p.shift
    worst = 0.0
    for deg in c.degrees:
        q = k - deg - 1
        if c.dim(q) == 0:
            continue
        lhs = la.matmul(c.d(deg).T, p.block(deg + 1))
        rhs = la.matmul(p.block(deg), c.d(q))
        s = sign * (-1 if deg % 2 else 1)
        worst = max(worst, la.max_abs(lhs + s * rhs))
    return worst


def check_pairing(p: ShiftedPairing) -> PairingReport:
    c, k = p.complex, p.shift
    tol = _tol(c.exact)
    skew_res = 0.0
    for deg in c.degrees:
        q = k - deg
        sgn = -((-1) ** ((deg * q) % 2))
        skew_res = max(skew_res, la.max_abs(p.block(deg) - sgn * p.block(q).T))
    d_sign, d_res = None, np.inf
    for sign in (1, -1):
        r = _d_residual(p, sign)
        if r < d_res:
            d_sign, d_res = sign, r
    d_ok = d_res <= tol
    radical = {deg: _radical(p.block(deg), c.exact).shape[1] for deg in c.degrees}
    coh_radical = {}
    if d_ok:
        coh = cohomology(c)
        for deg in c.degrees:
            r1 = coh.representatives[deg]
            r2 = coh.representatives.get(k - deg, la.zeros((c.dim(k - deg), 0), c.exact))
            wh = la.matmul(la.matmul(r1.T, p.block(deg)), r2)
            coh_radical[deg] = _radical(wh, c.exact).shape[1] if r1.shape[1] else 0
    return PairingReport(
        skew=skew_res <= tol,
        d_compatible=d_ok,
        d_sign=d_sign if d_ok else None,
        radical_dims=radical,
        cohomology_radical_dims=coh_radical,
        skew_residual=skew_res,
        d_residual=float(d_res),
    )


# --------------------------------------------------------------------------
# Lagrangians
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LagrangianCandidate:
    """A chain map into the ambient complex; isotropy is witnessed by the zero homotopy."""

    map: ChainMap

    @classmethod
    def inclusion(cls, ambient: CochainComplex, columns: Mapping[int, np.ndarray],
                  labels: Mapping[int, tuple[str, ...]] | None = None) -> "LagrangianCandidate":
        """Subspace spanned by ``columns[p]`` in each degree, with the restricted differential."""
        exact_mode = ambient.exact
        dims = {p: m.shape[1] for p, m in columns.items()}
        diffs = {}
        for p, m in columns.items():
            nxt = columns.get(p + 1)
            if m.shape[1] == 0:
                continue
            image = la.matmul(ambient.d(p), m)
            if nxt is None or nxt.shape[1] == 0:
                if not la.is_zero(image):
                    raise StructuralError(f"span is not a subcomplex at degree {p}")
                continue
            block = la.zeros((nxt.shape[1], m.shape[1]), exact_mode)
            for j in range(m.shape[1]):
                x = la.solve_in_span(nxt, image[:, j])
                if x is None:
                    raise StructuralError(f"span is not a subcomplex at degree {p}")
                block[:, j] = x
            diffs[p] = block
        sub = CochainComplex.build(dims, diffs, labels or {}, exact_mode)
        return cls(ChainMap(sub, ambient, dict(columns)))


def _require_target(L: LagrangianCandidate, p: ShiftedPairing):
    if L.map.target != p.complex:
        raise StructuralError("candidate does not map into the pairing's complex")
    L.map.require_chain_map()


def is_isotropic(L: LagrangianCandidate, p: ShiftedPairing) -> bool:
    _require_target(L, p)
    f, k = L.map, p.shift
    for deg in f.source.degrees:
        q = k - deg
        if f.source.dim(q) == 0:
            continue
        val = la.matmul(la.matmul(f.block(deg).T, p.block(deg)), f.block(q))
        if not la.is_zero(val, _tol(f.exact) or None):
            return False
    return True


def _same_subspace(a: np.ndarray, b: np.ndarray, exact_mode: bool) -> bool:
    ra, rb = la.rank(a), la.rank(b)
    if ra != rb:
        return False
    if ra == 0:
        return True
    return la.rank(np.concatenate([a, b], axis=1)) == ra


def _perp_report(images: dict[int, np.ndarray], form, k: int, dims: dict[int, int],
                 exact_mode: bool) -> tuple[bool, dict]:
    """Check image_p + radical_p == perp(image_{k-p}) in every degree."""
    ok = True
    detail = {}
    for deg, n in dims.items():
        if n == 0:
            continue
        w = form(deg)
        img = images.get(deg, la.zeros((n, 0), exact_mode))
        other = images.get(k - deg, la.zeros((w.shape[1], 0), exact_mode))
        rad = _radical(w, exact_mode)
        if other.shape[1]:
            perp = la.nullspace(la.matmul(w, other).T)
        else:
            perp = la.identity(n, exact_mode)
        lhs = np.concatenate([img, rad], axis=1)
        good = _same_subspace(lhs, perp, exact_mode)
        ok &= good
        detail[deg] = {
            "image": la.rank(img) if img.shape[1] else 0,
            "radical": rad.shape[1],
            "perp": perp.shape[1],
            "ok": good,
        }
    return ok, detail


@dataclass(frozen=True)
class LagrangianReport:
    isotropic: bool
    strict_self_perp: bool
    cohomology_lagrangian: bool
    degenerate: bool
    radical_dims: dict[int, int]
    image_dim: int
    ambient_dim: int
    radical_dim: int
    strict_detail: dict = field(default_factory=dict)
    cohomology_detail: dict = field(default_factory=dict)

    @property
    def half_dimension(self) -> bool:
        """dim L == (dim ambient - dim radical) / 2, counting the image mod radical."""
        return 2 * self.image_dim == self.ambient_dim - self.radical_dim

    def to_dict(self) -> dict:
        return {
            "isotropic": self.isotropic,
            "strict_self_perp": self.strict_self_perp,
            "cohomology_lagrangian": self.cohomology_lagrangian,
            "degenerate": self.degenerate,
            "radical_dims": {str(p): v for p, v in sorted(self.radical_dims.items())},
            "image_dim": self.image_dim,
            "ambient_dim": self.ambient_dim,
            "radical_dim": self.radical_dim,
            "half_dimension": self.half_dimension,
        }


def is_lagrangian(L: LagrangianCandidate, p: ShiftedPairing) -> LagrangianReport:
    iso = is_isotropic(L, p)
    f, c, k = L.map, p.complex, p.shift
    exact_mode = c.exact
    images = {deg: f.block(deg) for deg in c.degrees}
    strict, strict_detail = _perp_report(images, p.block, k, c.space.dims, exact_mode)
    radical = {deg: _radical(p.block(deg), exact_mode).shape[1] for deg in c.degrees}

    # image modulo radical, for the half-dimension identity
    img_mod = 0
    for deg in c.degrees:
        rad = _radical(p.block(deg), exact_mode)
        img = images[deg]
        both = np.concatenate([img, rad], axis=1) if img.shape[1] else rad
        img_mod += (la.rank(both) if both.shape[1] else 0) - rad.shape[1]

    coh_ok, coh_detail = _cohomology_lagrangian(f, p)
    return LagrangianReport(
        isotropic=iso,
        strict_self_perp=iso and strict,
        cohomology_lagrangian=iso and coh_ok,
        degenerate=any(radical.values()),
        radical_dims=radical,
        image_dim=img_mod,
        ambient_dim=c.space.total_dim,
        radical_dim=sum(radical.values()),
        strict_detail=strict_detail,
        cohomology_detail=coh_detail,
    )


def _cohomology_lagrangian(f: ChainMap, p: ShiftedPairing) -> tuple[bool, dict]:
    c, k = p.complex, p.shift
    if _d_residual(p, 1) > _tol(c.exact) and _d_residual(p, -1) > _tol(c.exact):
        return False, {"error": "pairing is not compatible with d"}
    hf = induced_on_cohomology(f)
    hc = cohomology(c)
    injective = all(la.rank(m) == m.shape[1] for m in hf.values() if m.shape[1])
    forms = {}
    for deg in c.degrees:
        r1 = hc.representatives[deg]
        r2 = hc.representatives.get(k - deg, la.zeros((c.dim(k - deg), 0), c.exact))
        forms[deg] = la.matmul(la.matmul(r1.T, p.block(deg)), r2)
    hdims = {deg: hc.dims[deg] for deg in c.degrees}

    def form(deg):
        if deg in forms:
            return forms[deg]
        return la.zeros((hdims.get(deg, 0), hdims.get(k - deg, 0)), c.exact)

    ok, detail = _perp_report(hf, form, k, hdims, c.exact)
    detail["injective"] = injective
    return ok and injective, detail
