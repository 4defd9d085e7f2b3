"""Dense linear algebra over two scalar modes.

Exact mode stores ``fractions.Fraction`` entries in numpy ``object`` arrays and
uses Gaussian elimination. Numeric mode stores ``complex128``/``float64``
arrays and uses singular values with the cutoff ``eps * sigma_max``.
"""

from __future__ import annotations

import math
from fractions import Fraction
from numbers import Rational

import numpy as np

from .tolerance import get_eps


class ModeError(TypeError):
    """Raised when exact and numeric data are combined without promotion."""


def is_exact(a: np.ndarray) -> bool:
    return a.dtype == object


def _to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, (int, np.integer)):
        return Fraction(int(x))
    if isinstance(x, Rational):
        return Fraction(x.numerator, x.denominator)
    if isinstance(x, str):
        return Fraction(x)
    raise ModeError(f"cannot store {x!r} ({type(x).__name__}) exactly")


def exact(a, shape=None) -> np.ndarray:
    """Convert nested sequences of ints/Fractions/'p/q' strings to an exact array."""
    arr = np.array(a, dtype=object)
    if shape is not None:
        arr = arr.reshape(shape)
    out = np.empty(arr.shape, dtype=object)
    for idx, v in np.ndenumerate(arr):
        out[idx] = _to_fraction(v)
    return out


def numeric(a, shape=None) -> np.ndarray:
    arr = np.asarray(a)
    if arr.dtype == object:
        arr = np.array([complex(v) for v in arr.ravel()], dtype=complex).reshape(arr.shape)
    arr = arr.astype(complex if np.iscomplexobj(arr) else float)
    if shape is not None:
        arr = arr.reshape(shape)
    return arr


def promote(a: np.ndarray) -> np.ndarray:
    """Explicit exact -> numeric promotion."""
    return numeric(a) if is_exact(a) else a


def zeros(shape, exact_mode: bool) -> np.ndarray:
    if exact_mode:
        out = np.empty(shape, dtype=object)
        out.fill(Fraction(0))
        return out
    return np.zeros(shape, dtype=complex)


def identity(n: int, exact_mode: bool) -> np.ndarray:
    out = zeros((n, n), exact_mode)
    for i in range(n):
        out[i, i] = Fraction(1) if exact_mode else 1.0
    return out


def check_same_mode(*arrays: np.ndarray) -> bool:
    modes = {is_exact(a) for a in arrays}
    if len(modes) > 1:
        raise ModeError("exact and numeric arrays mixed; promote explicitly")
    return modes.pop() if modes else True


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    check_same_mode(a, b)
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"shape mismatch {a.shape} @ {b.shape}")
    if is_exact(a):
        if a.size == 0 or b.size == 0:
            return zeros((a.shape[0], b.shape[1]), True)
        return _exact_matmul(a, b)
    return a @ b


def _integer_scaled(a: np.ndarray) -> tuple[np.ndarray, int]:
    """(integer object array, common denominator) with a == ints / den."""
    flat = [_to_fraction(v) for v in a.ravel()]
    den = math.lcm(*(v.denominator for v in flat)) if flat else 1
    ints = np.array([v.numerator * (den // v.denominator) for v in flat], dtype=object)
    return ints.reshape(a.shape), den


_INT64_SAFE = 1 << 62


def _exact_matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Fraction arithmetic dominates the cost; multiply scaled integers instead
    ia, da = _integer_scaled(a)
    ib, db = _integer_scaled(b)
    ma = max((abs(v) for v in ia.ravel()), default=0)
    mb = max((abs(v) for v in ib.ravel()), default=0)
    if ma * mb * a.shape[1] < _INT64_SAFE:
        prod = (ia.astype(np.int64) @ ib.astype(np.int64)).astype(object)
    else:
        prod = np.dot(ia, ib)
    den = da * db
    out = np.empty(prod.shape, dtype=object)
    flat_out = out.ravel()
    for i, v in enumerate(prod.ravel()):
        flat_out[i] = Fraction(int(v), den)
    return out


def max_abs(a: np.ndarray) -> float:
    if a.size == 0:
        return 0.0
    if is_exact(a):
        return float(max(abs(v) for v in a.ravel()))
    return float(np.max(np.abs(a)))


def is_zero(a: np.ndarray, eps: float | None = None) -> bool:
    if is_exact(a):
        return all(v == 0 for v in a.ravel())
    return max_abs(a) <= (get_eps() if eps is None else eps)


def rref(a: np.ndarray) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form of an exact matrix."""
    m = [list(row) for row in a]
    rows, cols = a.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r >= rows:
            break
        p = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if p is None:
            continue
        m[r], m[p] = m[p], m[r]
        inv = 1 / m[r][c]
        m[r] = [v * inv if v else v for v in m[r]]
        # only the pivot row's nonzero columns change in the other rows
        nz = [j for j in range(c, cols) if m[r][j] != 0]
        prow = m[r]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                row = m[i]
                for j in nz:
                    row[j] = row[j] - f * prow[j]
        pivots.append(c)
        r += 1
    out = np.empty((rows, cols), dtype=object)
    for i in range(rows):
        for j in range(cols):
            out[i, j] = m[i][j]
    return out, pivots


def _numeric_cutoff(s: np.ndarray, eps: float | None) -> float:
    eps = get_eps() if eps is None else eps
    return eps * (s[0] if s.size else 0.0)


def rank(a: np.ndarray, eps: float | None = None) -> int:
    if 0 in a.shape:
        return 0
    if is_exact(a):
        return len(rref(a)[1])
    s = np.linalg.svd(a, compute_uv=False)
    if s[0] == 0:
        return 0
    return int(np.sum(s > _numeric_cutoff(s, eps)))


def nullspace(a: np.ndarray, eps: float | None = None) -> np.ndarray:
    """Columns form a basis of ker(a)."""
    rows, cols = a.shape
    if is_exact(a):
        if rows == 0:
            return identity(cols, True)
        r, pivots = rref(a)
        free = [c for c in range(cols) if c not in pivots]
        basis = zeros((cols, len(free)), True)
        for k, f in enumerate(free):
            basis[f, k] = Fraction(1)
            for i, p in enumerate(pivots):
                basis[p, k] = -r[i, f]
        return basis
    if rows == 0 or cols == 0:
        return np.eye(cols, dtype=a.dtype if np.iscomplexobj(a) else float)
    _, s, vh = np.linalg.svd(a)
    cutoff = _numeric_cutoff(s, eps) if s.size and s[0] > 0 else np.inf
    r = int(np.sum(s > cutoff)) if s.size and s[0] > 0 else 0
    return vh[r:].conj().T


def column_basis(a: np.ndarray, eps: float | None = None) -> np.ndarray:
    """Columns form a basis of the column space of a."""
    rows, cols = a.shape
    if is_exact(a):
        if cols == 0:
            return zeros((rows, 0), True)
        _, pivots = rref(a)
        return a[:, pivots]
    if rows == 0 or cols == 0:
        return np.zeros((rows, 0), dtype=a.dtype)
    u, s, _ = np.linalg.svd(a)
    if s[0] == 0:
        return np.zeros((rows, 0), dtype=a.dtype)
    r = int(np.sum(s > _numeric_cutoff(s, eps)))
    return u[:, :r]


def solve_in_span(basis: np.ndarray, v: np.ndarray, eps: float | None = None):
    """Coefficients x with basis @ x = v, or None if v is not in the span."""
    if is_exact(basis):
        aug = np.concatenate([basis, v.reshape(-1, 1)], axis=1)
        r, pivots = rref(aug)
        n = basis.shape[1]
        if n in pivots:
            return None
        x = zeros(n, True)
        for i, p in enumerate(pivots):
            x[p] = r[i, n]
        return x
    x, *_ = np.linalg.lstsq(basis, v, rcond=None)
    scale = max(1.0, max_abs(v))
    if max_abs(basis @ x - v) > (get_eps() if eps is None else eps) * scale * 10:
        return None
    return x


def block_diag(blocks: list[np.ndarray], exact_mode: bool) -> np.ndarray:
    rows = sum(b.shape[0] for b in blocks)
    cols = sum(b.shape[1] for b in blocks)
    out = zeros((rows, cols), exact_mode)
    r = c = 0
    for b in blocks:
        out[r : r + b.shape[0], c : c + b.shape[1]] = b
        r += b.shape[0]
        c += b.shape[1]
    return out


def format_entry(v):
    """JSON form of a scalar: 'p/q' strings for exact, [re, im] for numeric."""
    if isinstance(v, Fraction):
        return str(v)
    c = complex(v)
    return [c.real, c.imag]


def parse_entry(v, exact_mode: bool):
    if exact_mode:
        return _to_fraction(v)
    if isinstance(v, (list, tuple)):
        return complex(v[0], v[1])
    return complex(v)
