"""Collapse profiles f_t, the fibrewise map F_t, and preimages under pi_t.

The profile vanishes on [0, t], is the identity on [2t, 3], and on [t, 2t] is
``2t * h((s - t) / t)`` where ``h`` is a convex blend of two C^1 Hermite-type
polynomials with h(0) = h'(0) = 0, h(1) = 1, h'(1) = 1/2. Both pieces satisfy
``h(u) <= (1 + u) h'(u)``, which makes f(t, s) non-increasing in t.

The one-dimensional model is M = R with D = {0}; pi_t acts on both rays through
the profile and is the identity for |x| >= 3.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from . import cellular
from .complexes import GradedVectorSpace, CochainComplex, is_quasi_iso

BISECTION_TOL = 1e-12


def _h_cubic(u):
    return 2.5 * u**2 - 1.5 * u**3


def _dh_cubic(u):
    return 5.0 * u - 4.5 * u**2


def _h_quartic(u):
    return 3.5 * u**3 - 2.5 * u**4


def _dh_quartic(u):
    return 10.5 * u**2 - 10.0 * u**3


@dataclass(frozen=True)
class CollapseProfile:
    t: float
    family_param: float = 0.0

    def __call__(self, s):
        return self.evaluate(s)

    def evaluate(self, s):
        s_arr = np.asarray(s, dtype=float)
        t, lam = self.t, self.family_param
        u = np.clip((s_arr - t) / t, 0.0, 1.0)
        mid = 2 * t * ((1 - lam) * _h_cubic(u) + lam * _h_quartic(u))
        out = np.where(s_arr <= t, 0.0, np.where(s_arr >= 2 * t, s_arr, mid))
        return float(out) if np.ndim(s) == 0 else out

    def derivative(self, s):
        s_arr = np.asarray(s, dtype=float)
        t, lam = self.t, self.family_param
        u = np.clip((s_arr - t) / t, 0.0, 1.0)
        mid = 2 * ((1 - lam) * _dh_cubic(u) + lam * _dh_quartic(u))
        out = np.where(s_arr <= t, 0.0, np.where(s_arr >= 2 * t, 1.0, mid))
        return float(out) if np.ndim(s) == 0 else out

    def inverse(self, y: float) -> float:
        """The unique s in (t, inf) with f(s) = y, for y > 0."""
        if y <= 0:
            raise ValueError("inverse is defined for positive values only")
        if y >= 2 * self.t:
            return y
        lo, hi = self.t, 2 * self.t
        while hi - lo > BISECTION_TOL:
            mid = 0.5 * (lo + hi)
            if self.evaluate(mid) < y:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    def table(self, n: int = 31, upper: float = 3.0) -> list[tuple[float, float]]:
        s = np.linspace(0.0, upper, n)
        return [(float(a), float(b)) for a, b in zip(s, self.evaluate(s))]


def make_profile(t: float, family_param: float = 0.0) -> CollapseProfile:
    if not (0 < t < 1):
        raise ValueError(f"t must lie in (0, 1), got {t}")
    if not (0 <= family_param <= 1):
        raise ValueError(f"family_param must lie in [0, 1], got {family_param}")
    return CollapseProfile(float(t), float(family_param))


def check_profile(profile: CollapseProfile, samples: int = 1000) -> dict:
    """Sampled verification of the profile contract; machine-precision equalities."""
    t = profile.t
    s = np.linspace(0.0, 3.0, samples)
    f = profile.evaluate(s)
    low = s <= t
    high = s >= 2 * t
    mid = (s > t) & (s < 2 * t)
    diffs = np.diff(f)
    return {
        "t": t,
        "samples": samples,
        "zero_on_[0,t]": bool(np.all(f[low] == 0.0)),
        "identity_on_[2t,3]": bool(np.all(f[high] == s[high])),
        "monotone": bool(np.all(diffs >= 0.0)),
        "strict_on_(t,2t)": bool(np.all(np.diff(f[mid]) > 0.0)),
        "endpoints": bool(f[0] == 0.0 and f[-1] == 3.0),
    }


# --------------------------------------------------------------------------
# normal bundle points
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class NormalPoint:
    base: str
    v: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "v", tuple(float(x) for x in self.v))
        if self.norm >= 3:
            raise ValueError(f"normal vector must have |v| < 3, got {self.norm}")

    @property
    def norm(self) -> float:
        return math.sqrt(sum(x * x for x in self.v))


def collapse_point(p: NormalPoint, profile: CollapseProfile) -> NormalPoint:
    n = p.norm
    if n == 0:
        return p
    fn = profile.evaluate(n)
    if fn == n:
        return p
    return NormalPoint(p.base, tuple(x * fn / n for x in p.v))


# --------------------------------------------------------------------------
# open sets in the 1D model
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class OpenSet1D:
    """Finite union of disjoint open intervals, sorted; touching ends stay separate."""

    intervals: tuple[tuple[float, float], ...]

    def __post_init__(self):
        ivs = sorted((float(a), float(b)) for a, b in self.intervals)
        for a, b in ivs:
            if not a < b:
                raise ValueError(f"empty or reversed interval ({a}, {b})")
        merged: list[tuple[float, float]] = []
        for a, b in ivs:
            if merged and a < merged[-1][1]:
                merged[-1] = (merged[-1][0], max(b, merged[-1][1]))
            else:
                merged.append((a, b))
        object.__setattr__(self, "intervals", tuple(merged))

    @classmethod
    def of(cls, *pairs: Sequence[float]) -> "OpenSet1D":
        return cls(tuple(tuple(p) for p in pairs))

    def contains(self, other: "OpenSet1D", eps: float = 0.0) -> bool:
        return all(
            any(a >= c - eps and b <= d + eps for c, d in self.intervals)
            for a, b in other.intervals
        )

    def disjoint(self, other: "OpenSet1D", eps: float = 0.0) -> bool:
        return all(
            b <= c + eps or d <= a + eps for a, b in self.intervals for c, d in other.intervals
        )

    def closure_avoids(self, lo: float, hi: float) -> bool:
        return all(b < lo or a > hi for a, b in self.intervals)

    def to_list(self) -> list[list[float]]:
        return [[a, b] for a, b in self.intervals]


def pi_t(x: float, profile: CollapseProfile) -> float:
    if abs(x) >= 3:
        return x
    return math.copysign(profile.evaluate(abs(x)), x) if x else 0.0


def _lower(a: float, profile: CollapseProfile) -> float:
    """inf of {x : pi_t(x) > a}."""
    if a > 0:
        return profile.inverse(a)
    if a == 0:
        return profile.t
    return -profile.inverse(-a)


def _upper(b: float, profile: CollapseProfile) -> float:
    """sup of {x : pi_t(x) < b}."""
    if b > 0:
        return profile.inverse(b)
    if b == 0:
        return -profile.t
    return -profile.inverse(-b)


def preimage_open(U: OpenSet1D, t: float, family_param: float = 0.0) -> OpenSet1D:
    profile = make_profile(t, family_param)
    pieces = []
    for a, b in U.intervals:
        lo, hi = _lower(a, profile), _upper(b, profile)
        if lo < hi:
            pieces.append((lo, hi))
    return OpenSet1D(tuple(pieces))


def locality_grid(t: float, count: int = 50, seed: int = 0) -> list[OpenSet1D]:
    """Random opens in (-3, 3) whose closure avoids [-2t, 2t]."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < count:
        k = int(rng.integers(1, 4))
        ivs = []
        for _ in range(k):
            side = rng.choice([-1.0, 1.0])
            a, b = np.sort(rng.uniform(2 * t + 1e-3, 3.0, size=2))
            if b - a < 1e-3:
                continue
            ivs.append((side * a, side * b) if side > 0 else (side * b, side * a))
        if not ivs:
            continue
        U = OpenSet1D(tuple(ivs))
        if U.closure_avoids(-2 * t, 2 * t):
            out.append(U)
    return out


def check_locality(t: float, opens: Iterable[OpenSet1D]) -> dict:
    rows = []
    for U in opens:
        pre = preimage_open(U, t)
        rows.append({"open": U.to_list(), "preimage": pre.to_list(), "equal": pre == U})
    return {"t": t, "count": len(rows), "all_equal": all(r["equal"] for r in rows), "opens": rows}


# --------------------------------------------------------------------------
# annuli and the blow-up boundary
# --------------------------------------------------------------------------


def annulus_equivalence(theory, big: tuple, small: tuple) -> bool:
    """Is restriction A_(r,R) -> A_(r',R') a quasi-isomorphism for ``theory``?"""
    a_big = cellular.AnnulusSet(*big)
    a_small = cellular.AnnulusSet(*small)
    if not (a_big.r <= a_small.r and a_small.R <= a_big.R):
        raise ValueError("radii must be nested: r <= r' < R' <= R")
    return is_quasi_iso(theory.restriction(a_big, a_small))


@dataclass(frozen=True)
class BlowupBoundary:
    ambient_dim: int
    codim: int
    complex: CochainComplex

    @property
    def space(self) -> GradedVectorSpace:
        return self.complex.space

    @property
    def description(self) -> str:
        flat = self.ambient_dim - self.codim
        sphere = f"S^{self.codim - 1}"
        return sphere if flat == 0 else f"{sphere} × R^{flat}"


def blowup_boundary(ambient_dim: int, codim: int) -> BlowupBoundary:
    """Cellular model of the sphere bundle S_1(D) ≅ S^{k-1} × R^{n-k} for flat D."""
    if codim < 1:
        raise ValueError("codimension must be >= 1")
    if ambient_dim < codim:
        raise ValueError("codimension exceeds ambient dimension")
    factors = [cellular.sphere(codim - 1)]
    factors += [cellular.unit_interval(1) for _ in range(ambient_dim - codim)]
    return BlowupBoundary(ambient_dim, codim, cellular.product(*factors))
