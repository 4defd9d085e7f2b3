"""Jets of a massless scalar near a point defect in the plane.

Near the circle r = R a jet is ``sum a[m, k] t^m e^{ik theta}`` with t = r - R.
The Laplacian becomes

    D = d_t^2 + g(t) d_t + g(t)^2 d_theta^2,    g(t) = 1 / (R + t),

with g expanded as the alternating geometric series ``(1/R) sum (-t/R)^j`` and
``g^2 = R^-2 sum (j + 1)(-t/R)^j``.  D preserves the mode k, so it is stored as
one block per k mapping orders 0..M to orders 0..M-2.  Output orders above M-2
depend on coefficients beyond the truncation and are only reported.

Rational R gives exact Fraction blocks.  D has real coefficients, so real and
imaginary parts never mix and exact jets carry rational coefficients per mode.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from math import comb
from typing import Iterable, Mapping

import numpy as np

from . import linalg as la
from .complexes import (
    CochainComplex,
    LagrangianCandidate,
    ShiftedPairing,
    check_pairing,
    is_isotropic,
    is_lagrangian,
)


class DomainError(ValueError):
    pass


def _radius(R):
    if isinstance(R, (int, Fraction, str)):
        R = Fraction(R)
        exact = True
    else:
        R = float(R)
        exact = False
    if R <= 0:
        raise DomainError(f"radius must be positive, got {R}")
    return R, exact


def _scalar(x, exact: bool):
    return Fraction(x) if exact else complex(x)


# --------------------------------------------------------------------------
# jets and the operator
# --------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FourierJet:
    R: object
    M: int
    K: int
    coeffs: np.ndarray  # shape (M + 1, 2K + 1); column k + K holds mode k
    exact_up_to: int | None = None

    def __post_init__(self):
        if self.coeffs.shape != (self.M + 1, 2 * self.K + 1):
            raise DomainError(f"coefficient table has shape {self.coeffs.shape}")
        if (Fraction(self.R) if la.is_exact(self.coeffs) else self.R) <= 0:
            raise DomainError("R must be positive")

    @property
    def exact(self) -> bool:
        return la.is_exact(self.coeffs)

    def mode(self, k: int) -> np.ndarray:
        return self.coeffs[:, k + self.K]

    def is_zero(self, up_to: int | None = None) -> bool:
        rows = self.coeffs if up_to is None else self.coeffs[: up_to + 1]
        return la.is_zero(rows)

    def to_dict(self) -> dict:
        return {
            "R": str(self.R),
            "M": self.M,
            "K": self.K,
            "exact_up_to": self.exact_up_to,
            "coeffs": [[la.format_entry(v) for v in row] for row in self.coeffs],
        }


def zero_jet(R, M: int, K: int) -> FourierJet:
    R, exact = _radius(R)
    return FourierJet(R, M, K, la.zeros((M + 1, 2 * K + 1), exact))


def jet_from_modes(R, M: int, K: int, modes: Mapping[int, Iterable]) -> FourierJet:
    """Build a jet from ``{k: [a_0, a_1, ...]}``; missing entries are 0."""
    R, exact = _radius(R)
    c = la.zeros((M + 1, 2 * K + 1), exact)
    for k, seq in modes.items():
        if abs(k) > K:
            raise DomainError(f"mode {k} exceeds K = {K}")
        for m, v in enumerate(seq):
            if m <= M:
                c[m, k + K] = _scalar(v, exact)
    return FourierJet(R, M, K, c)


def power_jet_coeffs(R, M: int, power: int) -> list:
    """Taylor coefficients of r^power about r = R (power may be negative)."""
    R, exact = _radius(R)
    out = []
    for m in range(M + 1):
        if power >= 0:
            c = comb(power, m)
        else:
            c = (-1) ** m * comb(-power + m - 1, m)
        out.append(_scalar(c, exact) * R ** (power - m))
    return out


def log_jet_coeffs(R, M: int) -> list:
    """Taylor coefficients of log(r / R) = log(1 + t / R)."""
    R, exact = _radius(R)
    out = [_scalar(0, exact)]
    for m in range(1, M + 1):
        out.append(_scalar((-1) ** (m + 1), exact) / (m * R**m))
    return out


def harmonic_jet(R, M: int, K: int, k: int) -> FourierJet:
    """Jet of r^{|k|} e^{ik theta}."""
    return jet_from_modes(R, M, K, {k: power_jet_coeffs(R, M, abs(k))})


def operator_block(R, M: int, k: int) -> np.ndarray:
    """Matrix of D on mode k: orders 0..M (columns) to orders 0..M-2 (rows)."""
    if M < 2:
        raise DomainError("M must be at least 2")
    R, exact = _radius(R)
    one = _scalar(1, exact)
    block = la.zeros((M - 1, M + 1), exact)
    for m in range(M - 1):
        block[m, m + 2] += one * (m + 2) * (m + 1)
        for j in range(m + 1):
            sign = one * (-1) ** j
            block[m, m - j + 1] += sign * (m - j + 1) / R ** (j + 1)
            block[m, m - j] -= sign * k * k * (j + 1) / R ** (j + 2)
    return block


@dataclass(frozen=True, eq=False)
class JetOperator:
    R: object
    M: int
    K: int
    blocks: dict  # k -> operator_block

    def matrix(self) -> np.ndarray:
        """Full matrix, mode-major ordering (k = -K..K, then order)."""
        return la.block_diag([self.blocks[k] for k in range(-self.K, self.K + 1)], self.exact)

    @property
    def exact(self) -> bool:
        return la.is_exact(self.blocks[0])

    def is_block_diagonal(self) -> bool:
        full = self.matrix()
        rows, cols = self.M - 1, self.M + 1
        for a in range(2 * self.K + 1):
            for b in range(2 * self.K + 1):
                if a != b and not la.is_zero(full[a * rows : (a + 1) * rows, b * cols : (b + 1) * cols]):
                    return False
        return True


def jet_operator(R, M: int, K: int) -> JetOperator:
    R_, _ = _radius(R)
    return JetOperator(R_, M, K, {k: operator_block(R, M, k) for k in range(-K, K + 1)})


def apply_D(j: FourierJet) -> FourierJet:
    """D applied modewise; orders above M - 2 are left at 0 and flagged via exact_up_to."""
    if j.M < 2:
        raise DomainError("M must be at least 2")
    out = la.zeros((j.M + 1, 2 * j.K + 1), j.exact)
    for k in range(-j.K, j.K + 1):
        block = operator_block(j.R, j.M, k)
        col = j.mode(k)
        if not j.exact:
            block = la.promote(block)
        out[: j.M - 1, k + j.K] = la.matmul(block, col.reshape(-1, 1)).ravel()
    return FourierJet(j.R, j.M, j.K, out, exact_up_to=j.M - 2)


# --------------------------------------------------------------------------
# kernel and surjectivity
# --------------------------------------------------------------------------


CLAIMED_KERNEL_DIM_PER_MODE = 1  # one free coefficient per mode, for comparison only


def kernel_report(R, K: int, M: int) -> dict:
    modes = []
    for k in range(-K, K + 1):
        block = operator_block(R, M, k)
        ker = la.nullspace(block)
        dim = ker.shape[1]
        # which low-order coefficients parameterise the kernel
        low = ker[:2, :]
        params_ok = la.rank(low) == dim
        t0 = ker[:1, :]
        modes.append({
            "k": k,
            "kernel_dim": dim,
            "parameterised_by_a0_a1": params_ok,
            "t0_projection_rank": la.rank(t0),
            "t0_projection_injective": la.rank(t0) == dim,
        })
    dims = [m["kernel_dim"] for m in modes]
    return {
        "R": str(R),
        "K": K,
        "M": M,
        "modes": modes,
        "kernel_dim_per_mode": sorted(set(dims)),
        "claimed_dim_per_mode": CLAIMED_KERNEL_DIM_PER_MODE,
        "matches_claimed_dim": all(d == CLAIMED_KERNEL_DIM_PER_MODE for d in dims),
    }


def surjectivity_of(block: np.ndarray) -> dict:
    r = la.rank(block)
    return {"rank": r, "target_dim": block.shape[0], "cokernel_dim": block.shape[0] - r,
            "surjective": r == block.shape[0]}


def surjectivity_report(R, K: int, M: int) -> dict:
    modes = []
    for k in range(-K, K + 1):
        row = surjectivity_of(operator_block(R, M, k))
        row["k"] = k
        modes.append(row)
    return {
        "R": str(R),
        "K": K,
        "M": M,
        "target_orders": M - 2,
        "surjective": all(m["surjective"] for m in modes),
        "cokernel_dim": sum(m["cokernel_dim"] for m in modes),
        "modes": modes,
    }


def annihilation_residual(j: FourierJet) -> object:
    """Largest |(D j)_{m,k}| over orders m <= M - 2 (a Fraction in exact mode)."""
    out = apply_D(j).coeffs[: j.M - 1]
    if j.exact:
        return max((abs(v) for v in out.ravel()), default=Fraction(0))
    return la.max_abs(out)


# --------------------------------------------------------------------------
# boundary circle form and Lagrangians
# --------------------------------------------------------------------------


def omega_D(k: int, l: int) -> int:
    """Presymplectic pairing of e^{ik theta} with e^{il theta}."""
    if l != -k or k == 0:
        return 0
    return 1 if k > 0 else -1


def omega_matrix(K: int) -> np.ndarray:
    n = 2 * K + 1
    w = la.zeros((n, n), True)
    for a in range(n):
        for b in range(n):
            w[a, b] = Fraction(omega_D(a - K, b - K))
    return w


def mode_labels(K: int) -> list[str]:
    return [f"e^{{{k}iθ}}" for k in range(-K, K + 1)]


def boundary_circle_pairing(K: int) -> ShiftedPairing:
    """omega_D as a 0-shifted pairing on the modes |k| <= K in degree 0."""
    c = CochainComplex.build({0: 2 * K + 1}, {}, {0: mode_labels(K)}, exact=True)
    return ShiftedPairing(c, 0, {0: omega_matrix(K)})


def validate_spectral_set(S: Iterable[int], K: int) -> frozenset:
    S = frozenset(int(k) for k in S)
    if 0 in S:
        raise DomainError("0 may not belong to a spectral set")
    for k in S:
        if abs(k) > K:
            raise DomainError(f"mode {k} exceeds K = {K}")
    for k in range(1, K + 1):
        if (k in S) == (-k in S):
            raise DomainError(f"exactly one of {k}, {-k} must belong to the spectral set")
    return S


def all_spectral_sets(K: int) -> list[frozenset]:
    out = []
    for signs in itertools.product((1, -1), repeat=K):
        out.append(frozenset(s * (i + 1) for i, s in enumerate(signs)))
    return out


def spectral_lagrangian_check(S: Iterable[int], K: int) -> dict:
    """Modes outside S (and nonzero) span an isotropic half of the nonconstant sector."""
    S = validate_spectral_set(S, K)
    pairing = boundary_circle_pairing(K)
    keep = [k for k in range(-K, K + 1) if k != 0 and k not in S]
    cols = la.zeros((2 * K + 1, len(keep)), True)
    for c, k in enumerate(keep):
        cols[k + K, c] = Fraction(1)
    L = LagrangianCandidate.inclusion(pairing.complex, {0: cols})
    rep = is_lagrangian(L, pairing)
    return {
        "S": sorted(S),
        "subspace_modes": keep,
        "isotropic": rep.isotropic,
        "maximal_mod_radical": rep.strict_self_perp,
        "half_of_nonconstant": len(keep) * 2 == 2 * K,
        "radical_dim": rep.radical_dim,
        "passed": rep.isotropic and rep.strict_self_perp and len(keep) == K,
    }


def omega_D_report(K: int) -> dict:
    p = boundary_circle_pairing(K)
    rep = check_pairing(p)
    rad = la.nullspace(omega_matrix(K))
    const = la.zeros((2 * K + 1, 1), True)
    const[K, 0] = Fraction(1)
    radical_is_constant = rad.shape[1] == 1 and la.rank(np.concatenate([rad, const], axis=1)) == 1
    return {
        "K": K,
        "skew": rep.skew,
        "radical_dim": int(rad.shape[1]),
        "radical_is_constant_mode": radical_is_constant,
    }


def wronskian_matrix(R, K: int) -> np.ndarray:
    """Boundary form on Cauchy data (a0, a1) per mode: R (a0 b1 - a1 b0) for l = -k.

    Order of coordinates: for k = -K..K, (a0_k, a1_k).
    """
    R, exact = _radius(R)
    n = 2 * K + 1
    w = la.zeros((2 * n, 2 * n), exact)
    for a in range(n):
        b = 2 * K - a  # index of mode -k
        w[2 * a, 2 * b + 1] = _scalar(1, exact) * R
        w[2 * a + 1, 2 * b] = -_scalar(1, exact) * R
    return w


def harmonic_member(j: FourierJet) -> bool:
    """Does the jet lie in the span of the jets of r^{|k|} e^{ik theta}?"""
    for k in range(-j.K, j.K + 1):
        basis = np.array(power_jet_coeffs(j.R, j.M, abs(k)), dtype=object if j.exact else complex)
        col = j.mode(k)
        if la.solve_in_span(basis.reshape(-1, 1), col) is None:
            return False
    return True


def harmonic_lagrangian(K: int, M: int, R) -> dict:
    R_, exact = _radius(R)
    jets = [harmonic_jet(R, M, K, k) for k in range(-K, K + 1)]
    residuals = [annihilation_residual(j) for j in jets]
    in_kernel = all(r == 0 for r in residuals) if exact else all(r < 1e-9 for r in residuals)
    # t^0 projection: column per jet
    t0 = la.zeros((2 * K + 1, 2 * K + 1), exact)
    for c, j in enumerate(jets):
        t0[:, c] = j.coeffs[0]
    t0_dim = la.rank(t0)
    pairing = boundary_circle_pairing(K)
    t0_exact = t0 if exact else None
    if t0_exact is not None:
        cand = LagrangianCandidate.inclusion(pairing.complex, {0: t0_exact})
        t0_isotropic = is_isotropic(cand, pairing)
    else:
        w = la.promote(omega_matrix(K))
        t0_isotropic = la.is_zero(t0.T @ w @ t0)
    # Cauchy data (a0, a1) per mode and the Wronskian form
    cd = la.zeros((2 * (2 * K + 1), 2 * K + 1), exact)
    for c, j in enumerate(jets):
        for k in range(-K, K + 1):
            cd[2 * (k + K), c] = j.coeffs[0, k + K]
            cd[2 * (k + K) + 1, c] = j.coeffs[1, k + K]
    W = wronskian_matrix(R, K)
    wr = la.matmul(la.matmul(cd.T, W), cd)
    wronskian_isotropic = la.is_zero(wr)
    return {
        "K": K,
        "M": M,
        "R": str(R_),
        "dimension": len(jets),
        "in_kernel": in_kernel,
        "t0_image_dim": t0_dim,
        "t0_image_is_all_modes": t0_dim == 2 * K + 1,
        "omega_D_isotropic_after_t0": bool(t0_isotropic),
        "wronskian_isotropic": bool(wronskian_isotropic),
        "wronskian_lagrangian": bool(wronskian_isotropic) and 2 * len(jets) == W.shape[0]
        and la.rank(W) == W.shape[0],
    }


def scaling_check(R, M: int, k: int, lam=2) -> dict:
    """D_{lam R} S = lam^-2 S D_R with S: a_m -> lam^-m a_m."""
    R_, exact = _radius(R)
    lam = _scalar(lam, exact)
    big = operator_block(R_ * lam, M, k)
    small = operator_block(R_, M, k)
    s_in = la.zeros((M + 1, M + 1), exact)
    for m in range(M + 1):
        s_in[m, m] = lam ** (-m)
    s_out = s_in[: M - 1, : M - 1]
    lhs = la.matmul(big, s_in)
    rhs = la.matmul(s_out, small) * (lam ** (-2))
    res = la.max_abs(lhs - rhs)
    return {"R": str(R_), "M": M, "k": k, "lambda": str(lam), "residual": res, "ok": res <= 1e-12}


def defect_summary(R, K: int, M: int) -> dict:
    """Everything the CLI reports for one radius/truncation."""
    kr = kernel_report(R, K, M)
    sr = surjectivity_report(R, K, M)
    residuals = {k: annihilation_residual(harmonic_jet(R, M, K, k)) for k in range(-K, K + 1)}
    log_res = annihilation_residual(jet_from_modes(R, M, K, {0: log_jet_coeffs(R, M)}))
    K_spec = min(K, 4)
    spectral = [spectral_lagrangian_check(S, K_spec) for S in all_spectral_sets(K_spec)]
    return {
        "surjectivity": {"surjective": sr["surjective"], "cokernel_dim": sr["cokernel_dim"]},
        "kernel_dims": {str(m["k"]): m["kernel_dim"] for m in kr["modes"]},
        "kernel_matches_claimed_dim": kr["matches_claimed_dim"],
        "harmonic_residuals_zero": all(r == 0 for r in residuals.values()),
        "log_residual_zero": log_res == 0,
        "omega_D": omega_D_report(K),
        "spectral_sets_checked": len(spectral),
        "spectral_all_pass": all(s["passed"] for s in spectral),
        "harmonic_lagrangian": harmonic_lagrangian(K, M, R),
    }
