"""Scenario files, the operation registry, and the suite runner.

A scenario file is TOML (or JSON with the same shape): one table per scenario,
keyed by its name.  Reserved keys are ``op``, ``expect`` ("pass" or "fail"),
``expected`` (golden values by dotted payload path), ``tolerance`` and
``description``; every other key is a parameter of the named operation.
"""

from __future__ import annotations

import json
import math
import re
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

import numpy as np
import tomli

from . import SCHEMA_VERSION, __version__

RESERVED = {"op", "expect", "expected", "tolerance", "description"}


class UsageError(ValueError):
    """Malformed configuration; maps to exit code 2."""


# --------------------------------------------------------------------------
# parameters
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Param:
    kind: str
    default: Any = None
    choices: tuple | None = None

    def coerce(self, value, where: str):
        try:
            out = _COERCE[self.kind](value)
        except (TypeError, ValueError, ZeroDivisionError) as exc:
            raise UsageError(f"{where}: expected {self.kind}, got {value!r}") from exc
        if self.choices is not None and out not in self.choices:
            raise UsageError(f"{where}: {out!r} not one of {list(self.choices)}")
        return out


def _int(v):
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError
    return v


def _real(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError
    return float(v)


def _rational(v):
    if isinstance(v, bool) or isinstance(v, float):
        raise TypeError
    return Fraction(v)


def _str(v):
    if not isinstance(v, str):
        raise TypeError
    return v


def _bool(v):
    if not isinstance(v, bool):
        raise TypeError
    return v


def _list(conv):
    def go(v):
        if not isinstance(v, list):
            raise TypeError
        return [conv(x) for x in v]
    return go


_COERCE: dict[str, Callable] = {
    "int": _int,
    "real": _real,
    "rational": _rational,
    "str": _str,
    "bool": _bool,
    "list[int]": _list(_int),
    "list[real]": _list(_real),
    "list[rational]": _list(_rational),
    "list[str]": _list(_str),
    "json": lambda v: v,
}


# --------------------------------------------------------------------------
# JSON normalisation
# --------------------------------------------------------------------------


def jsonable(x):
    """Plain JSON data; Fractions become strings, complex numbers [re, im]."""
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items() if not _opaque(v)}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return jsonable(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        return v if math.isfinite(v) else str(v)
    if isinstance(x, (complex, np.complexfloating)):
        return [jsonable(x.real), jsonable(x.imag)]
    if x is None or isinstance(x, str):
        return x
    return str(x)


def _opaque(v) -> bool:
    # chain maps and similar objects are not report material
    return hasattr(v, "__dataclass_fields__") and not hasattr(v, "to_dict")


def canonical_json(data) -> str:
    return json.dumps(jsonable(data), sort_keys=True, indent=2, ensure_ascii=False) + "\n"


# --------------------------------------------------------------------------
# operations
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Operation:
    name: str
    fn: Callable[..., tuple[bool, dict]]
    params: dict[str, Param]
    summary: str


OPS: dict[str, Operation] = {}


def operation(name: str, summary: str, **params: Param):
    def register(fn):
        OPS[name] = Operation(name, fn, params, summary)
        return fn
    return register


DEFAULT_QUADRUPLES = [
    ["1/4", "11/4", "1/2", "5/2"],
    ["1/4", "11/4", "1/4", "11/4"],
    ["1/2", "2", "3/4", "7/4"],
    ["1", "2", "1", "3/2"],
    ["1/4", "1", "1/2", "3/4"],
    ["1/2", "5/2", "1", "2"],
    ["1/4", "3/2", "1/4", "1"],
    ["3/4", "11/4", "1", "5/2"],
    ["1/2", "3/2", "3/4", "5/4"],
    ["1", "11/4", "3/2", "9/4"],
]


@operation("collapse.profile", "profile contract on a sample grid",
           t=Param("real", 0.25), family_param=Param("real", 0.0), samples=Param("int", 1000))
def _op_profile(t, family_param, samples):
    from . import collapse
    rep = collapse.check_profile(collapse.make_profile(t, family_param), samples)
    ok = all(v for k, v in rep.items() if isinstance(v, bool))
    return ok, rep


@operation("collapse.locality", "pushed-forward defect line equals the defect-free line away from D",
           t=Param("real", 0.25), count=Param("int", 50), seed=Param("int", 0),
           lminus=Param("str", "q"), lplus=Param("str", "p"), cap=Param("int", 6))
def _op_locality(t, count, seed, lminus, lplus, cap):
    from . import collapse, fact_line
    opens = collapse.locality_grid(t, count, seed)
    pre = collapse.check_locality(t, opens)
    V = fact_line.SymplecticVS.darboux(1)
    P = fact_line.build_defect_prefact(V, lminus, lplus, t=t, cap=cap)
    line = fact_line.check_locality(P, t, opens)
    ok = pre["all_equal"] and line["passed"]
    return ok, {"t": t, "count": len(opens), "preimages_equal": pre["all_equal"],
                "assignment_equal": line["passed"],
                "failing_opens": [r["open"] for r in line["opens"] if not (r["spaces_equal"] and r["maps_equal"])]}


@operation("collapse.annulus", "restriction between nested annuli is a quasi-isomorphism",
           theory=Param("str", "abelian_cs", ("abelian_cs", "abelian_bf", "massive")),
           quadruples=Param("json", DEFAULT_QUADRUPLES))
def _op_annulus(theory, quadruples):
    from . import cellular, collapse
    T = cellular.THEORIES[theory]()
    rows = []
    for q in quadruples:
        if not (isinstance(q, list) and len(q) == 4):
            raise UsageError(f"quadruples: each entry must be [r, R, r', R'], got {q!r}")
        big, small = (Fraction(q[0]), Fraction(q[1])), (Fraction(q[2]), Fraction(q[3]))
        rows.append({"radii": [str(x) for x in big + small],
                     "quasi_iso": collapse.annulus_equivalence(T, big, small)})
    return all(r["quasi_iso"] for r in rows), {"theory": theory, "rows": rows}


@operation("collapse.blowup", "cohomology of the sphere-bundle boundary of the real blow-up",
           ambient_dim=Param("int", 3), codim=Param("int", 2))
def _op_blowup(ambient_dim, codim):
    from . import collapse
    from .complexes import cohomology
    b = collapse.blowup_boundary(ambient_dim, codim)
    dims = {p: v for p, v in cohomology(b.complex).dims.items() if v}
    expected = {0: 2} if codim == 1 else {0: 1, codim - 1: 1}
    return dims == expected, {"description": b.description, "betti": dims, "expected": expected}


def _darboux_for(v_dim: int):
    from . import fact_line
    if v_dim < 2 or v_dim % 2:
        raise UsageError(f"v_dim must be a positive even integer, got {v_dim}")
    return fact_line.SymplecticVS.darboux(v_dim // 2)


def _labels(spec: str) -> list[str]:
    return [s.strip() for s in spec.split(",") if s.strip()]


@operation("fact_line.axioms", "prefactorization axioms for the Weyl/Fock defect line",
           v_dim=Param("int", 2), lminus=Param("str", "q"), lplus=Param("str", "p"),
           depth=Param("int", 3), cap=Param("int", 6), hbar=Param("rational", Fraction(1)),
           flip=Param("bool", False), defect=Param("bool", True))
def _op_axioms(v_dim, lminus, lplus, depth, cap, hbar, flip, defect):
    from . import fact_line
    V = _darboux_for(v_dim)
    if defect:
        P = fact_line.build_defect_prefact(V, _labels(lminus), _labels(lplus), hbar=hbar, cap=cap, flip=flip)
    else:
        P = fact_line.weyl_only_prefact(V, hbar=hbar, cap=cap)
    rep = fact_line.check_prefact_axioms(P, depth).to_dict()
    return rep["passed"], rep


@operation("fact_line.hbar_expansion", "ab - ba = hbar {a, b} + O(hbar^2) on monomial pairs",
           v_dim=Param("int", 2), max_degree=Param("int", 4))
def _op_hbar(v_dim, max_degree):
    from . import fact_line
    V = _darboux_for(v_dim)
    A = fact_line.WeylAlgebra(V, hbar=1, cap=max_degree + 2)
    mons = [m for d in range(max_degree + 1) for m in fact_line.monomials(A.n, d)]
    checked, failures = 0, []
    for a in mons:
        for b in mons:
            if sum(a) + sum(b) > max_degree:
                continue
            checked += 1
            r = fact_line.hbar_expansion_check(A.monomial(a), A.monomial(b))
            if not r["ok"]:
                failures.append([r["a"], r["b"]])
    return not failures, {"pairs": checked, "failures": failures[:5]}


@operation("fact_line.associativity", "Moyal-Weyl product associativity on monomial triples",
           v_dim=Param("int", 2), cap=Param("int", 6))
def _op_assoc(v_dim, cap):
    from . import fact_line
    A = fact_line.WeylAlgebra(_darboux_for(v_dim), hbar=1, cap=cap)
    rep = fact_line.weyl_associativity(A)
    return rep["ok"], rep


@operation("scalar.summary", "jet operator, kernel, omega_D and spectral Lagrangians",
           radius=Param("rational", Fraction(1)), modes=Param("int", 5), order=Param("int", 8))
def _op_scalar(radius, modes, order):
    from . import scalar_defect
    s = scalar_defect.defect_summary(radius, modes, order)
    ok = (s["surjectivity"]["surjective"] and s["harmonic_residuals_zero"]
          and s["omega_D"]["skew"] and s["omega_D"]["radical_is_constant_mode"]
          and s["spectral_all_pass"])
    return ok, s


@operation("gauge.bf_lagrangians", "graph and subalgebra Lagrangians in g + g*",
           algebra=Param("str", "sl2", ("sl2", "abelian1", "abelian2", "abelian3", "heisenberg")),
           s_values=Param("list[rational]", [Fraction(x) for x in (-2, -1, 0, 1, 2)]),
           subalgebras=Param("list[str]", ["zero", "cartan", "borel", "full"]))
def _op_bf(algebra, s_values, subalgebras):
    from . import gauge
    lie = gauge.get_algebra(algebra)
    named = gauge.named_subalgebras(lie)
    rows = []
    if lie.kappa is not None:
        for s in s_values:
            r = gauge.bf_lagrangian_graph(s, lie)
            rows.append({"family": "graph", "s": str(s), "dim": r["dim"], "strict_self_perp": r["strict_self_perp"]})
    for name in subalgebras:
        if name not in named:
            raise UsageError(f"subalgebras: {name!r} not one of {sorted(named)}")
        r = gauge.bf_lagrangian_subalgebra(lie, named[name])
        rows.append({"family": "subalgebra", "l": name, "dim": r["dim"], "strict_self_perp": r["strict_self_perp"]})
    ok = all(r["strict_self_perp"] and r["dim"] == lie.dim for r in rows)
    return ok, {"algebra": algebra, "rows": rows}


def _sl2_segments(segments):
    if not segments:
        return [([0.3, 0.5, 0.0], math.pi), ([0.1, 0.0, 0.4], math.pi)]
    out = []
    for s in segments:
        if not isinstance(s, dict) or set(s) != {"coeffs", "length"}:
            raise UsageError("segments: each entry needs exactly 'coeffs' and 'length'")
        out.append((s["coeffs"], s["length"]))
    return out


@operation("gauge.monodromy", "holonomy, gauge-invariant conjugacy data and refinement order",
           algebra=Param("str", "sl2", ("sl2", "heisenberg")), segments=Param("json", []),
           flux=Param("real", 0.7), gauge_trials=Param("int", 5), seed=Param("int", 0))
def _op_monodromy(algebra, segments, flux, gauge_trials, seed):
    from . import gauge
    lie = gauge.get_algebra(algebra)
    c = gauge.LoopConnection(tuple(_sl2_segments(segments)), lie)
    g = gauge.monodromy(c)
    inv = np.array(gauge.conjugacy_invariants(g))
    rng = np.random.default_rng(seed)
    mats = gauge.LoopConnection(tuple(c.matrices()))
    drift = 0.0
    for _ in range(gauge_trials):
        x = rng.normal(size=lie.dim) * 0.5
        h = gauge.expm(sum(x[i] * lie.realization[i] for i in range(lie.dim)))
        gi = np.array(gauge.conjugacy_invariants(gauge.monodromy(mats.gauge(h))))
        drift = max(drift, float(np.max(np.abs(gi - inv))))
    ab = gauge.monodromy(gauge.u1_loop(flux))[0, 0]
    ab_err = abs(ab - complex(math.cos(flux), math.sin(flux)))
    conv = gauge.refinement_convergence(gauge.default_smooth_connection)
    ok = ab_err < 1e-10 and drift < 1e-8 and conv["slope"] >= 1.9
    return ok, {
        "monodromy": g, "invariants": inv, "gauge_drift": drift,
        "abelian": {"flux": flux, "error": ab_err, "ok": ab_err < 1e-10},
        "refinement": conv,
    }


@operation("gauge.wilson", "u(1) Wilson loop in weight n",
           weight=Param("int", 3), flux=Param("real", 0.7), segments=Param("int", 4))
def _op_wilson(weight, flux, segments):
    from . import gauge
    c = gauge.u1_loop(flux, segments)
    w = gauge.wilson_loop(c, gauge.u1_weight(weight))
    w1 = gauge.wilson_loop(c, gauge.u1_weight(1))
    exact = complex(math.cos(weight * flux), math.sin(weight * flux))
    err_pow, err_exact = abs(w - w1**weight), abs(w - exact)
    return err_pow < 1e-10 and err_exact < 1e-10, {
        "weight": weight, "flux": flux, "value": w, "power_error": err_pow, "exact_error": err_exact,
    }


@operation("gauge.coupled", "coupled dg Lie algebra (cochains x (g + W)) checks",
           algebra=Param("str", "u1", ("u1", "sl2")), rep=Param("str", "default", ("default", "none")),
           weight=Param("int", 1), parity=Param("str", "even", ("even", "odd")), cells=Param("int", 1),
           base=Param("str", "interval", ("interval", "circle")))
def _op_coupled(algebra, rep, weight, parity, cells, base):
    """``rep = "none"`` couples no matter fields (W = 0)."""
    from . import cellular, gauge
    cx = cellular.unit_interval(cells) if base == "interval" else cellular.circle(max(cells, 2))
    if algebra == "u1":
        lie, mats = gauge.abelian_line(), gauge.u1_semidirect_rep(weight)
    else:
        lie, mats = gauge.sl2(), gauge.standard_rep_sl2()
    if rep == "none":
        mats = []
    _, rep_out = gauge.coupled_dgla(lie, mats, parity, cx)
    return rep_out["passed"], rep_out


@operation("ym.complex", "first-order YM complex: d^2, decoupling, projector, zero mode",
           cutoffs=Param("list[int]", [1, 2]),
           couplings=Param("list[rational]", [Fraction(x) for x in (0, 1, -1, 2)]))
def _op_ym(cutoffs, couplings):
    from . import ym
    rows = []
    for cut in cutoffs:
        for c in couplings:
            r = ym.build_ym_complex(cut, c)
            rows.append({k: r[k] for k in ("cutoff", "coupling", "modes", "dims", "d_squared_zero", "rows_decouple")})
    proj = ym.projector_checks()
    split_ok = all(r["rows_decouple"] == (Fraction(r["coupling"]) == 0) for r in rows)
    zero = ym.zero_mode_cohomology(0)
    ok = all(r["d_squared_zero"] for r in rows) and split_ok and proj["idempotent"] and proj["star_fixes_image"]
    return ok, {"rows": rows, "projector": proj, "zero_mode_cohomology_c0": zero}


@operation("ym.boundary", "B = 0 boundary condition on the T^3 boundary model",
           cutoff=Param("int", 1), extra_b=Param("list[int]", []))
def _op_ym_boundary(cutoff, extra_b):
    from . import ym
    b = ym.build_boundary_complex(cutoff)
    rep = ym.boundary_condition_B0(b, extra_b)
    pr = ym.boundary_pairing_report(b)
    return rep["chain_map"] and rep["isotropic"], {"pairing": pr, "candidate": rep}


@operation("ym.monopole", "magnetic charge of the Dirac monopole by open quadrature",
           charge=Param("int", 1), grid=Param("int", 64),
           method=Param("str", "richardson", ("richardson", "midpoint")))
def _op_monopole(charge, grid, method):
    from . import ym
    F = ym.MonopoleField(charge)
    est = ym.magnetic_charge(F, grid, method)
    payload = {"estimate": est, "closedness_residual": ym.closedness_residual(F)}
    ok = est["error"] < 1e-6
    if charge:
        conv = ym.charge_convergence(charge, method=method)
        payload["convergence"] = conv
        ok = ok and conv["slope"] <= -1.9
    return ok, payload


@operation("ym.dyonic", "dyonic defect with charge (m, n)",
           m=Param("int", 1), n=Param("int", 2), flux=Param("real", 1.0))
def _op_dyonic(m, n, flux):
    from . import ym
    d = ym.dyonic_label(m, n, flux)
    return d["passed"], d


# --------------------------------------------------------------------------
# scenarios
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class Scenario:
    name: str
    op: str
    params: dict
    expect: str = "pass"
    expected: dict = field(default_factory=dict)
    tolerance: float = 1e-9
    description: str = ""
    source: str = ""


@dataclass
class Report:
    name: str
    op: str
    passed: bool
    outcome: str
    expect: str
    payload: dict
    duration: float = 0.0

    def canonical(self) -> dict:
        """Report without timing, so reruns compare byte for byte."""
        return {"name": self.name, "op": self.op, "passed": self.passed, "outcome": self.outcome,
                "expect": self.expect, "payload": self.payload, "version": __version__}


def _line_of(text: str, section: str, key: str | None) -> int | None:
    lines = text.splitlines()
    start = None
    header = re.compile(r"^\s*\[\s*" + re.escape(section) + r"\s*\]\s*$")
    quoted = re.compile(r'^\s*\[\s*"' + re.escape(section) + r'"\s*\]\s*$')
    for i, ln in enumerate(lines):
        if header.match(ln) or quoted.match(ln):
            start = i
            break
    if start is None:
        pat = re.compile(r'"' + re.escape(key or section) + r'"\s*:')
        return next((i + 1 for i, ln in enumerate(lines) if pat.search(ln)), None)
    if key is None:
        return start + 1
    pat = re.compile(r"^\s*" + re.escape(key) + r"\s*=")
    for i in range(start + 1, len(lines)):
        if lines[i].lstrip().startswith("["):
            break
        if pat.match(lines[i]):
            return i + 1
    return start + 1


def parse_text(text: str, source: str = "<string>", fmt: str | None = None) -> list[Scenario]:
    fmt = fmt or ("json" if source.endswith(".json") else "toml")
    try:
        if fmt == "json":
            data = json.loads(text)
        else:
            data = tomli.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{source}:{exc.lineno}: {exc.msg}") from exc
    except tomli.TOMLDecodeError as exc:
        raise UsageError(f"{source}: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"{source}: top level must be a table of scenarios")
    out = []
    for name, body in data.items():
        where = lambda key=None: f"{source}:{_line_of(text, name, key) or '?'}"  # noqa: E731
        if not isinstance(body, dict):
            raise UsageError(f"{where()}: scenario {name!r} must be a table")
        if "op" not in body:
            raise UsageError(f"{where()}: scenario {name!r} has no 'op'")
        op = body["op"]
        if op not in OPS:
            raise UsageError(f"{where('op')}: scenario {name!r}: unknown op {op!r}")
        spec = OPS[op].params
        params = {}
        for key, value in body.items():
            if key in RESERVED:
                continue
            if key not in spec:
                raise UsageError(f"{where(key)}: scenario {name!r}: unknown field {key!r} for {op}")
            params[key] = spec[key].coerce(value, f"{where(key)}: {name}.{key}")
        for key, p in spec.items():
            params.setdefault(key, p.default)
        expect = body.get("expect", "pass")
        if expect not in ("pass", "fail"):
            raise UsageError(f"{where('expect')}: expect must be 'pass' or 'fail'")
        expected = body.get("expected", {})
        if not isinstance(expected, dict):
            raise UsageError(f"{where('expected')}: expected must be a table")
        tol = body.get("tolerance", 1e-9)
        if isinstance(tol, bool) or not isinstance(tol, (int, float)) or tol < 0:
            raise UsageError(f"{where('tolerance')}: tolerance must be a non-negative number")
        out.append(Scenario(name, op, params, expect, expected, float(tol),
                            str(body.get("description", "")), source))
    return out


def load_file(path: Path) -> list[Scenario]:
    return parse_text(path.read_text(encoding="utf-8"), str(path))


def load_suite(directory: Path) -> list[Scenario]:
    directory = Path(directory)
    if not directory.is_dir():
        raise UsageError(f"{directory}: not a directory")
    files = sorted(p for p in directory.iterdir() if p.suffix in (".toml", ".json"))
    if not files:
        raise UsageError(f"{directory}: no scenario files")
    seen: dict[str, str] = {}
    scenarios = []
    for f in files:
        for s in load_file(f):
            if s.name in seen:
                raise UsageError(f"duplicate scenario name {s.name!r} in {seen[s.name]} and {f}")
            seen[s.name] = str(f)
            scenarios.append(s)
    if not scenarios:
        raise UsageError(f"{directory}: no scenarios")
    return sorted(scenarios, key=lambda s: s.name)


def _lookup(payload, path: str):
    cur = payload
    for part in path.split("."):
        if isinstance(cur, list):
            cur = cur[int(part)]
        else:
            cur = cur[part]
    return cur


def _golden(payload: dict, expected: dict, tol: float) -> list[dict]:
    misses = []
    for path, want in sorted(expected.items()):
        try:
            got = _lookup(payload, path)
        except (KeyError, IndexError, ValueError, TypeError):
            misses.append({"path": path, "expected": want, "got": None})
            continue
        if isinstance(want, (int, float)) and not isinstance(want, bool) and isinstance(got, (int, float)) \
                and not isinstance(got, bool):
            if abs(got - want) > tol:
                misses.append({"path": path, "expected": want, "got": got})
        elif got != want:
            misses.append({"path": path, "expected": want, "got": got})
    return misses


def run_scenario(s: Scenario) -> Report:
    """Run one scenario; exceptions become failed reports."""
    t0 = time.perf_counter()
    try:
        ok, payload = OPS[s.op].fn(**s.params)
        payload = jsonable(payload)
        misses = _golden(payload, s.expected, s.tolerance)
        if misses:
            payload = {**payload, "golden_mismatches": misses}
        check_ok = bool(ok) and not misses
        outcome = "pass" if check_ok else "fail"
    except UsageError:
        raise
    except Exception as exc:  # noqa: BLE001 - every module error becomes a report
        payload = {"error": type(exc).__name__, "message": str(exc)}
        outcome = "error"
    passed = outcome == s.expect
    return Report(s.name, s.op, passed, outcome, s.expect, payload, time.perf_counter() - t0)


def run_suite(directory, jobs: int = 1) -> tuple[dict, list[Report]]:
    scenarios = load_suite(Path(directory))
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            reports = list(ex.map(run_scenario, scenarios))
    else:
        reports = [run_scenario(s) for s in scenarios]
    reports.sort(key=lambda r: r.name)
    failed = [r.name for r in reports if not r.passed]
    summary = {
        "schema": SCHEMA_VERSION,
        "version": __version__,
        "passed": not failed,
        "total": len(reports),
        "failed": failed,
        "scenarios": [r.canonical() for r in reports],
    }
    return summary, reports
