"""Command-line entry point: ``defectwb <subcommand> [flags]``.

Exit codes: 0 when every check passes, 1 when a check fails, 2 on usage or
configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from fractions import Fraction
from pathlib import Path

from . import SCHEMA_VERSION, __version__
from .scenarios import OPS, UsageError, canonical_json, jsonable, run_suite

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def _rational(text: str) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational number: {text!r}") from exc


def _sweep(text: str) -> list[Fraction]:
    """'a..b:step' (inclusive) or a comma list."""
    try:
        if ".." in text:
            rng, _, step = text.partition(":")
            lo, hi = (Fraction(x) for x in rng.split(".."))
            step = Fraction(step) if step else Fraction(1)
            if step <= 0 or hi < lo:
                raise ValueError
            out, x = [], lo
            while x <= hi:
                out.append(x)
                x += step
            return out
        return [Fraction(x) for x in text.split(",") if x.strip()]
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"bad sweep {text!r}; use a..b:step or a,b,c") from exc


def _emit(payload) -> None:
    sys.stdout.write(canonical_json(payload))


def _run_op(name: str, **params) -> int:
    spec = OPS[name].params
    full = {k: p.default for k, p in spec.items()}
    full.update({k: v for k, v in params.items() if v is not None})
    ok, payload = OPS[name].fn(**full)
    _emit({"op": name, "passed": bool(ok), "payload": payload})
    return EXIT_OK if ok else EXIT_FAIL


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_collapse(a) -> int:
    if a.check_locality:
        return _run_op("collapse.locality", t=a.t, count=a.count, seed=a.seed)
    from . import collapse
    profile = collapse.make_profile(a.t, a.family_param)
    w = csv.writer(sys.stdout, lineterminator="\n")
    w.writerow(["s", "f_t(s)"])
    for s, f in profile.table(a.points):
        w.writerow([repr(s), repr(f)])
    return EXIT_OK


def cmd_fact_line(a) -> int:
    if a.emit_tables:
        from . import fact_line
        from .scenarios import _darboux_for
        A = fact_line.WeylAlgebra(_darboux_for(a.v_dim), hbar=1, cap=a.cap)
        csv.writer(sys.stdout, lineterminator="\n").writerows(fact_line.multiplication_table(A, a.table_degree))
        return EXIT_OK
    return _run_op("fact_line.axioms", v_dim=a.v_dim, lminus=a.lminus, lplus=a.lplus,
                   depth=a.depth, cap=a.cap, flip=a.flip)


def cmd_scalar_defect(a) -> int:
    if a.csv:
        from . import scalar_defect
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["k", "row", "col", "value"])
        for k in range(-a.modes, a.modes + 1):
            blk = scalar_defect.operator_block(a.radius, a.order, k)
            for i in range(blk.shape[0]):
                for j in range(blk.shape[1]):
                    if blk[i, j] != 0:
                        w.writerow([k, i, j, str(blk[i, j])])
        return EXIT_OK
    return _run_op("scalar.summary", radius=a.radius, modes=a.modes, order=a.order)


def cmd_monodromy(a) -> int:
    segments = None
    if a.segments:
        try:
            segments = json.loads(Path(a.segments).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--segments: {exc}") from exc
        if not isinstance(segments, list):
            raise UsageError("--segments: expected a JSON list of {coeffs, length}")
    return _run_op("gauge.monodromy", algebra=a.algebra, segments=segments, flux=a.flux)


def cmd_bf(a) -> int:
    return _run_op("gauge.bf_lagrangians", algebra=a.algebra, s_values=a.sweep_s)


def cmd_wilson(a) -> int:
    return _run_op("gauge.wilson", weight=a.weight, flux=a.flux, segments=a.segments)


def cmd_ym(a) -> int:
    from . import ym
    rows = ym.build_ym_complex(a.cutoff, a.coupling)
    payload = {"complex": rows, "projector": ym.projector_checks(),
               "zero_mode_cohomology": ym.zero_mode_cohomology(a.coupling)}
    ok = rows["d_squared_zero"] and rows["rows_decouple"] == (a.coupling == 0)
    if a.check:
        b = ym.build_boundary_complex(1)
        payload["boundary_B0"] = ym.boundary_condition_B0(b)
        payload["boundary_pairing"] = ym.boundary_pairing_report(b)
        ok = ok and payload["boundary_B0"]["chain_map"] and payload["boundary_B0"]["isotropic"]
    _emit({"op": "ym", "passed": bool(ok), "payload": payload})
    return EXIT_OK if ok or not a.check else EXIT_FAIL


def cmd_monopole(a) -> int:
    return _run_op("ym.monopole", charge=a.charge, grid=a.grid, method=a.method)


def cmd_dyonic(a) -> int:
    return _run_op("ym.dyonic", m=a.m, n=a.n, flux=a.flux)


def cmd_suite(a) -> int:
    summary, reports = run_suite(a.directory, jobs=a.jobs)
    text = canonical_json(summary)
    if a.json:
        Path(a.json).write_text(text, encoding="utf-8")
    for r in reports:
        status = "ok  " if r.passed else "FAIL"
        print(f"{status} {r.name} [{r.op}] outcome={r.outcome} expect={r.expect} ({r.duration:.2f}s)",
              file=sys.stderr)
    if not a.json:
        sys.stdout.write(text)
    return EXIT_OK if summary["passed"] else EXIT_FAIL


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="defectwb", description="Desk-scale checks for defects in perturbative field theory.")
    p.add_argument("--version", action="version",
                   version=f"defectwb {__version__} (report schema {SCHEMA_VERSION})")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    c = sub.add_parser("collapse", help="collapse profile table or locality report")
    c.add_argument("--t", type=float, default=0.25)
    c.add_argument("--family-param", type=float, default=0.0)
    c.add_argument("--points", type=int, default=31)
    c.add_argument("--check-locality", action="store_true")
    c.add_argument("--count", type=int, default=50)
    c.add_argument("--seed", type=int, default=0)
    c.set_defaults(func=cmd_collapse)

    f = sub.add_parser("fact-line", help="prefactorization axioms of the Weyl/Fock defect line")
    f.add_argument("--v-dim", type=int, default=2)
    f.add_argument("--lminus", default="q", help="comma-separated generators spanning L-")
    f.add_argument("--lplus", default="p", help="comma-separated generators spanning L+")
    f.add_argument("--depth", type=int, default=3)
    f.add_argument("--cap", type=int, default=6)
    f.add_argument("--flip", action="store_true", help="use the wrong-side module convention")
    f.add_argument("--emit-tables", action="store_true")
    f.add_argument("--table-degree", type=int, default=2)
    f.set_defaults(func=cmd_fact_line)

    s = sub.add_parser("scalar-defect", help="jet model of the codimension-two scalar defect")
    s.add_argument("--radius", type=_rational, default=Fraction(1))
    s.add_argument("--modes", type=int, default=5)
    s.add_argument("--order", type=int, default=8)
    s.add_argument("--csv", action="store_true", help="emit the operator blocks instead")
    s.set_defaults(func=cmd_scalar_defect)

    m = sub.add_parser("monodromy", help="holonomy and conjugacy invariants")
    m.add_argument("--algebra", default="sl2", choices=["sl2", "heisenberg"])
    m.add_argument("--segments", help="JSON file: list of {coeffs, length}")
    m.add_argument("--flux", type=float, default=0.7)
    m.set_defaults(func=cmd_monodromy)

    b = sub.add_parser("bf-lagrangians", help="Lagrangians in g + g*")
    b.add_argument("--algebra", default="sl2")
    b.add_argument("--sweep-s", type=_sweep, default=[Fraction(x) for x in (-2, -1, 0, 1, 2)])
    b.set_defaults(func=cmd_bf)

    w = sub.add_parser("wilson", help="u(1) Wilson loop")
    w.add_argument("--weight", type=int, default=1)
    w.add_argument("--flux", type=float, default=0.7)
    w.add_argument("--segments", type=int, default=4)
    w.set_defaults(func=cmd_wilson)

    y = sub.add_parser("ym", help="first-order Yang-Mills complex")
    y.add_argument("--cutoff", type=int, default=1)
    y.add_argument("--coupling", type=_rational, default=Fraction(1))
    y.add_argument("--check", action="store_true", help="exit 1 unless every check passes")
    y.set_defaults(func=cmd_ym)

    mo = sub.add_parser("monopole", help="magnetic charge of the Dirac monopole")
    mo.add_argument("--charge", type=int, default=1)
    mo.add_argument("--grid", type=int, default=64)
    mo.add_argument("--method", default="richardson", choices=["richardson", "midpoint"])
    mo.set_defaults(func=cmd_monopole)

    d = sub.add_parser("dyonic", help="dyonic defect descriptor")
    d.add_argument("--m", type=int, default=1)
    d.add_argument("--n", type=int, default=2)
    d.add_argument("--flux", type=float, default=1.0)
    d.set_defaults(func=cmd_dyonic)

    su = sub.add_parser("suite", help="run a directory of scenario files")
    su.add_argument("directory")
    su.add_argument("--jobs", type=int, default=1)
    su.add_argument("--json", help="write the canonical report here")
    su.set_defaults(func=cmd_suite)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if getattr(args, "jobs", 1) < 1:
            raise UsageError("--jobs must be >= 1")
        return args.func(args)
    except UsageError as exc:
        print(f"defectwb: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, ArithmeticError) as exc:
        # bad values that slipped past argparse, e.g. t outside (0, 1)
        print(f"defectwb: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
