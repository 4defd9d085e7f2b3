import csv
import io
import json
import subprocess
import sys
from pathlib import Path

import pytest

from defectwb import __version__
from defectwb.cli import main
from defectwb.scenarios import UsageError, load_suite, parse_text, run_suite

ROOT = Path(__file__).resolve().parents[1]


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_version(capsys):
    with pytest.raises(SystemExit) as exc:
        main(["--version"])
    assert exc.value.code == 0
    assert capsys.readouterr().out.strip() == f"defectwb {__version__} (report schema 1)"


def test_collapse_table(capsys):
    code, out, _ = run(capsys, "collapse", "--t", "0.25", "--points", "13")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and rows[0] == ["s", "f_t(s)"] and len(rows) == 14
    assert float(rows[1][1]) == 0.0 and float(rows[-1][0]) == float(rows[-1][1]) == 3.0


def test_collapse_locality_and_bad_t(capsys):
    code, out, _ = run(capsys, "collapse", "--check-locality", "--count", "10")
    assert code == 0 and json.loads(out)["passed"]
    code, _, err = run(capsys, "collapse", "--t", "1.5")
    assert code == 2 and "error" in err


def test_fact_line_pass_and_flip(capsys):
    code, out, _ = run(capsys, "fact-line", "--depth", "2")
    assert code == 0 and json.loads(out)["passed"]
    code, out, _ = run(capsys, "fact-line", "--depth", "2", "--flip")
    assert code == 1 and not json.loads(out)["passed"]


def test_fact_line_tables(capsys):
    code, out, _ = run(capsys, "fact-line", "--emit-tables", "--table-degree", "1")
    rows = list(csv.reader(io.StringIO(out)))
    assert code == 0 and ["q", "p", "q*p + hbar"] in rows


def test_scalar_defect(capsys):
    code, out, _ = run(capsys, "scalar-defect", "--radius", "3/2", "--modes", "2", "--order", "6")
    assert code == 0 and json.loads(out)["payload"]["surjectivity"]["surjective"]
    code, out, _ = run(capsys, "scalar-defect", "--csv", "--modes", "1", "--order", "4")
    assert code == 0 and out.splitlines()[0] == "k,row,col,value"
    code, _, _ = run(capsys, "scalar-defect", "--radius", "abc")
    assert code == 2
    code, _, _ = run(capsys, "scalar-defect", "--radius", "-1")
    assert code == 2


def test_monodromy_and_segments_file(capsys, tmp_path):
    code, out, _ = run(capsys, "monodromy")
    assert code == 0
    seg = tmp_path / "segs.json"
    seg.write_text(json.dumps([{"coeffs": [0.2, 0.1, 0.0], "length": 1.0},
                               {"coeffs": [0.0, 0.3, 0.4], "length": 2.0}]))
    code, out, _ = run(capsys, "monodromy", "--segments", str(seg))
    assert code == 0 and json.loads(out)["passed"]
    code, _, err = run(capsys, "monodromy", "--segments", str(tmp_path / "missing.json"))
    assert code == 2 and "--segments" in err


def test_bf_sweep(capsys):
    code, out, _ = run(capsys, "bf-lagrangians", "--sweep-s=-1..1:1/2")
    assert code == 0
    rows = json.loads(out)["payload"]["rows"]
    assert [r["s"] for r in rows if r["family"] == "graph"] == ["-1", "-1/2", "0", "1/2", "1"]
    code, _, _ = run(capsys, "bf-lagrangians", "--sweep-s", "2..1")
    assert code == 2


def test_wilson_dyonic_monopole(capsys):
    assert run(capsys, "wilson", "--weight", "3")[0] == 0
    code, out, _ = run(capsys, "dyonic", "--m", "2", "--n", "-1")
    assert code == 0 and json.loads(out)["payload"]["kind"] == "dyonic"
    assert run(capsys, "monopole", "--charge", "-2")[0] == 0
    assert run(capsys, "monopole", "--method", "midpoint")[0] == 1
    assert run(capsys, "monopole", "--grid", "4")[0] == 2


def test_ym_check(capsys):
    code, out, _ = run(capsys, "ym", "--cutoff", "1", "--coupling", "0", "--check")
    payload = json.loads(out)["payload"]
    assert code == 0 and payload["complex"]["rows_decouple"] and payload["boundary_B0"]["isotropic"]


def test_unknown_subcommand_and_flag(capsys):
    assert run(capsys, "nonsense")[0] == 2
    assert run(capsys, "wilson", "--weigth", "2")[0] == 2


# --------------------------------------------------------------------------
# suite runner
# --------------------------------------------------------------------------


def test_unknown_field_reports_line():
    text = '[a]\nop = "scalar.summary"\nradiius = "1"\n'
    with pytest.raises(UsageError, match=r"bad.toml:3: .*unknown field 'radiius'"):
        parse_text(text, "bad.toml")


def test_unknown_op_and_missing_op():
    with pytest.raises(UsageError, match="unknown op"):
        parse_text('[a]\nop = "nope"\n', "x.toml")
    with pytest.raises(UsageError, match="has no 'op'"):
        parse_text('[a]\nradius = "1"\n', "x.toml")
    with pytest.raises(UsageError, match="expect must be"):
        parse_text('[a]\nop = "ym.monopole"\nexpect = "maybe"\n', "x.toml")


def test_bad_parameter_type():
    with pytest.raises(UsageError):
        parse_text('[a]\nop = "ym.monopole"\ncharge = "two"\n', "x.toml")


def test_json_scenarios_are_accepted():
    out = parse_text(json.dumps({"m": {"op": "ym.monopole", "charge": 2}}), "s.json")
    assert out[0].params["charge"] == 2


def test_duplicate_names_and_empty_directory(tmp_path):
    (tmp_path / "a.toml").write_text('[x]\nop = "ym.monopole"\n')
    (tmp_path / "b.toml").write_text('[x]\nop = "ym.monopole"\n')
    with pytest.raises(UsageError, match="duplicate"):
        load_suite(tmp_path)
    empty = tmp_path / "empty"
    empty.mkdir()
    with pytest.raises(UsageError, match="no scenario files"):
        load_suite(empty)


def test_suite_exit_codes(capsys, tmp_path):
    (tmp_path / "ok.toml").write_text('[m]\nop = "ym.monopole"\ncharge = 2\n')
    assert run(capsys, "suite", str(tmp_path))[0] == 0
    (tmp_path / "bad.toml").write_text('[w]\nop = "ym.monopole"\nmethod = "midpoint"\n')
    code, out, err = run(capsys, "suite", str(tmp_path))
    assert code == 1 and json.loads(out)["failed"] == ["w"] and "FAIL w" in err
    (tmp_path / "typo.toml").write_text('[t]\nop = "scalar.summary"\nradiius = "1"\n')
    code, _, err = run(capsys, "suite", str(tmp_path))
    assert code == 2 and "typo.toml:3" in err


def test_expected_failure_and_golden_values(tmp_path):
    (tmp_path / "s.toml").write_text(
        '[neg]\nop = "ym.monopole"\nmethod = "midpoint"\nexpect = "fail"\n\n'
        '[gold]\nop = "ym.monopole"\ncharge = 3\ntolerance = 1e-6\n[gold.expected]\n"estimate.estimate" = 3.0\n\n'
        '[gold-miss]\nop = "ym.monopole"\ncharge = 3\nexpect = "fail"\n[gold-miss.expected]\n"estimate.estimate" = 4.0\n'
    )
    summary, reports = run_suite(tmp_path)
    assert summary["passed"], summary["failed"]
    miss = next(r for r in reports if r.name == "gold-miss")
    assert miss.payload["golden_mismatches"][0]["path"] == "estimate.estimate"


def test_module_error_becomes_error_outcome(tmp_path):
    (tmp_path / "e.toml").write_text('[e]\nop = "ym.monopole"\ngrid = 2\n')
    summary, reports = run_suite(tmp_path)
    assert not summary["passed"] and reports[0].outcome == "error"


def test_suite_is_deterministic_across_jobs(tmp_path):
    outs = []
    for jobs in ("1", "3"):
        target = tmp_path / f"r{jobs}.json"
        proc = subprocess.run([sys.executable, "-m", "defectwb.cli", "suite", str(ROOT / "default"),
                               "--jobs", jobs, "--json", str(target)], capture_output=True, text=True)
        assert proc.returncode == 0, proc.stderr
        outs.append(target.read_bytes())
    assert outs[0] == outs[1]
    data = json.loads(outs[0])
    assert data["schema"] == 1 and data["total"] == len(data["scenarios"])
    assert all("duration" not in s for s in data["scenarios"])
