import copy
import io
import json
from importlib import resources
from pathlib import Path

import jsonschema
import pytest

from pfaffkit import cli
from pfaffkit.cli import SCHEMA_ID, check_corpus, dumps, exit_code, fixture_paths, main, run, run_file
from pfaffkit.cohomology import xi_representation
from pfaffkit.dsl import parse
from pfaffkit.linalg import RationalMatrix

SCHEMA = json.loads((resources.files("pfaffkit") / "report.schema.json").read_text())


def fixture(name):
    return next(p for p in fixture_paths() if Path(p).name == name)


def results(report):
    return {(c["command"], tuple(c["args"])): c.get("result") for c in report["commands"]}


def test_corpus_reports_are_schema_valid_and_deterministic():
    assert len(fixture_paths()) >= 8
    for path in fixture_paths():
        r1, _ = run_file(path)
        r2, _ = run_file(path)
        jsonschema.validate(r1, SCHEMA)
        assert dumps(r1) == dumps(r2)
        assert r1["schema"] == SCHEMA_ID
        assert exit_code(r1) == 0, path


def test_torus_report():
    r, _ = run_file(fixture("torus.pfk"))
    res = results(r)
    assert res[("cohomology", ("vertical", "M"))]["dims"] == {"1": 1}
    assert res[("compare-theorem1", ("M",))]["verdict"] == "equal"
    assert res[("euler", ("M", "cos(y)*dx"))]["cochain"] == {"e1": "-sin(y)"}
    # witnesses replay as DSL input
    (w,) = res[("cohomology", ("vertical", "M"))]["witnesses"]["1"]
    s = parse(f"chart T (x: periodic, y: periodic)\nform w = {w}\n")
    assert s.bindings["w"].value.degree == 2


def test_contact_report():
    r, _ = run_file(fixture("contact.pfk"))
    assert results(r)[("check-integrable", ("S",))] == {"integrable": False}


def test_empty_session(tmp_path):
    p = tmp_path / "empty.pfk"
    p.write_text("")
    r, _ = run_file(str(p))
    assert r["commands"] == []
    jsonschema.validate(r, SCHEMA)
    assert main(["run", str(p)]) == 0


def test_schema_rejects_malformed_reports():
    r, _ = run_file(fixture("torus.pfk"))
    bad = copy.deepcopy(r)
    del bad["schema"]
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, SCHEMA)
    bad = copy.deepcopy(r)
    bad["commands"][0]["status"] = "maybe"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, SCHEMA)
    bad = copy.deepcopy(r)
    c = next(c for c in bad["commands"] if c["command"] == "compare-theorem1")
    c["result"]["verdict"] = "same"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, SCHEMA)
    bad = copy.deepcopy(r)
    bad["commands"][0]["status"] = "error"
    with pytest.raises(jsonschema.ValidationError):
        jsonschema.validate(bad, SCHEMA)


def test_command_errors_are_structured(tmp_path):
    src = "chart R (x, y)\nsystem S = <dy>\nmodel M = foliate S\ncohomology vertical M\ncheck-integrable S\n"
    r, _ = run(parse(src))
    first, second = r["commands"]
    assert first["status"] == "error" and first["error"]["type"] == "NoActionError"
    assert second["status"] == "ok"
    assert exit_code(r) == 1
    jsonschema.validate(r, SCHEMA)
    p = tmp_path / "bad.pfk"
    p.write_text(src)
    assert main(["run", str(p)]) == 1


def test_strict_comparison_flag(monkeypatch):
    original = cli.theorem1_compare

    def corrupted(model, trunc):
        # the trivial representation on Xi^0 breaks the comparison
        space, mats = xi_representation(model, trunc)
        return original(model, trunc, [RationalMatrix(len(space), len(space)) for _ in mats])

    monkeypatch.setattr(cli, "theorem1_compare", corrupted)
    path = fixture("torus.pfk")
    loose, _ = run_file(path)
    assert exit_code(loose) == 0
    assert results(loose)[("compare-theorem1", ("M",))]["verdict"] == "unequal"
    strict, _ = run_file(path, strict_theorem1=True)
    assert exit_code(strict) == 1
    assert main(["run", path, "--strict-theorem1"]) == 1
    assert main(["run", path]) == 0


def test_main_run_json_and_truncate(tmp_path, capsys):
    out = tmp_path / "r.json"
    assert main(["run", fixture("torus.pfk"), "--json", str(out), "--truncate", "3", "5"]) == 0
    report = json.loads(out.read_text())
    assert report["session"]["truncation"] == {"degree": 3, "freq": 5}
    assert "commands" in capsys.readouterr().out
    assert main(["run", fixture("torus.pfk"), "--json", "-"]) == 0
    text = capsys.readouterr().out
    assert json.loads(text)["schema"] == SCHEMA_ID
    assert main(["run", fixture("torus.pfk"), "--truncate", "0", "3"]) == 2


def test_timing_flag(tmp_path):
    r, _ = run_file(fixture("torus.pfk"), timing=True)
    assert all("seconds" in c for c in r["commands"])
    jsonschema.validate(r, SCHEMA)
    r, _ = run_file(fixture("torus.pfk"))
    assert not any("seconds" in c for c in r["commands"])


def test_parse_error_exit(tmp_path, capsys):
    p = tmp_path / "bad.pfk"
    p.write_text("chart R (x, y)\nform w = dx ∧\n")
    assert main(["run", str(p)]) == 2
    err = capsys.readouterr().err
    assert f"{p}:2:13: error: dangling" in err and "expected one of" in err
    assert main(["run", str(tmp_path / "missing.pfk")]) == 2


def test_fmt_is_fixpoint(tmp_path, capsys):
    assert main(["fmt", fixture("affine.pfk")]) == 0
    once = capsys.readouterr().out
    p = tmp_path / "a.pfk"
    p.write_text(once)
    assert main(["fmt", str(p)]) == 0
    assert capsys.readouterr().out == once


def test_corpus_command(tmp_path):
    buf = io.StringIO()
    assert check_corpus(out=buf) == 0
    lines = buf.getvalue().splitlines()
    assert len(lines) == len(fixture_paths()) and all(l.strip().startswith("ok") for l in lines)
    p = tmp_path / "broken.pfk"
    p.write_text("chart R (x, y)\nsystem S = <dy>\nmodel M = foliate S\ncohomology vertical M\n")
    buf = io.StringIO()
    assert check_corpus([str(p)], out=buf) == 1
    assert "FAIL" in buf.getvalue()


def test_console_script():
    import shutil
    import subprocess

    exe = shutil.which("pfaffkit")
    if exe is None:
        pytest.skip("console script not installed")
    out = subprocess.run([exe, "corpus"], capture_output=True, text=True, timeout=300)
    assert out.returncode == 0, out.stdout + out.stderr
