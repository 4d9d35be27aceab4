"""Command-line driver: run session files and emit deterministic JSON reports."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from importlib import resources
from typing import List, Optional, Tuple

from . import __version__
from .cohomology import (
    CEModule,
    ce_cohomology,
    equivariant_cohomology,
    invariant_cohomology,
    obstruction_scan,
    theorem1_compare,
    vertical_cohomology,
    xi_ce_cohomology,
)
from .dsl import Evaluator, ParseError, SessionSpec, parse, pretty, show_expr
from .forms import DifferentialForm, VectorField
from .group_action import (
    cartan_basis,
    check_action,
    check_transversally_free,
    verify_lemma2_generation,
    verify_structure_equation,
)
from .pfaffian import is_first_integral, is_integrable, is_invariant_form, is_symmetry
from .scalars import ScalarExpr
from .variational import Truncation, euler, relative_invariance_check

__all__ = ["run", "run_file", "main", "SCHEMA_ID", "CommandFailure"]

SCHEMA_ID = "pfaffkit-report/1"


class CommandFailure(Exception):
    """A command ran but its outcome counts as a failure."""


def _as_form(v) -> DifferentialForm:
    if isinstance(v, ScalarExpr):
        return DifferentialForm.function(v)
    if not isinstance(v, DifferentialForm):
        raise TypeError(f"expected a differential form, got {type(v).__name__}")
    return v


def _as_scalar(v) -> ScalarExpr:
    if isinstance(v, DifferentialForm) and v.degree == 0:
        return v.coefficient(())
    if not isinstance(v, ScalarExpr):
        raise TypeError(f"expected a scalar, got {type(v).__name__}")
    return v


def _as_field(v) -> VectorField:
    if not isinstance(v, VectorField):
        raise TypeError(f"expected a vector field, got {type(v).__name__}")
    return v


class _Runner:
    def __init__(self, session: SessionSpec, truncation: Truncation, strict_theorem1: bool):
        self.s = session
        self.trunc = truncation
        self.strict = strict_theorem1
        self.ev = Evaluator(session.chart, session.bindings)

    def get(self, node):
        return self.s.bindings[node.id].value

    def execute(self, cmd) -> dict:
        fn = getattr(self, "do_" + cmd.name.replace("-", "_"))
        return fn(*cmd.args)

    def do_check_integrable(self, S):
        return {"integrable": is_integrable(self.get(S))}

    def do_check_invariant(self, w, S):
        return {"invariant": is_invariant_form(_as_form(self.ev(w)), self.get(S))}

    def do_check_symmetry(self, xi, S):
        return {"symmetry": is_symmetry(_as_field(self.ev(xi)), self.get(S))}

    def do_check_first_integral(self, f, S):
        return {"first_integral": is_first_integral(_as_scalar(self.ev(f)), self.get(S))}

    def do_check_action(self, phi):
        A = self.get(phi)
        out = check_action(A).as_dict()
        out["transversally_free"] = check_transversally_free(A).as_dict()
        return out

    def do_cartan_basis(self, phi):
        A = self.get(phi)
        B = cartan_basis(A)
        return {"forms": {name: str(w) for name, w in zip(A.algebra.names, B.forms)},
                "structure_equation": verify_structure_equation(B)}

    def do_decompose(self, phi, xi):
        return verify_lemma2_generation(self.get(phi), _as_field(self.ev(xi))).as_dict()

    def do_cohomology(self, kind, X):
        b = self.s.bindings[X.id]
        if kind == "vertical":
            rep = vertical_cohomology(b.value, self.trunc, witnesses=True)
        elif kind == "equivariant":
            rep = equivariant_cohomology(b.value, self.trunc, witnesses=True)
        elif kind == "invariant":
            S = b.value.system if b.kind == "model" else b.value
            rep = invariant_cohomology(S, self.trunc, witnesses=True)
        elif b.kind == "algebra":
            rep = ce_cohomology(CEModule.trivial(b.value), label="ce")
        else:
            rep = xi_ce_cohomology(b.value, self.trunc)
        return rep.as_dict()

    def do_euler(self, M, mu):
        model = self.get(M)
        E = euler(model, _as_form(self.ev(mu)))
        A = model.require_action()
        cochain = {}
        for name, f in zip(A.algebra.names, A.fields):
            val = E.evaluate([f]).coefficients()
            cochain[name] = str(val.get((), model.chart.zero()))
        return {"class": str(E), "cochain": cochain}

    def do_compare_theorem1(self, M):
        rep = theorem1_compare(self.get(M), self.trunc)
        if self.strict and not rep.equal:
            raise CommandFailure(f"vertical and CE cohomology differ: {rep.as_dict()['degrees']}")
        return rep.as_dict()

    def do_scan_obstructions(self, M, *algebras):
        vert = vertical_cohomology(self.get(M), self.trunc)
        cands = [(a.id, CEModule.trivial(self.get(a))) for a in algebras]
        return {"variational": {str(k): v for k, v in sorted(vert.dims.items())},
                "candidates": obstruction_scan(vert, cands)}

    def do_relative_invariance(self, w, M):
        return relative_invariance_check(_as_form(self.ev(w)), self.get(M)).as_dict()


def _session_info(session: SessionSpec, trunc: Truncation) -> dict:
    c = session.chart
    if c is None:
        return {"source": session.source_name, "chart": None, "coordinates": [], "denominators": [],
                "bindings": {}, "truncation": trunc.as_dict()}
    return {
        "source": session.source_name,
        "chart": c.name,
        "coordinates": [{"name": x.name, "kind": x.kind} for x in c.coords],
        "denominators": [c._poly_str(p) for p in c._den_polys],
        "bindings": {n: b.kind for n, b in sorted(session.bindings.items())},
        "truncation": trunc.as_dict(),
    }


def run(session: SessionSpec, *, strict_theorem1: bool = False,
        truncation: Optional[Truncation] = None, timing: bool = False) -> Tuple[dict, List[float]]:
    """Execute every command in order; returns the report and per-command seconds.

    Timings enter the report only with ``timing=True``, which makes it
    non-deterministic.
    """
    trunc = truncation or session.truncation
    runner = _Runner(session, trunc, strict_theorem1) if session.chart is not None else None
    entries, timings = [], []
    for cmd in session.commands:
        entry = {"command": cmd.name, "line": cmd.line,
                 "args": [a if isinstance(a, str) else show_expr(a) for a in cmd.args]}
        t0 = time.perf_counter()
        try:
            entry["result"] = runner.execute(cmd)
            entry["status"] = "ok"
        except Exception as exc:  # one failing command must not stop the session
            entry["status"] = "error"
            entry["error"] = {"type": type(exc).__name__, "message": str(exc)}
        timings.append(time.perf_counter() - t0)
        if timing:
            entry["seconds"] = round(timings[-1], 6)
        entries.append(entry)
    report = {"schema": SCHEMA_ID, "version": __version__,
              "session": _session_info(session, trunc), "commands": entries}
    return report, timings


def dumps(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def exit_code(report: dict) -> int:
    return 0 if all(c["status"] == "ok" for c in report["commands"]) else 1


def run_file(path: str, **kw) -> Tuple[dict, List[float]]:
    with open(path, encoding="utf-8") as fh:
        src = fh.read()
    return run(parse(src, os.path.basename(path)), **kw)


def summary(report: dict, timings: List[float]) -> str:
    lines = []
    for c, t in zip(report["commands"], timings):
        head = f"[{c['status']:>5}] line {c['line']:>3}  {c['command']} {' '.join(c['args'])}"
        if c["status"] == "ok":
            body = json.dumps(c["result"], sort_keys=True, ensure_ascii=False)
        else:
            body = f"{c['error']['type']}: {c['error']['message']}"
        if len(body) > 160:
            body = body[:157] + "..."
        lines.append(f"{head}  ({t * 1000:.1f} ms)\n        {body}")
    n_err = sum(c["status"] != "ok" for c in report["commands"])
    lines.append(f"{len(report['commands'])} commands, {n_err} errors")
    return "\n".join(lines) + "\n"


def fixture_paths() -> List[str]:
    root = resources.files("pfaffkit") / "fixtures"
    return sorted(str(p) for p in root.iterdir() if p.name.endswith(".pfk"))


def check_corpus(paths: List[str] | None = None, out=sys.stdout) -> int:
    """Round-trip, determinism, and clean execution for every fixture."""
    failures = 0
    for path in paths or fixture_paths():
        name = os.path.basename(path)
        problems = []
        try:
            src = open(path, encoding="utf-8").read()
            spec = parse(src, name)
            printed = pretty(spec)
            if parse(printed, name).statements != spec.statements or pretty(parse(printed, name)) != printed:
                problems.append("print/parse is not a fixpoint")
            r1, _ = run(spec)
            r2, _ = run(parse(src, name))
            if dumps(r1) != dumps(r2):
                problems.append("JSON report is not deterministic")
            bad = [f"line {c['line']} {c['command']}: {c['error']['message']}"
                   for c in r1["commands"] if c["status"] != "ok"]
            problems.extend(bad)
        except ParseError as exc:
            problems.append(f"parse error: {exc}")
        status = "ok" if not problems else "FAIL"
        failures += bool(problems)
        print(f"{status:>4}  {name}", file=out)
        for p in problems:
            print(f"      {p}", file=out)
    return 0 if failures == 0 else 1


def main(argv: List[str] | None = None) -> int:
    ap = argparse.ArgumentParser(prog="pfaffkit", description="Exact symbolic checks for Pfaffian systems.")
    ap.add_argument("--version", action="version", version=f"pfaffkit {__version__}")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a session file")
    r.add_argument("file")
    r.add_argument("--json", metavar="OUT", help="write the JSON report to OUT ('-' for stdout)")
    r.add_argument("--strict-theorem1", action="store_true",
                   help="treat an unequal cohomology comparison as a command error")
    r.add_argument("--timing", action="store_true",
                   help="include per-command wall time in the JSON (breaks byte determinism)")
    r.add_argument("--truncate", nargs=2, type=int, metavar=("D", "K"),
                   help="override the truncation degree and frequency")
    f = sub.add_parser("fmt", help="print a session file in canonical form")
    f.add_argument("file")
    c = sub.add_parser("corpus", help="check the bundled fixtures")
    c.add_argument("files", nargs="*", help="fixture files (default: bundled corpus)")
    args = ap.parse_args(argv)

    if args.cmd == "corpus":
        return check_corpus(args.files or None)
    try:
        with open(args.file, encoding="utf-8") as fh:
            src = fh.read()
        spec = parse(src, os.path.basename(args.file))
    except OSError as exc:
        print(f"pfaffkit: {exc}", file=sys.stderr)
        return 2
    except ParseError as exc:
        print(f"{args.file}:{exc.line}:{exc.col}: error: {exc.bare}", file=sys.stderr)
        if exc.expected:
            print(f"    expected one of: {', '.join(exc.expected)}", file=sys.stderr)
        return 2
    if args.cmd == "fmt":
        sys.stdout.write(pretty(spec))
        return 0
    trunc = None
    if args.truncate:
        D, K = args.truncate
        if D < 1 or K < 1:
            print("pfaffkit: truncation parameters must be positive", file=sys.stderr)
            return 2
        trunc = Truncation(D, K)
    report, timings = run(spec, strict_theorem1=args.strict_theorem1, truncation=trunc, timing=args.timing)
    text = dumps(report)
    if args.json == "-":
        sys.stdout.write(text)
        sys.stderr.write(summary(report, timings))
    else:
        if args.json:
            with open(args.json, "w", encoding="utf-8") as fh:
                fh.write(text)
        sys.stdout.write(summary(report, timings))
    return exit_code(report)


if __name__ == "__main__":
    sys.exit(main())
