from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pfaffkit.cli import fixture_paths
from pfaffkit.dsl import (
    BinOp,
    Call,
    Name,
    Neg,
    Num,
    ParseError,
    Pow,
    Vec,
    parse,
    parse_statements,
    pretty,
    show_expr,
)
from pfaffkit.forms import DifferentialForm, VectorField

TORUS_SESSION = """
chart T (x: periodic, y: flat)
system S = <dy>
algebra g (e1)
action phi of g on S (e1 -> d/dy)
model M = foliate S action phi
cohomology vertical M
compare-theorem1 M
"""


def test_two_command_session():
    s = parse(TORUS_SESSION)
    assert [c.name for c in s.commands] == ["cohomology", "compare-theorem1"]
    assert sum(1 for b in s.bindings.values() if b.kind == "action") == 1
    assert list(s.chart.names) == ["x", "y"] and s.chart.coord("x").periodic
    assert s.lookup("M", "model").p == 1


def test_cylinder_field():
    s = parse("chart C (t, th: periodic)\nfield xi = t*d/dt + d/dth\n")
    c = s.chart
    assert s.bindings["xi"].value == VectorField.coordinate(c, "t").scale(c.var("t")) + VectorField.coordinate(c, "th")


def test_forms_and_wedge_spellings():
    s = parse("chart R (x, y)\nform a = dx ∧ dy\nform b = dx /\\ dy\nform c = x*dy - y*dx\n")
    c = s.chart
    assert s.bindings["a"].value == s.bindings["b"].value
    dx, dy = DifferentialForm.differential(c, "x"), DifferentialForm.differential(c, "y")
    assert s.bindings["c"].value == dy.scale(c.var("x")) - dx.scale(c.var("y"))


def test_dangling_wedge():
    with pytest.raises(ParseError) as info:
        parse("chart R (x, y)\nform w = dx ∧\n")
    e = info.value
    assert (e.line, e.col) == (2, 13)
    assert "dangling" in str(e) and "name" in e.expected


@pytest.mark.parametrize("src, line, col, fragment", [
    ("chart R (x, y)\nform w = dz\n", 2, 10, "unknown name"),
    ("chart R (x, y)\nchart Q (z)\n", 2, 1, "one chart per session"),
    ("chart R (x: periodic)\nscalar f = x\n", 2, 12, "sin/cos"),
    ("chart R (x, y)\nform w = (dx\n", 2, 10, "unclosed"),
    ("chart R (x,y)\ncheck-integrable S\n", 2, 18, "unknown system"),
    ("chart R (x,y)\nform w = dx\nform w = dy\n", 3, 1, "already bound"),
    ("chart R (x, y)\nfoo bar\n", 2, 1, "unknown statement"),
    ("chart R (x, y)\ntruncate degree 0 freq 2\n", 2, 1, "positive"),
    ("chart R (x, y)\nscalar f = 1/x\n", 2, 13, "localization"),
    ("chart R(x,y)\nscalar f = x $ y\n", 2, 14, "unexpected character"),
    ("form w = dx\n", 1, 1, "chart"),
])
def test_diagnostics(src, line, col, fragment):
    with pytest.raises(ParseError) as info:
        parse(src)
    assert (info.value.line, info.value.col) == (line, col)
    assert fragment in str(info.value)


def test_action_errors():
    base = "chart R (x, y)\nsystem S = <dy>\nalgebra g (e1, e2)\n"
    with pytest.raises(ParseError):
        parse(base + "action phi of g on S (e1 -> d/dy)\n")
    with pytest.raises(ParseError):
        parse(base + "action phi of h on S (e1 -> d/dy, e2 -> d/dx)\n")


def test_empty_session():
    s = parse("")
    assert s.chart is None and s.commands == []
    s = parse("# only a comment\n\n")
    assert s.commands == []


def test_fixture_fixpoint():
    for path in fixture_paths():
        src = Path(path).read_text()
        once = pretty(parse(src))
        assert pretty(parse(once)) == once, path
        assert parse_statements(once) == parse_statements(src)


def test_witness_strings_are_replayable():
    s = parse("chart T (x: periodic, y: periodic)\nform w = dx∧dy\nform v = -dx∧dy + 2*cos(y)*dx∧dy\n")
    assert s.bindings["w"].value.degree == 2


atoms = st.one_of(
    st.integers(min_value=0, max_value=99).map(Num),
    st.sampled_from(["x", "y", "dx", "f", "e1"]).map(Name),
    st.sampled_from(["x", "y"]).map(Vec),
)


def _extend(inner):
    return st.one_of(
        st.tuples(st.sampled_from(["+", "-", "*", "/", "∧"]), inner, inner).map(lambda t: BinOp(*t)),
        inner.map(Neg),
        st.tuples(inner, st.integers(min_value=1, max_value=5)).map(lambda t: Pow(*t)),
        st.tuples(st.sampled_from(["sin", "cos"]), inner).map(lambda t: Call(*t)),
    )


exprs = st.recursive(atoms, _extend, max_leaves=12)


@settings(max_examples=200, deadline=None)
@given(exprs)
def test_expression_print_parse_fixpoint(e):
    text = show_expr(e)
    (decl,) = parse_statements(f"form w = {text}\n")
    assert decl.expr == e
    assert show_expr(decl.expr) == text
