"""Acceptance criteria AC1 to AC10; the summary lists one line per criterion."""

import io
import json
import random
import time
from importlib import resources
from math import comb
from pathlib import Path

import jsonschema
import pytest

from pfaffkit.cli import check_corpus, dumps, fixture_paths, run_file
from pfaffkit.cohomology import (
    CEModule,
    ce_cohomology,
    obstruction_scan,
    theorem1_compare,
    vertical_cohomology,
    xi_representation,
)
from pfaffkit.dsl import parse, pretty
from pfaffkit.forms import (
    DifferentialForm,
    VectorField,
    VectorValuedOneForm,
    evaluate_form,
    exterior_d,
    fn_derivation,
    insert_vv,
    interior,
    lie_derivative,
    wedge,
)
from pfaffkit.group_action import ActionSpec, LieAlgebraSpec, cartan_basis, verify_structure_equation
from pfaffkit.linalg import RationalMatrix
from pfaffkit.pfaffian import Distribution, PfaffianSystem, is_integrable, make_splitting, system_annihilating
from pfaffkit.scalars import Chart, Coord
from pfaffkit.variational import (
    FoliatedModel,
    Truncation,
    d_H,
    double_complex_check,
    horizontal_primitive,
    splitting_candidates,
)

from randgen import CHARTS, rand_bigraded, rand_field, rand_form, rand_scalar, rand_vv

criterion = pytest.mark.criterion
CASES = 200


def d(c, n):
    return DifferentialForm.differential(c, n)


def D(c, n):
    return VectorField.coordinate(c, n)


# ---------------------------------------------------------------------------
# AC1


def _pair(rng):
    c = rng.choice(CHARTS)
    k = rng.randint(0, c.dim)
    l = rng.randint(0, c.dim - k)
    return c, rand_form(rng, c, k, terms=2), rand_form(rng, c, l, terms=2)


def _unipotent_splitting(rng, c):
    """Complementary projections from a random unipotent frame."""
    fields = []
    for i, n in enumerate(c.names):
        f = D(c, n)
        for m in c.names[:i]:
            if rng.random() < 0.5:
                f = f + D(c, m).scale(rand_scalar(rng, c, terms=1, localize=0.0))
        fields.append(f)
    rng.shuffle(fields)
    k = rng.randint(0, c.dim)
    return make_splitting(Distribution(c, fields[:k]), Distribution(c, fields[k:]))


@criterion("AC1", "operator identities, 200 randomized cases each, dim <= 5, under 60 s")
def test_ac1_operator_identities():
    start = time.perf_counter()
    rng = random.Random(101)
    counts = dict.fromkeys(["d2", "cartan", "evaluation", "insert_leibniz", "fn_leibniz", "d_id", "split"], 0)
    for _ in range(CASES):
        c, w, m = _pair(rng)
        assert exterior_d(exterior_d(w)).is_zero()
        counts["d2"] += 1

        xi = rand_field(rng, c)
        rhs = interior(xi, exterior_d(w))
        if w.degree:
            rhs = rhs + exterior_d(interior(xi, w))
        assert lie_derivative(xi, w) == rhs
        counts["cartan"] += 1

        u = rand_vv(rng, c)
        if w.degree:
            fields = [rand_field(rng, c) for _ in range(w.degree)]
            total = c.zero()
            for j in range(w.degree):
                args = list(fields)
                args[j] = u(args[j])
                total = total + evaluate_form(w, args)
            assert evaluate_form(insert_vv(u, w), fields) == total
        else:
            assert insert_vv(u, w).is_zero()
        counts["evaluation"] += 1

        assert insert_vv(u, wedge(w, m)) == wedge(insert_vv(u, w), m) + wedge(w, insert_vv(u, m))
        counts["insert_leibniz"] += 1

        sign = -1 if w.degree % 2 else 1
        assert fn_derivation(u, wedge(w, m)) == \
            wedge(fn_derivation(u, w), m) + wedge(w, fn_derivation(u, m)).scale(sign)
        counts["fn_leibniz"] += 1

        assert fn_derivation(VectorValuedOneForm.identity(c), w) == exterior_d(w)
        counts["d_id"] += 1

    splits = {}
    for _ in range(CASES):
        c = rng.choice(CHARTS)
        if c.name not in splits or rng.random() < 0.1:
            splits[c.name] = _unipotent_splitting(rng, c)
        sp = splits[c.name]
        w = rand_form(rng, c, rng.randint(0, c.dim), terms=2)
        assert fn_derivation(sp.V, w) + fn_derivation(sp.H, w) == exterior_d(w)
        counts["split"] += 1
    elapsed = time.perf_counter() - start
    assert all(v >= CASES for v in counts.values()), counts
    assert max(c.dim for c in CHARTS) <= 5
    assert elapsed < 60, f"{elapsed:.1f} s"


# ---------------------------------------------------------------------------
# AC2

R3 = Chart("R3", ["x", "y", "z"])


def _split3(V, H):
    return make_splitting(Distribution(R3, V), Distribution(R3, H))


@criterion("AC2", "double complex: d_V^2 = d_H^2 = 0 on integrable splittings, contact witness")
def test_ac2_double_complex():
    x, y, z = (R3.var(n) for n in "xyz")
    Dx, Dy, Dz = D(R3, "x"), D(R3, "y"), D(R3, "z")
    integrable = [
        _split3([Dz], [Dx, Dy]),
        _split3([Dz], [Dx + Dz.scale(z), Dy]),
        _split3([Dy, Dz + Dy.scale(x)], [Dx]),
        _split3([Dx.scale(x) + Dy], [Dx, Dz]),
    ]
    cands = splitting_candidates(R3)
    for sp in integrable:
        rep = double_complex_check(sp, cands)
        assert rep.dV_squared_zero and rep.dH_squared_zero and rep.anticommute and rep.sum_is_d
    contact = _split3([Dz], [Dy, Dx + Dz.scale(y)])
    rep = double_complex_check(contact, cands)
    assert not rep.dH_squared_zero
    w = rep.witness
    assert not fn_derivation(contact.H, fn_derivation(contact.H, w)).is_zero()


# ---------------------------------------------------------------------------
# AC3

SPH = Chart("S", ["x1", "x2", "x3"], denominators=[("add", ("pow", "x1", 2), ("pow", "x2", 2), ("pow", "x3", 2))])
CYL = Chart("C", ["t", Coord("th", True)])


@criterion("AC3", "Frobenius verdicts, each under 1 s")
def test_ac3_frobenius():
    cases = [
        (PfaffianSystem(R3, [d(R3, "z") - d(R3, "x").scale(R3.var("y"))]), False),
        (PfaffianSystem(R3, [d(R3, "y")]), True),
        (PfaffianSystem(SPH, [sum((d(SPH, n).scale(SPH.var(n)) for n in SPH.names[1:]),
                                  d(SPH, "x1").scale(SPH.var("x1")))]), True),
        (system_annihilating([D(CYL, "t").scale(CYL.var("t")) + D(CYL, "th")]), True),
    ]
    for S, expected in cases:
        start = time.perf_counter()
        assert is_integrable(S) is expected
        assert time.perf_counter() - start < 1.0


# ---------------------------------------------------------------------------
# AC4


@criterion("AC4", "Cartan basis of the affine action and closed abelian coframes")
def test_ac4_cartan_basis():
    A = Chart("A", ["u", "v"], denominators=["v"])
    u, v = A.var("u"), A.var("v")
    S = PfaffianSystem(A, [d(A, "u"), d(A, "v")])
    g = LieAlgebraSpec(["e1", "e2"], {("e1", "e2"): {"e1": 1}})
    B = cartan_basis(ActionSpec(g, [D(A, "u"), D(A, "u").scale(u) + D(A, "v").scale(v)], S))
    w1, w2 = B.forms
    assert w1 == d(A, "u") - d(A, "v").scale(u / v)
    assert w2 == d(A, "v").scale(1 / v)
    assert exterior_d(w1) == -wedge(w1, w2)
    assert exterior_d(w2).is_zero()
    assert verify_structure_equation(B)
    for chart, vertical in [(Chart("T", [Coord("x", True), Coord("y", True)]), ["y"]),
                            (Chart("P", [Coord("x", True), "y1", "y2"]), ["y1", "y2"])]:
        S = PfaffianSystem(chart, [d(chart, n) for n in vertical])
        act = ActionSpec(LieAlgebraSpec.abelian([f"e{i}" for i in range(len(vertical))]),
                         [D(chart, n) for n in vertical], S)
        B = cartan_basis(act)
        assert all(exterior_d(w).is_zero() for w in B.forms)
        assert verify_structure_equation(B)


# ---------------------------------------------------------------------------
# AC5, AC6


def _model(chart, vertical):
    S = PfaffianSystem(chart, [d(chart, n) for n in vertical])
    g = LieAlgebraSpec.abelian([f"e{i + 1}" for i in range(len(vertical))])
    return FoliatedModel(S, ActionSpec(g, [D(chart, n) for n in vertical], S))


TORUS = _model(Chart("T2", [Coord("x", True), Coord("y", True)]), ["y"])
CYLINDER = _model(Chart("Cyl", [Coord("x", True), "y"]), ["y"])
FLAT2 = _model(Chart("P", [Coord("x", True), "y1", "y2"]), ["y1", "y2"])
LADDER = [Truncation(D_, K) for D_ in (3, 5) for K in (3, 5, 8)]


@criterion("AC5", "torus vertical cohomology at Xi^1 is 1 for K in {3, 5, 8}")
def test_ac5_torus():
    dims = [vertical_cohomology(TORUS, Truncation(3, K)).dims[1] for K in (3, 5, 8)]
    assert dims == [1, 1, 1]


@criterion("AC6", "vertical cohomology equals CE cohomology in Xi^0 across the ladder; corrupted control unequal")
def test_ac6_comparison():
    for m in (TORUS, CYLINDER, FLAT2):
        for t in LADDER:
            rep = theorem1_compare(m, t)
            assert rep.equal, (m, t, rep.pairs)
            assert set(rep.pairs) == set(range(1, m.q + 1))
    t = Truncation(3, 3)
    space, mats = xi_representation(TORUS, t)
    corrupted = theorem1_compare(TORUS, t, [RationalMatrix(len(space), len(space)) for _ in mats])
    assert corrupted.verdict == "unequal"


# ---------------------------------------------------------------------------
# AC7


@criterion("AC7", "CE dims: abelian binomial for q <= 4, sl2 trivial module (1, 0, 0, 1)")
def test_ac7_chevalley_eilenberg():
    for q in range(1, 5):
        g = LieAlgebraSpec.abelian([f"a{i}" for i in range(q)])
        assert ce_cohomology(CEModule.trivial(g)).dims == {k: comb(q, k) for k in range(q + 1)}
    sl2 = LieAlgebraSpec(["h", "e", "f"], {("h", "e"): {"e": 2}, ("h", "f"): {"f": -2}, ("e", "f"): {"h": 1}})
    assert ce_cohomology(CEModule.trivial(sl2)).dims == {0: 1, 1: 0, 2: 0, 3: 1}


# ---------------------------------------------------------------------------
# AC8

EXACT = [
    _model(Chart("F3", ["x1", "x2", "y"]), ["y"]),
    _model(Chart("F4", ["x1", "x2", "x3", "y"]), ["y"]),
    _model(Chart("F5", ["x1", "x2", "x3", "y1", "y2"]), ["y1", "y2"]),
    _model(Chart("L4", ["x1", "x2", "y1", "y2"], denominators=[("add", ("pow", "y1", 2), 1)]), ["y1", "y2"]),
]


@criterion("AC8", "local exactness on flat models: every cocycle and top form gets a verified primitive")
def test_ac8_local_exactness():
    rng = random.Random(808)
    ok = below = top = 0
    for n in range(150):
        while True:
            M = rng.choice(EXACT)
            r = rng.randint(0, M.q)
            s = rng.randint(1, M.p)
            if s == M.p and n % 2:
                w = rand_bigraded(rng, M, r, s)
            else:
                w = d_H(M, rand_bigraded(rng, M, r, s - 1), (r, s - 1)).form
            if not w.is_zero():
                break
        P = horizontal_primitive(M, w)
        assert P.obstruction is None
        assert d_H(M, P.primitive).form == w
        ok += 1
        below += s < M.p
        top += s == M.p
    assert ok == 150 and below >= 30 and top >= 30


# ---------------------------------------------------------------------------
# AC9


@criterion("AC9", "obstruction scan excludes a 1-dim algebra with nonzero CE H^1")
def test_ac9_obstruction_scan():
    variational = vertical_cohomology(CYLINDER, Truncation(4, 3))
    assert variational.dims[1] == 0
    (out,) = obstruction_scan(variational, [("R", CEModule.trivial(LieAlgebraSpec(["e"])))])
    assert out["verdict"] == "excluded" and out["ce"]["1"] == 1
    # the bundled cylinder session runs the same scan
    path = next(p for p in fixture_paths() if Path(p).name == "cylinder.pfk")
    report, _ = run_file(path)
    scans = [c for c in report["commands"] if c["command"] == "scan-obstructions"]
    assert scans and all(c["result"]["candidates"][0]["verdict"] == "excluded" for c in scans)


# ---------------------------------------------------------------------------
# AC10


@criterion("AC10", "fixture corpus parses, runs, gives schema-valid byte-deterministic JSON, print/parse fixpoint")
def test_ac10_corpus():
    schema = json.loads((resources.files("pfaffkit") / "report.schema.json").read_text())
    paths = fixture_paths()
    assert len(paths) >= 8
    for path in paths:
        src = Path(path).read_text()
        once = pretty(parse(src))
        assert pretty(parse(once)) == once
        r1, _ = run_file(path)
        r2, _ = run_file(path)
        jsonschema.validate(r1, schema)
        assert dumps(r1) == dumps(r2)
        assert all(c["status"] == "ok" for c in r1["commands"])
    assert check_corpus(out=io.StringIO()) == 0
