import random

import pytest
from hypothesis import given, settings

from pfaffkit.forms import DifferentialForm, VectorField, VectorValuedOneForm, exterior_d, interior
from pfaffkit.pfaffian import (
    DegenerateSystem,
    Distribution,
    LocalizationNeeded,
    NotComplementary,
    PfaffianSystem,
    annihilator,
    dual_horizontal_basis,
    is_first_integral,
    is_integrable,
    is_invariant_form,
    is_symmetry,
    make_splitting,
    system_annihilating,
)
from pfaffkit.scalars import Chart, Coord

from randgen import rand_scalar, seeds

R2 = Chart("R2", ["x", "y"])
R3 = Chart("R3", ["x", "y", "z"])
SPH = Chart("S", ["x1", "x2", "x3"], denominators=[("add", ("pow", "x1", 2), ("pow", "x2", 2), ("pow", "x3", 2))])


def d(chart, n):
    return DifferentialForm.differential(chart, n)


def D(chart, n):
    return VectorField.coordinate(chart, n)


def var(chart, n):
    return chart.var(n)


def same_span(dist, fields):
    return dist.rank == len(fields) and all(dist.contains(f) for f in fields) and \
        all(Distribution(dist.chart, fields).contains(f) for f in dist.fields)


CONTACT = PfaffianSystem(R3, [d(R3, "z") - d(R3, "x").scale(var(R3, "y"))])
SPHERE = PfaffianSystem(SPH, [sum((d(SPH, n).scale(var(SPH, n)) for n in SPH.names[1:]),
                                  d(SPH, "x1").scale(var(SPH, "x1")))])


def test_annihilator_examples():
    S = PfaffianSystem(R2, [d(R2, "y")])
    assert same_span(annihilator(S), [D(R2, "x")])
    y = var(R3, "y")
    assert same_span(annihilator(CONTACT), [D(R3, "y"), D(R3, "x") + D(R3, "z").scale(y)])
    sph = annihilator(SPHERE)
    assert sph.rank == 2
    for eta in sph.fields:
        assert interior(eta, SPHERE.generators[0]).is_zero()


def test_degenerate_system():
    with pytest.raises(DegenerateSystem):
        PfaffianSystem(R2, [d(R2, "x"), d(R2, "x").scale(var(R2, "y"))])


def test_frobenius():
    assert not is_integrable(CONTACT)
    assert is_integrable(PfaffianSystem(R2, [d(R2, "y")]))
    assert is_integrable(SPHERE)
    C = Chart("C", ["t", Coord("th", True)])
    S = system_annihilating([D(C, "t").scale(var(C, "t")) + D(C, "th")])
    assert is_integrable(S)
    assert str(S.generators[0]) == "dt - t*dth"


def test_invariant_forms():
    S = PfaffianSystem(R2, [d(R2, "y")])
    y = var(R2, "y")
    assert is_invariant_form(d(R2, "y"), S)
    assert not is_invariant_form(d(R2, "y").scale(var(R2, "x")), S)
    assert is_invariant_form(d(R2, "y").scale(y ** 3 + 2 * y), S)


def test_invariant_forms_warn_on_non_integrable():
    with pytest.warns(UserWarning):
        is_invariant_form(d(R3, "z"), CONTACT)


def test_first_integrals():
    S = PfaffianSystem(R2, [d(R2, "y")])
    assert is_first_integral(var(R2, "y"), S)
    assert not is_first_integral(var(R2, "x"), S)
    r2 = sum((var(SPH, n) ** 2 for n in SPH.names), SPH.zero())
    assert is_first_integral(r2, SPHERE)


def test_symmetries():
    S = PfaffianSystem(R2, [d(R2, "y")])
    assert is_symmetry(D(R2, "x"), S)
    assert is_symmetry(D(R2, "y"), S)
    T = PfaffianSystem(R2, [d(R2, "y") - d(R2, "x")])
    assert not is_symmetry(D(R2, "x").scale(var(R2, "y")), T)


def test_splitting_examples():
    x = var(R2, "x")
    sp = make_splitting(Distribution(R2, [D(R2, "y")]), Distribution(R2, [D(R2, "x")]))
    assert sp.V == VectorValuedOneForm.tensor(D(R2, "y"), d(R2, "y"))
    assert sp.H == VectorValuedOneForm.tensor(D(R2, "x"), d(R2, "x"))
    sp = make_splitting(Distribution(R2, [D(R2, "y") + D(R2, "x").scale(x)]), Distribution(R2, [D(R2, "x")]))
    assert sp.H == VectorValuedOneForm.tensor(D(R2, "x"), d(R2, "x") - d(R2, "y").scale(x))
    assert sp.V == VectorValuedOneForm.tensor(D(R2, "y") + D(R2, "x").scale(x), d(R2, "y"))
    assert all(sp.check().values())
    A = Chart("A", ["u", "v"], denominators=["v"])
    full = Distribution(A, [D(A, "u"), D(A, "u").scale(var(A, "u")) + D(A, "v").scale(var(A, "v"))])
    sp = make_splitting(full, Distribution(A, []))
    assert sp.V == VectorValuedOneForm.identity(A)
    assert sp.H.is_zero()


def test_splitting_errors():
    with pytest.raises(NotComplementary):
        make_splitting(Distribution(R2, [D(R2, "x")]), Distribution(R2, [D(R2, "x").scale(var(R2, "y"))]))
    with pytest.raises(NotComplementary):
        make_splitting(Distribution(R2, [D(R2, "x")]), Distribution(R2, []))
    with pytest.raises(LocalizationNeeded) as info:
        make_splitting(Distribution(R2, [D(R2, "x")]), Distribution(R2, [D(R2, "x") + D(R2, "y").scale(var(R2, "y"))]))
    assert str(info.value.factor) == "y"


def test_dual_horizontal_basis():
    x, y = var(R2, "x"), var(R2, "y")
    Y = x * y + 1
    S = PfaffianSystem(R2, [d(R2, "y") - d(R2, "x").scale(Y)])
    (eta,) = dual_horizontal_basis(S, ["x"])
    assert eta == D(R2, "x") + D(R2, "y").scale(Y)
    (eta,) = dual_horizontal_basis(PfaffianSystem(R2, [d(R2, "y")]), ["x"])
    assert eta == D(R2, "x")
    basis = dual_horizontal_basis(CONTACT, ["x", "y"])
    assert len(basis) == 2 and not basis.commuting
    with pytest.raises(DegenerateSystem):
        dual_horizontal_basis(PfaffianSystem(R2, [d(R2, "y")]), ["y"])


def test_differential_algebra_of_invariant_forms():
    S = SPHERE
    r2 = sum((var(SPH, n) ** 2 for n in SPH.names), SPH.zero())
    w = S.generators[0].scale(1 / r2)
    assert is_invariant_form(w, S)
    assert is_invariant_form(exterior_d(w), S)
    assert is_invariant_form(w.scale(r2 ** 2 + 3), S)


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_tangent_fields_are_symmetries(seed):
    rng = random.Random(seed)
    for S in (SPHERE, PfaffianSystem(R3, [d(R3, "z")])):
        eta = VectorField.zero(S.chart)
        for f in S.distribution().fields:
            eta = eta + f.scale(rand_scalar(rng, S.chart, localize=0.0))
        assert is_symmetry(eta, S)
        for g in S.generators:
            assert interior(eta, g).is_zero()


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_random_splittings_are_projections(seed):
    rng = random.Random(seed)
    c = R3
    # unipotent change of frame keeps the determinant a unit
    a, b, e = (rand_scalar(rng, c, terms=2) for _ in range(3))
    f1 = D(c, "x")
    f2 = D(c, "y") + D(c, "x").scale(a)
    f3 = D(c, "z") + D(c, "x").scale(b) + D(c, "y").scale(e)
    k = rng.randint(0, 3)
    fields = [f1, f2, f3]
    rng.shuffle(fields)
    sp = make_splitting(Distribution(c, fields[:k]), Distribution(c, fields[k:]))
    assert all(sp.check().values())
