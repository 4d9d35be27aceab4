import random

import pytest
from hypothesis import given, settings

from pfaffkit.forms import (
    ChartMismatch,
    DifferentialForm,
    VectorField,
    VectorValuedOneForm,
    evaluate_form,
    exterior_d,
    fn_derivation,
    insert_vv,
    interior,
    lie_bracket,
    lie_derivative,
    wedge,
)
from pfaffkit.scalars import Chart, Coord

from randgen import CHARTS, rand_field, rand_form, rand_vv, seeds

R3 = Chart("R3", ["x", "y", "z"])
x, y, z = (R3.var(n) for n in "xyz")
dx, dy, dz = (DifferentialForm.differential(R3, n) for n in "xyz")
Dx, Dy, Dz = (VectorField.coordinate(R3, n) for n in "xyz")


def test_wedge_examples():
    assert wedge(dx, dx).is_zero()
    assert wedge(dx, dy) == -wedge(dy, dx)
    assert wedge(dx.scale(x) + dy.scale(y), dy) == wedge(dx, dy).scale(x)


def test_d_examples():
    assert exterior_d(dy.scale(x)) == wedge(dx, dy)
    assert exterior_d(dz - dx.scale(y)) == wedge(dx, dy)
    f = DifferentialForm.function(x ** 2 * y)
    assert exterior_d(exterior_d(f)).is_zero()


def test_interior_examples():
    assert interior(Dx, wedge(dx, dy)) == dy
    assert interior(Dz, wedge(dx, dy)).is_zero()
    assert interior(Dx.scale(y), wedge(dx, dy)) == dy.scale(y)
    assert interior(Dx, DifferentialForm.function(x)).is_zero()


def test_bracket_examples():
    A = Chart("A", ["u", "v"])
    Du, Dv = VectorField.coordinate(A, "u"), VectorField.coordinate(A, "v")
    u, v = A.var("u"), A.var("v")
    assert lie_bracket(Dx, Dy).is_zero()
    # oracle: [X, Y]^i = X(Y^i) - Y(X^i) expanded by hand
    assert lie_bracket(Du, Du.scale(u) + Dv.scale(v)) == Du
    C = Chart("C", ["t", Coord("th", True)])
    Dt, Dth = VectorField.coordinate(C, "t"), VectorField.coordinate(C, "th")
    assert lie_bracket(Dt.scale(C.var("t")) + Dth, Dth).is_zero()


def test_lie_derivative_examples():
    assert lie_derivative(Dx, dx.scale(x)) == dx
    f = y ** 3 + y
    assert lie_derivative(Dy, dx.scale(f)) == dx.scale(3 * y ** 2 + 1)


def test_insert_examples():
    Id = VectorValuedOneForm.identity(R3)
    w = wedge(dx, dy)
    assert insert_vv(Id, w) == w.scale(2)
    assert insert_vv(Id, DifferentialForm.function(x)).is_zero()
    R2 = Chart("R2", ["x", "y"])
    u = VectorValuedOneForm.tensor(VectorField.coordinate(R2, "x"), DifferentialForm.differential(R2, "x"))
    dxy = wedge(DifferentialForm.differential(R2, "x"), DifferentialForm.differential(R2, "y"))
    assert insert_vv(u, dxy) == dxy


def test_fn_derivation_examples():
    Id = VectorValuedOneForm.identity(R3)
    assert fn_derivation(Id, dy.scale(x)) == wedge(dx, dy)
    R2 = Chart("R2", ["x", "y"])
    u = VectorValuedOneForm.tensor(VectorField.coordinate(R2, "x"), DifferentialForm.differential(R2, "x"))
    f = DifferentialForm.function(R2.var("x") ** 2 * R2.var("y"))
    assert fn_derivation(u, f) == DifferentialForm.differential(R2, "x").scale(2 * R2.var("x") * R2.var("y"))


def test_chart_mismatch():
    other = Chart("R3b", ["x", "y", "z"])
    with pytest.raises(ChartMismatch):
        wedge(dx, DifferentialForm.differential(other, "x"))


def _case(seed):
    rng = random.Random(seed)
    c = rng.choice(CHARTS)
    k = rng.randint(0, c.dim)
    l = rng.randint(0, c.dim - k)
    return rng, c, rand_form(rng, c, k), rand_form(rng, c, l)


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_d_squared_zero(seed):
    _, _, w, _ = _case(seed)
    assert exterior_d(exterior_d(w)).is_zero()


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_cartan_formula_and_leibniz(seed):
    rng, c, w, m = _case(seed)
    xi = rand_field(rng, c)
    lhs = lie_derivative(xi, w)
    rhs = exterior_d(interior(xi, w)) + interior(xi, exterior_d(w)) if w.degree else \
        interior(xi, exterior_d(w))
    assert lhs == rhs
    assert lie_derivative(xi, wedge(w, m)) == wedge(lie_derivative(xi, w), m) + wedge(w, lie_derivative(xi, m))
    sign = -1 if w.degree % 2 else 1
    assert exterior_d(wedge(w, m)) == wedge(exterior_d(w), m) + wedge(w, exterior_d(m)).scale(sign)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_bracket_of_lie_derivatives(seed):
    rng, c, w, _ = _case(seed)
    a, b = rand_field(rng, c), rand_field(rng, c)
    lhs = lie_derivative(lie_bracket(a, b), w)
    rhs = lie_derivative(a, lie_derivative(b, w)) - lie_derivative(b, lie_derivative(a, w))
    assert lhs == rhs


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_insertion_laws(seed):
    rng, c, w, m = _case(seed)
    u = rand_vv(rng, c)
    assert insert_vv(u, wedge(w, m)) == wedge(insert_vv(u, w), m) + wedge(w, insert_vv(u, m))
    if w.degree:
        fields = [rand_field(rng, c) for _ in range(w.degree)]
        total = c.zero()
        for j in range(w.degree):
            args = list(fields)
            args[j] = u(args[j])
            total = total + evaluate_form(w, args)
        assert evaluate_form(insert_vv(u, w), fields) == total


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_fn_derivation_laws(seed):
    rng, c, w, m = _case(seed)
    u, u2 = rand_vv(rng, c), rand_vv(rng, c)
    sign = -1 if w.degree % 2 else 1
    assert fn_derivation(u, wedge(w, m)) == wedge(fn_derivation(u, w), m) + wedge(w, fn_derivation(u, m)).scale(sign)
    assert fn_derivation(VectorValuedOneForm.identity(c), w) == exterior_d(w)
    assert fn_derivation(u + u2, w) == fn_derivation(u, w) + fn_derivation(u2, w)
    assert (fn_derivation(u, exterior_d(w)) + exterior_d(fn_derivation(u, w))).is_zero()
