"""Differential forms, vector fields and vector-valued 1-forms on a chart.

Forms are stored sparsely as ``{increasing index tuple: coefficient}``; all
signs come from the parity of sorting permutations.
"""

from __future__ import annotations

from fractions import Fraction
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .scalars import Chart, ScalarError, ScalarExpr, _coerce

__all__ = [
    "DifferentialForm",
    "VectorField",
    "VectorValuedOneForm",
    "wedge",
    "exterior_d",
    "interior",
    "lie_bracket",
    "lie_derivative",
    "insert_vv",
    "fn_derivation",
    "evaluate_form",
]


class ChartMismatch(ScalarError):
    pass


def _same_chart(a: Chart, b: Chart) -> None:
    if a is not b and a != b:
        raise ChartMismatch(f"chart mismatch: {a.name!r} vs {b.name!r}")


def sort_sign(seq: Sequence[int]):
    """Sort ``seq``; return ``(sorted tuple, sign)`` or ``(None, 0)`` on repeats."""
    if len(set(seq)) != len(seq):
        return None, 0
    inv = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq)):
            if seq[i] > seq[j]:
                inv += 1
    return tuple(sorted(seq)), (-1 if inv & 1 else 1)


def _scal(chart, value) -> ScalarExpr:
    out = _coerce(chart, value)
    if out is NotImplemented:
        raise TypeError(f"cannot use {type(value).__name__} as a coefficient")
    return out


class DifferentialForm:
    """A homogeneous differential form of fixed degree."""

    __slots__ = ("chart", "degree", "terms")

    def __init__(self, chart: Chart, degree: int, terms: Mapping | None = None):
        self.chart = chart
        self.degree = degree
        clean = {}
        for key, coeff in (terms or {}).items():
            key = tuple(key)
            if len(key) != degree:
                raise ValueError(f"index tuple {key} does not have length {degree}")
            if any(a >= b for a, b in zip(key, key[1:])):
                raise ValueError(f"index tuple {key} is not strictly increasing")
            if any(i < 0 or i >= chart.dim for i in key):
                raise ValueError(f"index tuple {key} out of range")
            coeff = _scal(chart, coeff)
            if coeff.num:
                clean[key] = coeff
        self.terms = clean

    @classmethod
    def _raw(cls, chart, degree, terms):
        self = object.__new__(cls)
        self.chart = chart
        self.degree = degree
        self.terms = terms
        return self

    # -- constructors ---------------------------------------------------------
    @classmethod
    def zero(cls, chart: Chart, degree: int) -> "DifferentialForm":
        return cls._raw(chart, degree, {})

    @classmethod
    def function(cls, f: ScalarExpr) -> "DifferentialForm":
        return cls._raw(f.chart, 0, {(): f} if f.num else {})

    @classmethod
    def differential(cls, chart: Chart, name: str) -> "DifferentialForm":
        return cls._raw(chart, 1, {(chart.index[chart.coord(name).name],): chart.one()})

    @classmethod
    def basis(cls, chart: Chart, indices: Sequence[int], coeff=1) -> "DifferentialForm":
        key, sign = sort_sign(list(indices))
        if key is None:
            return cls.zero(chart, len(indices))
        return cls(chart, len(key), {key: _scal(chart, coeff) * sign})

    # -- algebra ---------------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.terms

    def __bool__(self):
        return bool(self.terms)

    def _check(self, other: "DifferentialForm") -> None:
        _same_chart(self.chart, other.chart)
        if self.degree != other.degree:
            raise ValueError(f"cannot add forms of degree {self.degree} and {other.degree}")

    def __add__(self, other):
        if not isinstance(other, DifferentialForm):
            if self.degree == 0:
                other = DifferentialForm.function(_scal(self.chart, other))
            else:
                return NotImplemented
        self._check(other)
        out = dict(self.terms)
        for k, v in other.terms.items():
            w = out[k] + v if k in out else v
            if w.num:
                out[k] = w
            else:
                out.pop(k, None)
        return DifferentialForm._raw(self.chart, self.degree, out)

    __radd__ = __add__

    def __neg__(self):
        return DifferentialForm._raw(self.chart, self.degree, {k: -v for k, v in self.terms.items()})

    def __sub__(self, other):
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, f) -> "DifferentialForm":
        f = _scal(self.chart, f)
        if not f.num:
            return DifferentialForm.zero(self.chart, self.degree)
        out = {}
        for k, v in self.terms.items():
            w = v * f
            if w.num:
                out[k] = w
        return DifferentialForm._raw(self.chart, self.degree, out)

    def __mul__(self, other):
        if isinstance(other, DifferentialForm):
            return wedge(self, other)
        if isinstance(other, (ScalarExpr, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, (ScalarExpr, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __xor__(self, other):
        return wedge(self, other)

    def __eq__(self, other):
        if isinstance(other, DifferentialForm):
            if not other.terms and not self.terms:
                return True
            return self.degree == other.degree and self.terms == other.terms and \
                (self.chart is other.chart or self.chart == other.chart)
        if isinstance(other, (int, Fraction)) and other == 0:
            return not self.terms
        return NotImplemented

    def __hash__(self):
        return hash((self.degree, frozenset(self.terms.items())))

    def coefficient(self, indices: Sequence[int]) -> ScalarExpr:
        key, sign = sort_sign(list(indices))
        if key is None:
            return self.chart.zero()
        c = self.terms.get(key)
        return c * sign if c is not None else self.chart.zero()

    def map_coefficients(self, fn) -> "DifferentialForm":
        out = {}
        for k, v in self.terms.items():
            w = fn(v)
            if w.num:
                out[k] = w
        return DifferentialForm._raw(self.chart, self.degree, out)

    # -- printing -----------------------------------------------------------------------
    def __str__(self):
        if not self.terms:
            return "0"
        names = self.chart.names
        pieces = []
        for key in sorted(self.terms):
            coeff = self.terms[key]
            basis = "∧".join("d" + names[i] for i in key)
            cs = str(coeff)
            if not basis:
                pieces.append(cs)
                continue
            if coeff == 1:
                pieces.append(basis)
            elif coeff == -1:
                pieces.append("-" + basis)
            elif coeff.nterms == 1:
                pieces.append(f"{cs}*{basis}")
            else:
                pieces.append(f"({cs})*{basis}")
        out = pieces[0]
        for p in pieces[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __repr__(self):
        return f"DifferentialForm<{self.degree}>({self})"


class VectorField:
    __slots__ = ("chart", "components")

    def __init__(self, chart: Chart, components: Sequence):
        if len(components) != chart.dim:
            raise ValueError(f"vector field needs {chart.dim} components, got {len(components)}")
        self.chart = chart
        self.components = tuple(_scal(chart, c) for c in components)

    @classmethod
    def coordinate(cls, chart: Chart, name: str) -> "VectorField":
        i = chart.index[chart.coord(name).name]
        return cls(chart, [1 if j == i else 0 for j in range(chart.dim)])

    @classmethod
    def zero(cls, chart: Chart) -> "VectorField":
        return cls(chart, [0] * chart.dim)

    def __call__(self, f: ScalarExpr) -> ScalarExpr:
        """Directional derivative of a scalar."""
        out = self.chart.zero()
        for c, name in zip(self.components, self.chart.names):
            if c.num:
                df = f.partial(name)
                if df.num:
                    out = out + c * df
        return out

    def is_zero(self) -> bool:
        return not any(c.num for c in self.components)

    def __add__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        _same_chart(self.chart, other.chart)
        return VectorField(self.chart, [a + b for a, b in zip(self.components, other.components)])

    def __neg__(self):
        return VectorField(self.chart, [-a for a in self.components])

    def __sub__(self, other):
        return self + (-other)

    def scale(self, f) -> "VectorField":
        f = _scal(self.chart, f)
        return VectorField(self.chart, [a * f for a in self.components])

    def __mul__(self, other):
        if isinstance(other, (ScalarExpr, int, Fraction)):
            return self.scale(other)
        return NotImplemented

    __rmul__ = __mul__

    def __eq__(self, other):
        if not isinstance(other, VectorField):
            return NotImplemented
        return (self.chart is other.chart or self.chart == other.chart) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __str__(self):
        pieces = []
        for c, name in zip(self.components, self.chart.names):
            if not c.num:
                continue
            basis = f"d/d{name}"
            if c == 1:
                pieces.append(basis)
            elif c == -1:
                pieces.append("-" + basis)
            elif c.nterms == 1:
                pieces.append(f"{c}*{basis}")
            else:
                pieces.append(f"({c})*{basis}")
        if not pieces:
            return "0"
        out = pieces[0]
        for p in pieces[1:]:
            out += f" - {p[1:]}" if p.startswith("-") else f" + {p}"
        return out

    def __repr__(self):
        return f"VectorField({self})"


class VectorValuedOneForm:
    """A (1,1)-tensor given by its coordinate matrix.

    ``matrix[i][j]`` is the ``i``-th component of ``u(d/dx^j)``.
    """

    __slots__ = ("chart", "matrix")

    def __init__(self, chart: Chart, matrix: Sequence[Sequence]):
        n = chart.dim
        if len(matrix) != n or any(len(row) != n for row in matrix):
            raise ValueError(f"vector-valued 1-form needs a {n}x{n} matrix")
        self.chart = chart
        self.matrix = tuple(tuple(_scal(chart, x) for x in row) for row in matrix)

    @classmethod
    def identity(cls, chart: Chart) -> "VectorValuedOneForm":
        n = chart.dim
        return cls(chart, [[1 if i == j else 0 for j in range(n)] for i in range(n)])

    @classmethod
    def zero(cls, chart: Chart) -> "VectorValuedOneForm":
        n = chart.dim
        return cls(chart, [[0] * n for _ in range(n)])

    @classmethod
    def tensor(cls, field: VectorField, form: DifferentialForm) -> "VectorValuedOneForm":
        """``field ⊗ form`` for a 1-form ``form``."""
        if form.degree != 1:
            raise ValueError("tensor needs a 1-form")
        _same_chart(field.chart, form.chart)
        n = field.chart.dim
        row = [form.coefficient((j,)) for j in range(n)]
        return cls(field.chart, [[field.components[i] * row[j] for j in range(n)] for i in range(n)])

    def __call__(self, xi: VectorField) -> VectorField:
        _same_chart(self.chart, xi.chart)
        n = self.chart.dim
        comps = []
        for i in range(n):
            acc = self.chart.zero()
            for j in range(n):
                if self.matrix[i][j].num and xi.components[j].num:
                    acc = acc + self.matrix[i][j] * xi.components[j]
            comps.append(acc)
        return VectorField(self.chart, comps)

    def __add__(self, other):
        _same_chart(self.chart, other.chart)
        return VectorValuedOneForm(self.chart, [[a + b for a, b in zip(r1, r2)]
                                                for r1, r2 in zip(self.matrix, other.matrix)])

    def __sub__(self, other):
        _same_chart(self.chart, other.chart)
        return VectorValuedOneForm(self.chart, [[a - b for a, b in zip(r1, r2)]
                                                for r1, r2 in zip(self.matrix, other.matrix)])

    def scale(self, c) -> "VectorValuedOneForm":
        return VectorValuedOneForm(self.chart, [[a * c for a in row] for row in self.matrix])

    def compose(self, other: "VectorValuedOneForm") -> "VectorValuedOneForm":
        """Matrix of ``self ∘ other``."""
        _same_chart(self.chart, other.chart)
        n = self.chart.dim
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = self.chart.zero()
                for k in range(n):
                    a, b = self.matrix[i][k], other.matrix[k][j]
                    if a.num and b.num:
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return VectorValuedOneForm(self.chart, out)

    def __matmul__(self, other):
        return self.compose(other)

    def __eq__(self, other):
        if not isinstance(other, VectorValuedOneForm):
            return NotImplemented
        return self.matrix == other.matrix

    def __hash__(self):
        return hash(self.matrix)

    def is_zero(self) -> bool:
        return not any(x.num for row in self.matrix for x in row)

    def __repr__(self):
        rows = "; ".join(", ".join(str(x) for x in row) for row in self.matrix)
        return f"VectorValuedOneForm[{rows}]"


# ---------------------------------------------------------------------------
# Operations


def wedge(omega: DifferentialForm, mu: DifferentialForm) -> DifferentialForm:
    _same_chart(omega.chart, mu.chart)
    chart = omega.chart
    degree = omega.degree + mu.degree
    if degree > chart.dim:
        return DifferentialForm.zero(chart, degree)
    out: dict = {}
    for I, a in omega.terms.items():
        for J, b in mu.terms.items():
            if set(I) & set(J):
                continue
            inv = sum(1 for i in I for j in J if i > j)
            key = tuple(sorted(I + J))
            c = a * b
            if inv & 1:
                c = -c
            if key in out:
                c = out[key] + c
            if c.num:
                out[key] = c
            else:
                out.pop(key, None)
    return DifferentialForm._raw(chart, degree, out)


def exterior_d(omega: DifferentialForm) -> DifferentialForm:
    chart = omega.chart
    degree = omega.degree + 1
    if degree > chart.dim:
        return DifferentialForm.zero(chart, degree)
    names = chart.names
    out: dict = {}
    for I, a in omega.terms.items():
        for c in range(chart.dim):
            if c in I:
                continue
            da = a.partial(names[c])
            if not da.num:
                continue
            pos = sum(1 for i in I if i < c)
            key = I[:pos] + (c,) + I[pos:]
            if pos & 1:
                da = -da
            if key in out:
                da = out[key] + da
            if da.num:
                out[key] = da
            else:
                out.pop(key, None)
    return DifferentialForm._raw(chart, degree, out)


def interior(xi: VectorField, omega: DifferentialForm) -> DifferentialForm:
    _same_chart(xi.chart, omega.chart)
    chart = omega.chart
    if omega.degree == 0:
        return DifferentialForm.zero(chart, 0)
    out: dict = {}
    for I, a in omega.terms.items():
        for p, i in enumerate(I):
            comp = xi.components[i]
            if not comp.num:
                continue
            c = a * comp
            if p & 1:
                c = -c
            key = I[:p] + I[p + 1:]
            if key in out:
                c = out[key] + c
            if c.num:
                out[key] = c
            else:
                out.pop(key, None)
    return DifferentialForm._raw(chart, omega.degree - 1, out)


def lie_bracket(xi: VectorField, eta: VectorField) -> VectorField:
    _same_chart(xi.chart, eta.chart)
    comps = [xi(b) - eta(a) for a, b in zip(xi.components, eta.components)]
    return VectorField(xi.chart, comps)


def lie_derivative(xi: VectorField, omega: DifferentialForm) -> DifferentialForm:
    """Cartan formula ``i(xi) d + d i(xi)``."""
    _same_chart(xi.chart, omega.chart)
    out = interior(xi, exterior_d(omega))
    if omega.degree:
        out = out + exterior_d(interior(xi, omega))
    return out


def insert_vv(u: VectorValuedOneForm, omega: DifferentialForm) -> DifferentialForm:
    """The degree-zero derivation ``i_u`` with ``i_u(dx^i) = dx^i ∘ u``."""
    _same_chart(u.chart, omega.chart)
    chart = omega.chart
    n = chart.dim
    out: dict = {}
    for I, a in omega.terms.items():
        for p, i in enumerate(I):
            row = u.matrix[i]
            for j in range(n):
                m = row[j]
                if not m.num:
                    continue
                if j != i and j in I:
                    continue
                key, sign = sort_sign(I[:p] + (j,) + I[p + 1:])
                c = a * m
                if sign < 0:
                    c = -c
                if key in out:
                    c = out[key] + c
                if c.num:
                    out[key] = c
                else:
                    out.pop(key, None)
    return DifferentialForm._raw(chart, omega.degree, out)


def fn_derivation(u: VectorValuedOneForm, omega: DifferentialForm) -> DifferentialForm:
    """Frölicher–Nijenhuis derivation ``d_u = i_u ∘ d - d ∘ i_u``."""
    return insert_vv(u, exterior_d(omega)) - exterior_d(insert_vv(u, omega))


def evaluate_form(omega: DifferentialForm, fields: Sequence[VectorField]) -> ScalarExpr:
    """``omega(xi_1, ..., xi_r)`` by the determinant formula."""
    if len(fields) != omega.degree:
        raise ValueError(f"a {omega.degree}-form needs {omega.degree} arguments")
    chart = omega.chart
    total = chart.zero()
    for I, a in omega.terms.items():
        rows = [[f.components[i] for f in fields] for i in I]
        total = total + a * _det(chart, rows)
    return total


def _det(chart, rows) -> ScalarExpr:
    n = len(rows)
    if n == 0:
        return chart.one()
    if n == 1:
        return rows[0][0]
    total = chart.zero()
    for j in range(n):
        if not rows[0][j].num:
            continue
        minor = [r[:j] + r[j + 1:] for r in rows[1:]]
        term = rows[0][j] * _det(chart, minor)
        total = total - term if j & 1 else total + term
    return total


def all_basis_keys(chart: Chart, degree: int) -> Iterable[tuple]:
    return combinations(range(chart.dim), degree)
