"""Bigraded forms on foliated charts, the quotients Xi^r, and the Euler operator.

A foliated model is a chart whose system is generated by coordinate
differentials ``dy^1..dy^q``; the remaining coordinates ``x^1..x^p`` are
horizontal.  Bigraded terms are written contact part first,
``a dy^J ∧ dx^I``, and the horizontal differential acts on the ``dx`` factor.

Classes in ``Xi^r`` are stored by canonical representatives:

* if some horizontal coordinate is flat, every top-degree form has a
  polynomial antiderivative along it, so ``Xi^r = 0``;
* otherwise every horizontal coordinate is periodic and the representative
  keeps the zero-frequency part in all of them.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from typing import Dict, List, NamedTuple, Sequence, Tuple

from .forms import (
    DifferentialForm,
    VectorField,
    _same_chart,
    all_basis_keys,
    exterior_d,
    fn_derivation,
    insert_vv,
    interior,
    lie_derivative,
    sort_sign,
)
from .group_action import ActionSpec, check_action, check_transversally_free
from .linalg import RationalMatrix, kernel_with_free_columns, stack
from .pfaffian import (
    Distribution,
    PfaffianSystem,
    Splitting,
    is_integrable,
    is_invariant_form,
    make_splitting,
)
from .scalars import Chart, ScalarError, ScalarExpr, _num_mul

__all__ = [
    "ModelError",
    "NoActionError",
    "TruncationError",
    "Truncation",
    "FoliatedModel",
    "BigradedForm",
    "XiClass",
    "Primitive",
    "bidegree",
    "d_H",
    "horizontal_primitive",
    "q_r",
    "d_V",
    "euler",
    "twisted_d",
    "TruncatedComplex",
    "invariant_complex",
    "equivariant_complex",
    "RelativeInvariance",
    "relative_invariance_check",
    "bidegree_components",
    "DoubleComplexReport",
    "double_complex_check",
    "splitting_candidates",
]


class ModelError(ScalarError):
    pass


class NoActionError(ModelError):
    pass


class TruncationError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Truncations


@dataclass(frozen=True)
class Truncation:
    """Weight bound ``degree`` and per-coordinate frequency bound ``freq``.

    The weight of a monomial form is its polynomial degree plus the number of
    flat coordinate differentials; ``d`` preserves it.
    """

    degree: int = 3
    freq: int = 3

    def __post_init__(self):
        if self.degree < 1 or self.freq < 1:
            raise TruncationError("truncation parameters must be positive")

    def as_dict(self) -> dict:
        return {"degree": self.degree, "freq": self.freq}


def scalar_basis(chart: Chart, names: Sequence[str], max_degree: int, freq: int) -> List[ScalarExpr]:
    """Monomial times trigonometric basis elements in the given coordinates."""
    if max_degree < 0:
        return []
    names = set(names)
    flat = [i for i, n in enumerate(chart.flat_names) if n in names]
    per = [i for i, n in enumerate(chart.periodic_names) if n in names]
    monos = []

    def rec(pos, left, cur):
        if pos == len(flat):
            monos.append(tuple(cur))
            return
        for e in range(left + 1):
            cur[flat[pos]] = e
            rec(pos + 1, left - e, cur)
        cur[flat[pos]] = 0

    rec(0, max_degree, [0] * chart._nf)
    modes = [(0, 0)] + [(k, s) for k in range(1, freq + 1) for s in (0, 1)]
    trigs = []
    for combo in product(modes, repeat=len(per)):
        t = [(0, 0)] * chart._np
        for i, m in zip(per, combo):
            t[i] = m
        trigs.append(tuple(t))
    zeros = (0,) * len(chart._den_polys)
    return [ScalarExpr._raw(chart, {(m, t): Fraction(1)}, zeros)
            for m in sorted(monos, key=lambda m: (sum(m), m)) for t in trigs]


def _key_weight(chart: Chart, key) -> int:
    return sum(1 for i in key if not chart.coords[i].periodic)


def truncated_forms(chart: Chart, degree: int, trunc: Truncation, keys=None, names=None) -> List[DifferentialForm]:
    keys = list(all_basis_keys(chart, degree)) if keys is None else list(keys)
    names = chart.names if names is None else names
    out = []
    for key in keys:
        for f in scalar_basis(chart, names, trunc.degree - _key_weight(chart, key), trunc.freq):
            out.append(DifferentialForm._raw(chart, degree, {tuple(key): f}))
    return out


class FormCoordinates:
    """Coordinates of forms in a monomial basis."""

    def __init__(self, basis: Sequence[DifferentialForm]):
        self.basis = list(basis)
        self.index = {}
        for n, b in enumerate(self.basis):
            ((key, coeff),) = b.terms.items()
            ((mt, _),) = coeff.num.items()
            self.index[(key, mt)] = n

    def __len__(self):
        return len(self.basis)

    def coords(self, omega: DifferentialForm) -> Dict[int, Fraction]:
        out = {}
        for key, coeff in omega.terms.items():
            if any(coeff.den):
                raise TruncationError(f"{coeff} has a denominator and leaves the truncated space")
            for mt, v in coeff.num.items():
                n = self.index.get((key, mt))
                if n is None:
                    raise TruncationError(f"image term {omega} leaves the truncated space")
                out[n] = v
        return out

    def matrix(self, images: Sequence[DifferentialForm]) -> RationalMatrix:
        """Columns are the coordinates of ``images``."""
        entries = {}
        for j, w in enumerate(images):
            for i, v in self.coords(w).items():
                entries[(i, j)] = v
        return RationalMatrix(len(self.basis), len(images), entries)

    def form(self, vec: Sequence) -> DifferentialForm:
        if not self.basis:
            raise ValueError("empty basis")
        out = DifferentialForm.zero(self.basis[0].chart, self.basis[0].degree)
        for v, b in zip(vec, self.basis):
            if v:
                out = out + b.scale(v)
        return out


def numerator_matrix(images: Sequence[DifferentialForm]) -> RationalMatrix:
    """Linear conditions ``sum c_j images[j] = 0`` as a rational matrix.

    All images are brought to a common denominator so that the condition is
    linear in the numerator coordinates.
    """
    if not images:
        return RationalMatrix(0, 0)
    chart = images[0].chart
    nd = len(chart._den_polys)
    top = [0] * nd
    for w in images:
        for c in w.terms.values():
            top = [max(a, b) for a, b in zip(top, c.den)]
    rows: Dict[tuple, int] = {}
    entries = {}
    for j, w in enumerate(images):
        for key, c in w.terms.items():
            num = c.num
            extra = tuple(a - b for a, b in zip(top, c.den))
            if any(extra):
                num = _num_mul(num, chart.den_power(extra))
            for mt, v in num.items():
                r = rows.setdefault((key, mt), len(rows))
                entries[(r, j)] = entries.get((r, j), 0) + v
    return RationalMatrix(len(rows), len(images), entries)


# ---------------------------------------------------------------------------
# Foliated models


class FoliatedModel:
    def __init__(self, system: PfaffianSystem, action: ActionSpec | None = None, name: str = "model"):
        chart = system.chart
        vertical = []
        for g in system.generators:
            if len(g.terms) != 1:
                raise ModelError(f"generator {g} is not a coordinate differential")
            ((key, coeff),) = g.terms.items()
            if not coeff.is_constant():
                raise ModelError(f"generator {g} is not a coordinate differential")
            vertical.append(key[0])
        if len(set(vertical)) != len(vertical):
            raise ModelError("repeated vertical coordinate")
        self.name = name
        self.chart = chart
        self.system = system
        self.v_idx = tuple(sorted(vertical))
        self.h_idx = tuple(i for i in range(chart.dim) if i not in vertical)
        self.vertical = tuple(chart.names[i] for i in self.v_idx)
        self.horizontal = tuple(chart.names[i] for i in self.h_idx)
        for d in chart.denominators:
            for x in self.horizontal:
                if d.depends_on(x):
                    raise ModelError(f"declared denominator {d} depends on horizontal coordinate {x}")
        self.flat_horizontal = [x for x in self.horizontal if not chart.coord(x).periodic]
        self.periodic_horizontal = [x for x in self.horizontal if chart.coord(x).periodic]
        self.action = action
        if action is not None:
            _same_chart(chart, action.chart)
            for f in action.fields:
                if any(f.components[i].num for i in self.h_idx):
                    raise ModelError(f"action field {f} is not vertical")
            rep = check_action(action)
            if not rep:
                raise ModelError("; ".join(rep.failures))
            tf = check_transversally_free(action)
            if not tf:
                raise ModelError(tf.diagnostic)
        self._splitting = None

    @property
    def p(self) -> int:
        return len(self.h_idx)

    @property
    def q(self) -> int:
        return len(self.v_idx)

    @property
    def xi_trivial(self) -> bool:
        """True when every class in Xi is zero."""
        return bool(self.flat_horizontal)

    def require_action(self) -> ActionSpec:
        if self.action is None:
            raise NoActionError(f"model {self.name!r} has no action attached")
        return self.action

    def splitting(self) -> Splitting:
        if self._splitting is None:
            c = self.chart
            V = Distribution(c, [VectorField.coordinate(c, n) for n in self.vertical])
            H = Distribution(c, [VectorField.coordinate(c, n) for n in self.horizontal])
            self._splitting = make_splitting(V, H)
        return self._splitting

    def split_key(self, key) -> Tuple[tuple, tuple, int]:
        """``dx^key = sign * dy^J ∧ dx^I``."""
        J = tuple(i for i in key if i in self.v_idx)
        I = tuple(i for i in key if i not in self.v_idx)
        _, sign = sort_sign(J + I)
        return J, I, sign

    def top_key(self, J) -> Tuple[tuple, int]:
        key, sign = sort_sign(tuple(J) + self.h_idx)
        return key, sign

    def __repr__(self):
        return f"FoliatedModel({self.name}: x={list(self.horizontal)}, y={list(self.vertical)})"


def bidegree(model: FoliatedModel, omega: DifferentialForm) -> Tuple[int, int]:
    degs = {(len(J), len(I)) for J, I, _ in (model.split_key(k) for k in omega.terms)}
    if len(degs) > 1:
        raise ModelError(f"{omega} is not of pure bidegree")
    if not degs:
        raise ModelError("the zero form has no bidegree; pass it explicitly")
    return degs.pop()


class BigradedForm:
    __slots__ = ("model", "r", "s", "form")

    def __init__(self, model: FoliatedModel, form: DifferentialForm, bideg: Tuple[int, int] | None = None):
        _same_chart(model.chart, form.chart)
        if form.is_zero():
            if bideg is None:
                raise ModelError("the zero form needs an explicit bidegree")
            r, s = bideg
        else:
            r, s = bidegree(model, form)
            if bideg is not None and tuple(bideg) != (r, s):
                raise ModelError(f"form has bidegree {(r, s)}, not {tuple(bideg)}")
        # zero forms may sit just past the top, where the space itself is zero
        in_range = 0 <= r <= model.q and 0 <= s <= model.p
        if r + s != form.degree or not (in_range or (form.is_zero() and r >= 0 and s >= 0)):
            raise ModelError(f"bidegree {(r, s)} is out of range")
        self.model = model
        self.r = r
        self.s = s
        self.form = form

    @property
    def bidegree(self):
        return (self.r, self.s)

    def __eq__(self, other):
        if not isinstance(other, BigradedForm):
            return NotImplemented
        return self.bidegree == other.bidegree and self.form == other.form

    def __add__(self, other):
        return BigradedForm(self.model, self.form + other.form, self.bidegree)

    def __sub__(self, other):
        return BigradedForm(self.model, self.form - other.form, self.bidegree)

    def scale(self, f) -> "BigradedForm":
        return BigradedForm(self.model, self.form.scale(f), self.bidegree)

    def is_zero(self) -> bool:
        return self.form.is_zero()

    def __str__(self):
        return str(self.form)

    def __repr__(self):
        return f"BigradedForm{self.bidegree}({self.form})"


def _as_bigraded(model, omega, bideg=None) -> BigradedForm:
    if isinstance(omega, BigradedForm):
        return omega
    return BigradedForm(model, omega, bideg)


def d_H(model: FoliatedModel, omega, bideg=None) -> BigradedForm:
    """``d_H(a dy^J ∧ dx^I) = sum_i da/dx^i dy^J ∧ dx^i ∧ dx^I``."""
    w = _as_bigraded(model, omega, bideg)
    chart = model.chart
    out = DifferentialForm.zero(chart, w.form.degree + 1)
    if w.s < model.p:
        for key, a in w.form.terms.items():
            J, I, sign = model.split_key(key)
            for i in model.h_idx:
                if i in I:
                    continue
                da = a.partial(chart.names[i])
                if da.num:
                    out = out + DifferentialForm.basis(chart, J + (i,) + I, da * sign)
    return BigradedForm(model, out, (w.r, w.s + 1))


# ---------------------------------------------------------------------------
# Horizontal primitives


class Primitive(NamedTuple):
    """``omega = d_H(primitive) + obstruction``."""

    primitive: BigradedForm | None
    obstruction: BigradedForm | None


def _integrate_top(model: FoliatedModel, w: BigradedForm) -> Primitive:
    chart = model.chart
    prim = DifferentialForm.zero(chart, w.form.degree - 1)
    obstruction = DifferentialForm.zero(chart, w.form.degree)
    for key, a in w.form.terms.items():
        J, I, sign = model.split_key(key)
        rest = a
        if model.flat_horizontal:
            steps = [(model.flat_horizontal[0], rest)]
            rest = chart.zero()
        else:
            steps = []
            for x in model.periodic_horizontal:
                zm = rest.zero_mode([x])
                part = rest - zm
                if part.num:
                    steps.append((x, part))
                rest = zm
        for x, part in steps:
            i = chart.index[x]
            pos = I.index(i)
            A = part.integrate(x)
            if (sign * (-1) ** pos) < 0:
                A = -A
            prim = prim + DifferentialForm.basis(chart, J + I[:pos] + I[pos + 1:], A)
        if rest.num:
            obstruction = obstruction + DifferentialForm._raw(chart, w.form.degree, {key: rest})
    return Primitive(BigradedForm(model, prim, (w.r, w.s - 1)),
                     None if obstruction.is_zero() else BigradedForm(model, obstruction, w.bidegree))


def _homotopy(model: FoliatedModel, w: BigradedForm) -> BigradedForm:
    """Euler-field homotopy in the flat horizontal coordinates."""
    chart = model.chart
    h_slots = [chart.slot(chart.names[i])[1] for i in model.h_idx]
    out = DifferentialForm.zero(chart, w.form.degree - 1)
    for key, a in w.form.terms.items():
        J, I, sign = model.split_key(key)
        for (m, t), v in a.num.items():
            weight = sum(m[k] for k in h_slots) + w.s
            piece = ScalarExpr._make(chart, {(m, t): v / weight}, a.den)
            for pos, i in enumerate(I):
                c = piece * chart.var(chart.names[i])
                if (sign * (-1) ** pos) < 0:
                    c = -c
                out = out + DifferentialForm.basis(chart, J + I[:pos] + I[pos + 1:], c)
    return BigradedForm(model, out, (w.r, w.s - 1))


def horizontal_primitive(model: FoliatedModel, omega, bideg=None) -> Primitive:
    """A form ``Ω`` with ``d_H Ω = ω``, or the part of ``ω`` that has none.

    In top horizontal degree the primitive is found by integrating along a
    horizontal coordinate; the zero-frequency part in periodic coordinates is
    returned as the obstruction.  Below top degree ``ω`` must be a
    ``d_H``-cocycle on a model whose horizontal coordinates are all flat.
    """
    w = _as_bigraded(model, omega, bideg)
    if w.s == 0 and model.p > 0:
        if not d_H(model, w).is_zero():
            raise ModelError("only d_H-cocycles have primitives below top degree")
        return Primitive(None, None if w.is_zero() else w)
    if w.s == model.p:
        if model.p == 0:
            return Primitive(None, None if w.is_zero() else w)
        return _integrate_top(model, w)
    if model.periodic_horizontal:
        raise ModelError("primitives below top degree need flat horizontal coordinates")
    if not d_H(model, w).is_zero():
        raise ModelError("only d_H-cocycles have primitives below top degree")
    return Primitive(_homotopy(model, w), None)


# ---------------------------------------------------------------------------
# Quotients Xi^r


class XiClass:
    """A class in ``Xi^r`` held by its canonical top-degree representative."""

    __slots__ = ("model", "r", "rep")

    def __init__(self, model: FoliatedModel, r: int, rep: DifferentialForm):
        self.model = model
        self.r = r
        self.rep = rep

    def is_zero(self) -> bool:
        return self.rep.is_zero()

    def __eq__(self, other):
        if not isinstance(other, XiClass):
            return NotImplemented
        return self.r == other.r and self.rep == other.rep

    def __hash__(self):
        return hash((self.r, self.rep))

    def __add__(self, other):
        return XiClass(self.model, self.r, self.rep + other.rep)

    def __sub__(self, other):
        return XiClass(self.model, self.r, self.rep - other.rep)

    def scale(self, f) -> "XiClass":
        return q_r(self.model, self.rep.scale(f), self.r)

    def coefficients(self) -> Dict[tuple, ScalarExpr]:
        """``{J: a_J}`` with the class written as ``sum a_J dy^J ∧ dx^top``."""
        out = {}
        for key, a in self.rep.terms.items():
            J, _, sign = self.model.split_key(key)
            out[J] = a if sign > 0 else -a
        return out

    def evaluate(self, fields: Sequence[VectorField]) -> "XiClass":
        """Contract the contact slots with ``fields`` (first field first)."""
        if len(fields) != self.r:
            raise ValueError(f"a class of degree {self.r} takes {self.r} fields")
        w = self.rep
        for f in fields:
            w = interior(f, w)
        return q_r(self.model, w, 0)

    def __str__(self):
        return str(self.rep)

    def __repr__(self):
        return f"XiClass<{self.r}>({self.rep})"


def _reduce_coefficient(model: FoliatedModel, a: ScalarExpr) -> ScalarExpr:
    if model.xi_trivial:
        return model.chart.zero()
    return a.zero_mode(model.periodic_horizontal) if model.periodic_horizontal else a


def q_r(model: FoliatedModel, omega, r: int | None = None) -> XiClass:
    """Quotient map ``Φ^{r,p} -> Xi^r``."""
    if isinstance(omega, BigradedForm):
        w = omega.form
        r_ = omega.r
        if omega.s != model.p:
            raise ModelError(f"q_r needs horizontal degree {model.p}, got {omega.s}")
    else:
        w = omega
        if w.is_zero():
            if r is None:
                raise ModelError("pass the degree of a zero form")
            r_ = r
        else:
            r_, s = bidegree(model, w)
            if s != model.p:
                raise ModelError(f"q_r needs horizontal degree {model.p}, got {s}")
    if r is not None and r != r_:
        raise ModelError(f"form has contact degree {r_}, not {r}")
    out = {}
    for key, a in w.terms.items():
        b = _reduce_coefficient(model, a)
        if b.num:
            out[key] = b
    return XiClass(model, r_, DifferentialForm._raw(model.chart, r_ + model.p, out))


def d_V(model: FoliatedModel, tau: XiClass) -> XiClass:
    """Vertical differential on ``Xi``: ``d_V(q_r ω) = q_{r+1}(dω)``."""
    model.require_action()
    if tau.r >= model.q:
        return XiClass(model, tau.r + 1, DifferentialForm.zero(model.chart, tau.r + 1 + model.p))
    return q_r(model, exterior_d(tau.rep), tau.r + 1)


def euler(model: FoliatedModel, mu) -> XiClass:
    """``E = d_V ∘ q_0`` on top-degree horizontal forms."""
    return d_V(model, q_r(model, mu, 0))


def rho(model: FoliatedModel, i: int, tau: XiClass) -> XiClass:
    """``q_0(θ(Φ(e_i)) μ)`` for ``τ = q_0 μ``."""
    A = model.require_action()
    return q_r(model, lie_derivative(A.fields[i], tau.rep), 0)


def twisted_d(model: FoliatedModel, cochain: Dict[tuple, XiClass]) -> Dict[tuple, XiClass]:
    """``∂(ω ⊗ q_0μ) = dω ⊗ q_0μ + (-1)^deg ω ω ∧ d_V q_0μ`` on ``∧g* ⊗ Xi^0``.

    ``cochain`` maps increasing index tuples of the dual basis to classes in
    ``Xi^0``; ``d e^i`` comes from the structure equation with ``c = -C``.
    """
    A = model.require_action()
    g = A.algebra
    out: Dict[tuple, XiClass] = {}

    def add(key, sign, tau):
        k, s = sort_sign(key)
        if k is None or tau.is_zero():
            return
        t = tau if s * sign > 0 else tau.scale(-1)
        out[k] = out[k] + t if k in out else t

    for S, tau in cochain.items():
        k = len(S)
        for pos, i in enumerate(S):
            for j, l in combinations(range(g.dim), 2):
                c = -g.C[j][l][i]
                if c:
                    add(S[:pos] + (j, l) + S[pos + 1:], (-1) ** pos, tau.scale(c))
        for i in range(g.dim):
            add(S + (i,), (-1) ** k, rho(model, i, tau))
    return {k: v for k, v in out.items() if not v.is_zero()}


# ---------------------------------------------------------------------------
# Truncated complexes of forms


@dataclass
class TruncatedComplex:
    """Finite matrix model: ``maps[k]`` sends position ``k`` to ``k+1``."""

    label: str
    degrees: List[int]
    dims: List[int]
    maps: List[RationalMatrix]
    bases: List[List[DifferentialForm]] = field(default_factory=list)
    truncation: Truncation | None = None

    def cohomology(self) -> Dict[int, int]:
        from .linalg import cohomology_dim

        out = {}
        for n, deg in enumerate(self.degrees):
            d_in = self.maps[n - 1] if n > 0 else RationalMatrix(self.dims[n], 0)
            d_out = self.maps[n] if n < len(self.maps) else RationalMatrix(0, self.dims[n])
            out[deg] = cohomology_dim(d_in, d_out)
        return out


def _subspace_complex(label, chart, degrees, trunc, conditions) -> TruncatedComplex:
    """Complex of truncated forms cut out by linear ``conditions`` with ``d``.

    ``conditions(form)`` returns the forms that must vanish.
    """
    spaces = []
    for l in degrees:
        amb = FormCoordinates(truncated_forms(chart, l, trunc))
        images = [conditions(b) for b in amb.basis]
        ncond = max((len(x) for x in images), default=0)
        blocks = [numerator_matrix([x[c] for x in images]) for c in range(ncond)]
        C = stack(blocks, len(amb)) if blocks else RationalMatrix(0, len(amb))
        free, ker = kernel_with_free_columns(C)
        spaces.append((amb, C, ker, free))
    maps = []
    for n in range(len(degrees) - 1):
        amb, _, ker, _ = spaces[n]
        amb2, C2, ker2, free2 = spaces[n + 1]
        cols = []
        for vec in ker:
            dw = exterior_d(amb.form(vec))
            coords = amb2.coords(dw)
            full = [coords.get(i, Fraction(0)) for i in range(len(amb2))]
            if any(C2.apply(full)):
                raise TruncationError(f"{label}: d leaves the subcomplex at degree {degrees[n]}")
            cols.append([full[j] for j in free2])
        maps.append(RationalMatrix(len(ker2), len(ker),
                                   {(i, j): v for j, col in enumerate(cols) for i, v in enumerate(col) if v}))
    bases = [[amb.form(vec) for vec in ker] for amb, _, ker, _ in spaces]
    return TruncatedComplex(label, list(degrees), [len(b) for b in bases], maps, bases, trunc)


def invariant_complex(S: PfaffianSystem, trunc: Truncation) -> TruncatedComplex:
    """Truncated invariant forms of degrees ``0..q`` with ``d``."""
    if not is_integrable(S):
        raise ModelError("the invariant complex needs an integrable system")
    etas = S.distribution().fields

    def conditions(w):
        dw = exterior_d(w)
        return [interior(e, w) for e in etas] + [interior(e, dw) for e in etas] if w.degree else \
            [interior(e, dw) for e in etas]

    return _subspace_complex("invariant", S.chart, range(S.q + 1), trunc, conditions)


def equivariant_complex(model: FoliatedModel, trunc: Truncation) -> TruncatedComplex:
    """Truncated horizontal forms invariant under the action, degrees ``0..p``."""
    A = model.require_action()

    def conditions(w):
        out = [lie_derivative(f, w) for f in A.fields]
        if w.degree:
            out += [interior(f, w) for f in A.fields]
        return out

    return _subspace_complex("equivariant", model.chart, range(model.p + 1), trunc, conditions)


# ---------------------------------------------------------------------------
# Relative invariance


def bidegree_components(split: Splitting, omega: DifferentialForm) -> Dict[int, DifferentialForm]:
    """Split ``ω`` by horizontal degree ``s`` using the eigenvalues of ``i_H``."""
    l = omega.degree
    out = {}
    for s in range(l + 1):
        w = omega
        for t in range(l + 1):
            if t == s:
                continue
            w = (insert_vv(split.H, w) - w.scale(t)).scale(Fraction(1, s - t))
        if not w.is_zero():
            out[s] = w
    return out


@dataclass
class RelativeInvariance:
    conditions: List[Tuple[Tuple[int, int], bool]]
    relatively_invariant: bool
    d_omega_invariant: bool

    def as_dict(self) -> dict:
        return {
            "conditions": [{"bidegree": list(b), "holds": h} for b, h in self.conditions],
            "relatively_invariant": self.relatively_invariant,
            "d_omega_invariant": self.d_omega_invariant,
        }


def relative_invariance_check(omega: DifferentialForm, model) -> RelativeInvariance:
    """Cancellation conditions for ``dω`` to be of pure contact type.

    Condition ``s`` (``1 <= s <= ℓ+1``) asks that the type ``(ℓ+1-s, s)`` part
    ``d_H ω^{ℓ+1-s, s-1} + d_V ω^{ℓ-s, s}`` vanish, with Frölicher–Nijenhuis
    operators of the splitting.  ``model`` is a FoliatedModel or a Splitting.
    """
    if isinstance(model, FoliatedModel):
        split, system = model.splitting(), model.system
    else:
        split, system = model, model.vertical_system()
    _same_chart(omega.chart, split.chart)
    l = omega.degree
    comps = bidegree_components(split, omega)
    zero = DifferentialForm.zero(omega.chart, l)
    conds = []
    for s in range(1, l + 2):
        lo = comps.get(s - 1, zero)
        hi = comps.get(s, zero)
        expr = fn_derivation(split.H, lo)
        if s <= l:
            expr = expr + fn_derivation(split.V, hi)
        conds.append(((l + 1 - s, s), expr.is_zero()))
    rel = all(h for _, h in conds)
    dinv = is_invariant_form(exterior_d(omega), system)
    if rel and not dinv:
        raise AssertionError("cancellation conditions hold but dω is not invariant")
    return RelativeInvariance(conds, rel, dinv)


# ---------------------------------------------------------------------------
# Double complex of a splitting


@dataclass
class DoubleComplexReport:
    dV_squared_zero: bool
    dH_squared_zero: bool
    anticommute: bool
    sum_is_d: bool
    witness: DifferentialForm | None
    checked: int

    def as_dict(self) -> dict:
        return {
            "dV_squared_zero": self.dV_squared_zero,
            "dH_squared_zero": self.dH_squared_zero,
            "anticommute": self.anticommute,
            "sum_is_d": self.sum_is_d,
            "witness": None if self.witness is None else str(self.witness),
            "checked": self.checked,
        }


def splitting_candidates(chart: Chart, trunc: Truncation | None = None, max_degree: int | None = None
                         ) -> List[DifferentialForm]:
    """Monomial test forms of every degree below the top two, in a small truncation."""
    trunc = trunc or Truncation(2, 1)
    top = chart.dim - 2 if max_degree is None else max_degree
    out = []
    for k in range(0, max(top, 0) + 1):
        out.extend(truncated_forms(chart, k, trunc))
    return out


def double_complex_check(split: Splitting, candidates: Sequence[DifferentialForm]) -> DoubleComplexReport:
    """Test ``d_V² = 0``, ``d_H² = 0``, ``d_V d_H + d_H d_V = 0`` and ``d_V + d_H = d``.

    ``d_V`` and ``d_H`` are the derivations of the projections.  The witness
    is the first candidate with ``d_H² ω ≠ 0``.
    """
    v2 = h2 = anti = total = True
    witness = None
    for w in candidates:
        dv = fn_derivation(split.V, w)
        dh = fn_derivation(split.H, w)
        if not fn_derivation(split.V, dv).is_zero():
            v2 = False
        if not fn_derivation(split.H, dh).is_zero():
            h2 = False
            if witness is None:
                witness = w
        if not (fn_derivation(split.V, dh) + fn_derivation(split.H, dv)).is_zero():
            anti = False
        if dv + dh != exterior_d(w):
            total = False
    return DoubleComplexReport(v2, h2, anti, total, witness, len(candidates))
