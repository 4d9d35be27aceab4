"""Pfaffian systems, their annihilator distributions, and splittings."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import List, Sequence

from . import generic
from .forms import (
    DifferentialForm,
    VectorField,
    VectorValuedOneForm,
    _same_chart,
    exterior_d,
    interior,
    lie_bracket,
    lie_derivative,
    wedge,
)
from .scalars import Chart, NotInvertible, ScalarError, ScalarExpr

__all__ = [
    "DegenerateSystem",
    "NotComplementary",
    "LocalizationNeeded",
    "PfaffianSystem",
    "Distribution",
    "Splitting",
    "HorizontalBasis",
    "annihilator",
    "system_annihilating",
    "is_integrable",
    "is_invariant_form",
    "is_first_integral",
    "is_symmetry",
    "is_tangent",
    "make_splitting",
    "dual_horizontal_basis",
]


class DegenerateSystem(ScalarError):
    pass


class NotComplementary(ScalarError):
    pass


class LocalizationNeeded(NotInvertible):
    """An inverse exists only after declaring ``factor`` invertible."""


def _rethrow(exc: NotInvertible, what: str):
    raise LocalizationNeeded(f"{what}: localization needed, declare {exc.factor} invertible", exc.factor) from exc


def _coefficient_matrix(forms: Sequence[DifferentialForm]):
    chart = forms[0].chart
    return [[w.coefficient((j,)) for j in range(chart.dim)] for w in forms]


def _field_matrix(fields: Sequence[VectorField]):
    """Columns are the fields."""
    chart = fields[0].chart
    return [[f.components[i] for f in fields] for i in range(chart.dim)]


class PfaffianSystem:
    """Module generated by pointwise independent 1-forms."""

    def __init__(self, chart: Chart, generators: Sequence[DifferentialForm]):
        gens = list(generators)
        for g in gens:
            _same_chart(chart, g.chart)
            if g.degree != 1:
                raise ValueError("Pfaffian generators must be 1-forms")
        gens = [g for g in gens if not g.is_zero()]
        if gens and generic.rank(chart, _coefficient_matrix(gens)) != len(gens):
            raise DegenerateSystem("generators are generically dependent")
        self.chart = chart
        self.generators = tuple(gens)
        self._distribution = None

    @property
    def rank(self) -> int:
        return len(self.generators)

    q = rank

    @property
    def p(self) -> int:
        return self.chart.dim - self.rank

    def distribution(self) -> "Distribution":
        if self._distribution is None:
            self._distribution = annihilator(self)
        return self._distribution

    def contains(self, omega: DifferentialForm) -> bool:
        """Generic membership of a 1-form in the span of the generators."""
        if omega.degree != 1:
            raise ValueError("membership is defined for 1-forms")
        if omega.is_zero():
            return True
        if not self.generators:
            return False
        return generic.rank(self.chart, _coefficient_matrix(list(self.generators) + [omega])) == self.rank

    def __repr__(self):
        return f"PfaffianSystem<{', '.join(map(str, self.generators))}>"


@dataclass
class Distribution:
    chart: Chart
    fields: List[VectorField] = field(default_factory=list)

    def __post_init__(self):
        self.fields = [f for f in self.fields if not f.is_zero()]
        for f in self.fields:
            _same_chart(self.chart, f.chart)
        if self.fields and generic.rank(self.chart, _field_matrix(self.fields)) != len(self.fields):
            raise DegenerateSystem("spanning fields are generically dependent")

    @property
    def rank(self) -> int:
        return len(self.fields)

    def contains(self, xi: VectorField) -> bool:
        if xi.is_zero():
            return True
        if not self.fields:
            return False
        return generic.rank(self.chart, _field_matrix(self.fields + [xi])) == self.rank

    def is_involutive(self) -> bool:
        return all(self.contains(lie_bracket(a, b))
                   for i, a in enumerate(self.fields) for b in self.fields[i + 1:])


def annihilator(S: PfaffianSystem) -> Distribution:
    """Spanning fields of the generic kernel of the generators."""
    chart = S.chart
    if not S.generators:
        return Distribution(chart, [VectorField.coordinate(chart, n) for n in chart.names])
    ker = generic.kernel(chart, _coefficient_matrix(S.generators), chart.dim)
    return Distribution(chart, [VectorField(chart, v) for v in ker])


def system_annihilating(fields: Sequence[VectorField]) -> PfaffianSystem:
    """The Pfaffian system whose annihilator is spanned by ``fields``."""
    chart = fields[0].chart
    rows = [list(f.components) for f in fields]
    ker = generic.kernel(chart, rows, chart.dim)
    gens = [DifferentialForm(chart, 1, {(j,): c for j, c in enumerate(v)}) for v in ker]
    return PfaffianSystem(chart, gens)


def is_integrable(S: PfaffianSystem) -> bool:
    """Exterior Frobenius test ``dω ∧ ω^1 ∧ ... ∧ ω^q = 0``."""
    if not S.generators:
        return True
    top = S.generators[0]
    for g in S.generators[1:]:
        top = wedge(top, g)
    return all(wedge(exterior_d(g), top).is_zero() for g in S.generators)


def is_tangent(xi: VectorField, S: PfaffianSystem) -> bool:
    return all(interior(xi, g).is_zero() for g in S.generators)


def is_invariant_form(omega: DifferentialForm, S: PfaffianSystem) -> bool:
    _same_chart(omega.chart, S.chart)
    if not is_integrable(S):
        warnings.warn("invariance tested against a non-integrable system", stacklevel=2)
    d_omega = exterior_d(omega)
    for eta in S.distribution().fields:
        if not interior(eta, omega).is_zero() or not interior(eta, d_omega).is_zero():
            return False
    return True


def is_first_integral(f: ScalarExpr, S: PfaffianSystem) -> bool:
    return all(not eta(f).num for eta in S.distribution().fields)


def is_symmetry(xi: VectorField, S: PfaffianSystem) -> bool:
    """``θ(ξ)ω`` stays in the generator span for every generator ``ω``."""
    return all(S.contains(lie_derivative(xi, g)) for g in S.generators)


class Splitting:
    """Complementary distributions with their projections ``V`` and ``H``."""

    def __init__(self, vertical: Distribution, horizontal: Distribution,
                 V: VectorValuedOneForm, H: VectorValuedOneForm):
        self.vertical = vertical
        self.horizontal = horizontal
        self.V = V
        self.H = H

    @property
    def chart(self) -> Chart:
        return self.V.chart

    def check(self) -> dict:
        chart = self.chart
        Id = VectorValuedOneForm.identity(chart)
        V, H = self.V, self.H
        return {
            "sum_identity": (V + H) == Id,
            "V_idempotent": V @ V == V,
            "H_idempotent": H @ H == H,
            "VH_zero": (V @ H).is_zero() and (H @ V).is_zero(),
            "image_V": all(V(f) == f for f in self.vertical.fields),
            "image_H": all(H(f) == f for f in self.horizontal.fields),
        }

    def vertical_system(self) -> PfaffianSystem:
        """Forms vanishing on the horizontal distribution."""
        return system_annihilating(self.horizontal.fields) if self.horizontal.fields else \
            PfaffianSystem(self.chart, [DifferentialForm.differential(self.chart, n) for n in self.chart.names])

    def horizontal_system(self) -> PfaffianSystem:
        return system_annihilating(self.vertical.fields) if self.vertical.fields else \
            PfaffianSystem(self.chart, [DifferentialForm.differential(self.chart, n) for n in self.chart.names])

    def __repr__(self):
        return f"Splitting(V rank {self.vertical.rank}, H rank {self.horizontal.rank})"


def make_splitting(vertical: Distribution, horizontal: Distribution) -> Splitting:
    chart = vertical.chart
    _same_chart(chart, horizontal.chart)
    n = chart.dim
    if vertical.rank + horizontal.rank != n:
        raise NotComplementary(f"ranks {vertical.rank} + {horizontal.rank} != {n}")
    fields = vertical.fields + horizontal.fields
    B = _field_matrix(fields)
    d = generic.det(chart, B)
    if not d.num:
        raise NotComplementary("spanning matrix is identically singular")
    adj = generic.adjugate(chart, B)
    q = vertical.rank
    # V = B diag(1..1, 0..0) B^-1 = (B[:, :q] adj[:q, :]) / det
    mats = []
    for block in (range(q), range(q, n)):
        M = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = chart.zero()
                for k in block:
                    if B[i][k].num and adj[k][j].num:
                        acc = acc + B[i][k] * adj[k][j]
                try:
                    row.append(acc.exact_div(d) if acc.num else acc)
                except NotInvertible as exc:
                    _rethrow(exc, "splitting projection")
            M.append(row)
        mats.append(VectorValuedOneForm(chart, M))
    return Splitting(vertical, horizontal, mats[0], mats[1])


class HorizontalBasis(list):
    """List of fields carrying a flag for pairwise vanishing brackets."""

    def __init__(self, fields, commuting: bool):
        super().__init__(fields)
        self.commuting = commuting

    @property
    def fields(self) -> list:
        return list(self)


def dual_horizontal_basis(S: PfaffianSystem, coords: Sequence[str]) -> HorizontalBasis:
    """Fields ``η_i`` in the annihilator with ``<η_i, dx^j> = δ``."""
    chart = S.chart
    idx = [chart.index[chart.coord(c).name] for c in coords]
    if len(idx) != S.p:
        raise ValueError(f"need {S.p} coordinates, got {len(idx)}")
    rest = [j for j in range(chart.dim) if j not in idx]
    G = _coefficient_matrix(S.generators) if S.generators else []
    Gy = [[row[j] for j in rest] for row in G]
    if Gy:
        d = generic.det(chart, Gy)
        if not d.num:
            raise DegenerateSystem(f"coordinates {list(coords)} are not free on the distribution")
        try:
            Ginv = generic.inverse(chart, Gy)
        except NotInvertible as exc:
            _rethrow(exc, "dual horizontal basis")
    fields = []
    for i in idx:
        comps = [chart.zero()] * chart.dim
        comps[i] = chart.one()
        if Gy:
            rhs = [-row[i] for row in G]
            sol = generic.matvec(chart, Ginv, rhs)
            for j, s in zip(rest, sol):
                comps[j] = s
        fields.append(VectorField(chart, comps))
    commuting = all(lie_bracket(a, b).is_zero() for k, a in enumerate(fields) for b in fields[k + 1:])
    return HorizontalBasis(fields, commuting)
