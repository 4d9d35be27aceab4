"""Lie algebras by structure constants, infinitesimal actions, and Cartan coframes."""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Dict, List, Sequence

from . import generic
from .forms import DifferentialForm, VectorField, _same_chart, exterior_d, interior, lie_bracket, wedge
from .pfaffian import (
    LocalizationNeeded,
    PfaffianSystem,
    _field_matrix,
    is_first_integral,
    is_symmetry,
)
from .scalars import NotInvertible, ScalarError, ScalarExpr

__all__ = [
    "LieAlgebraError",
    "LieAlgebraSpec",
    "ActionSpec",
    "ActionReport",
    "TransversalityReport",
    "CartanBasis",
    "Lemma2Decomposition",
    "Lemma2Violation",
    "check_action",
    "check_transversally_free",
    "cartan_basis",
    "verify_structure_equation",
    "verify_lemma2_generation",
]


class LieAlgebraError(ValueError):
    pass


class Lemma2Violation(ScalarError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class LieAlgebraSpec:
    """Structure constants ``C[i][j][k]`` with ``[e_i, e_j] = sum_k C[i][j][k] e_k``."""

    def __init__(self, names: Sequence[str], brackets: Dict | None = None, *, validate: bool = True):
        self.names = tuple(names)
        q = len(self.names)
        if len(set(self.names)) != q:
            raise LieAlgebraError("duplicate basis names")
        C = [[[Fraction(0)] * q for _ in range(q)] for _ in range(q)]
        for (i, j), coeffs in (brackets or {}).items():
            i, j = self._idx(i), self._idx(j)
            if isinstance(coeffs, dict):
                coeffs = {self._idx(k): Fraction(v) for k, v in coeffs.items()}
            else:
                coeffs = {k: Fraction(v) for k, v in enumerate(coeffs)}
            for k, v in coeffs.items():
                C[i][j][k] = v
                if i != j:
                    C[j][i][k] = -v
        self.C = C
        if validate:
            problems = self.violations()
            if problems:
                raise LieAlgebraError("; ".join(problems))

    def _idx(self, a) -> int:
        if isinstance(a, int):
            return a
        try:
            return self.names.index(a)
        except ValueError:
            raise LieAlgebraError(f"unknown basis element {a!r}") from None

    @classmethod
    def abelian(cls, names: Sequence[str]) -> "LieAlgebraSpec":
        return cls(names)

    @classmethod
    def from_constants(cls, names: Sequence[str], C, *, validate: bool = True) -> "LieAlgebraSpec":
        """Build directly from a full ``C[i][j][k]`` array (no antisymmetrization)."""
        out = cls(names, validate=False)
        out.C = [[[Fraction(v) for v in row] for row in plane] for plane in C]
        if validate:
            problems = out.violations()
            if problems:
                raise LieAlgebraError("; ".join(problems))
        return out

    @property
    def dim(self) -> int:
        return len(self.names)

    def bracket(self, i: int, j: int) -> List[Fraction]:
        return list(self.C[i][j])

    def is_antisymmetric(self) -> bool:
        q = self.dim
        return all(self.C[i][j][k] == -self.C[j][i][k] for i in range(q) for j in range(q) for k in range(q))

    def satisfies_jacobi(self) -> bool:
        q = self.dim
        C = self.C
        for a, b, c in combinations(range(q), 3):
            for m in range(q):
                s = Fraction(0)
                for x, y, z in ((a, b, c), (b, c, a), (c, a, b)):
                    s += sum(C[x][y][k] * C[k][z][m] for k in range(q))
                if s:
                    return False
        return True

    def violations(self) -> List[str]:
        out = []
        if not self.is_antisymmetric():
            out.append("structure constants are not antisymmetric")
        if not self.satisfies_jacobi():
            out.append("structure constants violate the Jacobi identity")
        return out

    def is_abelian(self) -> bool:
        return not any(v for plane in self.C for row in plane for v in row)

    def __repr__(self):
        parts = []
        for i, j in combinations(range(self.dim), 2):
            terms = [f"{v}*{self.names[k]}" for k, v in enumerate(self.C[i][j]) if v]
            if terms:
                parts.append(f"[{self.names[i]},{self.names[j]}] = {' + '.join(terms)}")
        return f"LieAlgebraSpec({', '.join(self.names)}; {'; '.join(parts) or 'abelian'})"


@dataclass
class ActionSpec:
    algebra: LieAlgebraSpec
    fields: List[VectorField]
    system: PfaffianSystem

    def __post_init__(self):
        self.fields = list(self.fields)
        if len(self.fields) != self.algebra.dim:
            raise LieAlgebraError(f"{self.algebra.dim} basis elements but {len(self.fields)} fields")
        for f in self.fields:
            _same_chart(self.system.chart, f.chart)

    @property
    def chart(self):
        return self.system.chart

    def field_of(self, coeffs: Sequence) -> VectorField:
        """``Φ(sum c_i e_i)`` for scalar or ScalarExpr coefficients."""
        out = VectorField.zero(self.chart)
        for c, f in zip(coeffs, self.fields):
            out = out + f.scale(c)
        return out


@dataclass
class ActionReport:
    brackets_compatible: bool
    symmetries: bool
    jacobi: bool
    failures: List[str] = field(default_factory=list)

    def __bool__(self):
        return self.brackets_compatible and self.symmetries and self.jacobi

    def as_dict(self) -> dict:
        return {"brackets_compatible": self.brackets_compatible, "symmetries": self.symmetries,
                "jacobi": self.jacobi, "failures": list(self.failures)}


def check_action(A: ActionSpec) -> ActionReport:
    g, fields = A.algebra, A.fields
    failures = []
    compatible = True
    for i, j in combinations(range(g.dim), 2):
        lhs = lie_bracket(fields[i], fields[j])
        rhs = A.field_of(g.C[i][j])
        if lhs != rhs:
            compatible = False
            failures.append(f"[Φ({g.names[i]}), Φ({g.names[j]})] = {lhs}, expected {rhs}")
    sym = True
    for name, f in zip(g.names, fields):
        if not is_symmetry(f, A.system):
            sym = False
            failures.append(f"Φ({name}) = {f} is not a symmetry of the system")
    jac = g.satisfies_jacobi() and g.is_antisymmetric()
    if not jac:
        failures.append("structure constants violate antisymmetry or Jacobi")
    return ActionReport(compatible, sym, jac, failures)


@dataclass
class TransversalityReport:
    independent: bool
    complementary: bool
    locus: ScalarExpr | None
    diagnostic: str = ""

    def __bool__(self):
        return self.independent and self.complementary

    def as_dict(self) -> dict:
        return {"independent": self.independent, "complementary": self.complementary,
                "locus": None if self.locus is None else str(self.locus), "diagnostic": self.diagnostic}


def _transversal_matrix(A: ActionSpec):
    sigma = A.system.distribution().fields
    return _field_matrix(list(sigma) + list(A.fields)) if sigma or A.fields else []


def check_transversally_free(A: ActionSpec) -> TransversalityReport:
    """Generic independence of the action fields and complementarity with the annihilator.

    ``locus`` is the determinant of ``[annihilator fields | action fields]``;
    transversality can fail only where it vanishes.
    """
    chart = A.chart
    q = len(A.fields)
    independent = q == 0 or generic.rank(chart, _field_matrix(A.fields)) == q
    sigma = A.system.distribution().fields
    msgs = []
    if not independent:
        msgs.append("(i) fails: action fields are generically dependent")
    if len(sigma) + q != chart.dim:
        msgs.append(f"(ii) fails: dim annihilator {len(sigma)} + dim algebra {q} != {chart.dim}")
        return TransversalityReport(independent, False, None, "; ".join(msgs))
    d = generic.det(chart, _transversal_matrix(A))
    complementary = bool(d.num)
    if not complementary:
        msgs.append("(ii) fails: action fields are not complementary to the annihilator")
    return TransversalityReport(independent, complementary, d, "; ".join(msgs))


@dataclass
class CartanBasis:
    forms: List[DifferentialForm]
    action: ActionSpec

    def __iter__(self):
        return iter(self.forms)

    def __len__(self):
        return len(self.forms)

    def __getitem__(self, i):
        return self.forms[i]

    def pairing(self) -> List[List[ScalarExpr]]:
        return [[interior(f, w).coefficient(()) for w in self.forms] for f in self.action.fields]


def cartan_basis(A: ActionSpec) -> CartanBasis:
    """Forms dual to the action fields and vanishing on the annihilator."""
    rep = check_transversally_free(A)
    if not rep:
        raise LieAlgebraError(f"action is not transversally free: {rep.diagnostic}")
    chart = A.chart
    M = _transversal_matrix(A)
    try:
        inv = generic.inverse(chart, M)
    except NotInvertible as exc:
        raise LocalizationNeeded(
            f"Cartan basis: localization needed, declare {exc.factor} invertible", exc.factor) from exc
    p = chart.dim - len(A.fields)
    forms = [DifferentialForm(chart, 1, {(j,): c for j, c in enumerate(row)}) for row in inv[p:]]
    return CartanBasis(forms, A)


def verify_structure_equation(B: CartanBasis, g: LieAlgebraSpec | None = None, *,
                              negate: bool = True) -> bool:
    """Check ``dω^i = sum_{j<k} c^i_jk ω^j ∧ ω^k``.

    By default ``c = -C`` for the stored bracket constants ``C``; pass
    ``negate=False`` to test ``c = C`` instead.
    """
    g = g or B.action.algebra
    sign = -1 if negate else 1
    w = B.forms
    for i in range(g.dim):
        rhs = DifferentialForm.zero(w[i].chart, 2)
        for j, k in combinations(range(g.dim), 2):
            c = g.C[j][k][i]
            if c:
                rhs = rhs + wedge(w[j], w[k]).scale(sign * c)
        if exterior_d(w[i]) != rhs:
            return False
    return True


@dataclass
class Lemma2Decomposition:
    coefficients: List[ScalarExpr]
    remainder: VectorField

    def as_dict(self) -> dict:
        return {"coefficients": [str(c) for c in self.coefficients], "remainder": str(self.remainder)}


def verify_lemma2_generation(A: ActionSpec, xi: VectorField, basis: CartanBasis | None = None) -> Lemma2Decomposition:
    """Split a symmetry as ``sum f_i Φ(e_i) + η`` with first integrals ``f_i``."""
    S = A.system
    if not is_symmetry(xi, S):
        raise ScalarError(f"{xi} is not a symmetry of the system")
    B = basis or cartan_basis(A)
    coeffs = [interior(xi, w).coefficient(()) for w in B.forms]
    for name, f in zip(A.algebra.names, coeffs):
        if not is_first_integral(f, S):
            raise Lemma2Violation(f"coefficient of Φ({name}) is {f}, not a first integral", witness=(name, f))
    eta = xi - A.field_of(coeffs)
    if not S.distribution().contains(eta):
        raise Lemma2Violation(f"remainder {eta} is not tangent to the annihilator", witness=eta)
    return Lemma2Decomposition(coeffs, eta)
