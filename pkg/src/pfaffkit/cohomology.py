"""Chevalley–Eilenberg complexes, vertical cohomology, and their comparison."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Dict, List, Sequence, Tuple

from .forms import DifferentialForm
from .group_action import LieAlgebraSpec, cartan_basis
from .linalg import RationalMatrix, cohomology_dim, kernel_basis
from .variational import (
    FoliatedModel,
    FormCoordinates,
    Truncation,
    TruncationError,
    _key_weight,
    d_V,
    equivariant_complex,
    euler,
    invariant_complex,
    q_r,
    rho,
    scalar_basis,
)
from .pfaffian import PfaffianSystem

__all__ = [
    "RepresentationError",
    "CEModule",
    "CohomologyReport",
    "ComparisonReport",
    "ce_differential",
    "ce_cohomology",
    "vertical_cohomology",
    "xi_basis",
    "xi_representation",
    "theorem1_compare",
    "xi_ce_cohomology",
    "obstruction_scan",
    "invariant_cohomology",
    "equivariant_cohomology",
    "max_workers",
]


class RepresentationError(ValueError):
    pass


def max_workers() -> int:
    raw = os.environ.get("PFAFFKIT_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        n = 0
    return n if n > 0 else min(4, os.cpu_count() or 1)


def _pmap(fn, items):
    items = list(items)
    if len(items) < 2 or max_workers() == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=max_workers()) as ex:
        return list(ex.map(fn, items))


class CEModule:
    """A representation ``rho`` of ``algebra`` on ``Q^m``."""

    def __init__(self, algebra: LieAlgebraSpec, m: int, rho: Sequence[RationalMatrix] | None = None):
        self.algebra = algebra
        self.m = m
        if rho is None:
            rho = [RationalMatrix(m, m) for _ in range(algebra.dim)]
        self.rho = [r if isinstance(r, RationalMatrix) else RationalMatrix.from_rows(r) for r in rho]
        if len(self.rho) != algebra.dim:
            raise RepresentationError(f"{algebra.dim} basis elements but {len(self.rho)} matrices")
        for r in self.rho:
            if r.shape != (m, m):
                raise RepresentationError(f"representation matrix has shape {r.shape}, expected {(m, m)}")
        bad = self.violations()
        if bad:
            raise RepresentationError("; ".join(bad))

    @classmethod
    def trivial(cls, algebra: LieAlgebraSpec, m: int = 1) -> "CEModule":
        return cls(algebra, m)

    def violations(self) -> List[str]:
        g = self.algebra
        out = []
        for i, j in combinations(range(g.dim), 2):
            lhs = RationalMatrix(self.m, self.m, _lin_comb(self.rho, g.C[i][j]))
            rhs = _sub(self.rho[i] @ self.rho[j], self.rho[j] @ self.rho[i])
            if lhs != rhs:
                out.append(f"rho([{g.names[i]},{g.names[j]}]) != [rho({g.names[i]}), rho({g.names[j]})]")
        return out


def _lin_comb(mats, coeffs):
    out: Dict[Tuple[int, int], Fraction] = {}
    for c, M in zip(coeffs, mats):
        if c:
            for k, v in M.entries.items():
                out[k] = out.get(k, 0) + c * v
    return out


def _sub(A: RationalMatrix, B: RationalMatrix) -> RationalMatrix:
    out = dict(A.entries)
    for k, v in B.entries.items():
        out[k] = out.get(k, 0) - v
    return RationalMatrix(A.rows, A.cols, out)


CochainFilter = Callable[[tuple, int], bool]


def _cochain_basis(M: CEModule, k: int, allowed: CochainFilter | None):
    out = [(S, a) for S in combinations(range(M.algebra.dim), k) for a in range(M.m)
           if allowed is None or allowed(S, a)]
    return out, {b: n for n, b in enumerate(out)}


def ce_differential(M: CEModule, k: int, allowed: CochainFilter | None = None) -> RationalMatrix:
    """Matrix of ``d: ∧^k g* ⊗ V -> ∧^{k+1} g* ⊗ V``.

    ``(dc)(x_0..x_k) = sum_a (-1)^a rho(x_a) c(..x̂_a..)
    + sum_{a<b} (-1)^{a+b} c([x_a, x_b], ..x̂_a..x̂_b..)``.
    ``allowed(S, a)`` restricts both sides to a subcomplex; images leaving it
    raise TruncationError.
    """
    g = M.algebra
    src, src_idx = _cochain_basis(M, k, allowed)
    dst, dst_idx = _cochain_basis(M, k + 1, allowed)
    rho_cols = []
    for R in M.rho:
        cols: Dict[int, List[Tuple[int, Fraction]]] = {}
        for (b, a), v in R.entries.items():
            cols.setdefault(a, []).append((b, v))
        rho_cols.append(cols)
    entries: Dict[Tuple[int, int], Fraction] = {}

    def put(T, b, S, a, v):
        j = src_idx.get((S, a))
        if j is None:
            return
        i = dst_idx.get((T, b))
        if i is None:
            raise TruncationError(f"CE differential leaves the filtered cochains at degree {k + 1}")
        entries[(i, j)] = entries.get((i, j), 0) + v

    for T in combinations(range(g.dim), k + 1):
        for pos, t in enumerate(T):
            S = T[:pos] + T[pos + 1:]
            sgn = -1 if pos & 1 else 1
            for a, col in rho_cols[t].items():
                for b, v in col:
                    put(T, b, S, a, sgn * v)
        for pa, pb in combinations(range(k + 1), 2):
            rest = tuple(x for n, x in enumerate(T) if n not in (pa, pb))
            sgn = -1 if (pa + pb) & 1 else 1
            for l, c in enumerate(g.C[T[pa]][T[pb]]):
                if not c or l in rest:
                    continue
                args = (l,) + rest
                S = tuple(sorted(args))
                perm = _perm_sign(args)
                for a in range(M.m):
                    put(T, a, S, a, sgn * perm * c)
    return RationalMatrix(len(dst), len(src), entries)


def _perm_sign(seq) -> int:
    sign = 1
    s = list(seq)
    for i in range(len(s)):
        for j in range(i + 1, len(s)):
            if s[i] > s[j]:
                sign = -sign
    return sign


@dataclass
class CohomologyReport:
    label: str
    dims: Dict[int, int]
    truncation: Truncation | None = None
    witnesses: Dict[int, List[str]] = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"complex": self.label, "dims": {str(k): v for k, v in sorted(self.dims.items())}}
        if self.truncation is not None:
            out["truncation"] = self.truncation.as_dict()
        if self.witnesses:
            out["witnesses"] = {str(k): v for k, v in sorted(self.witnesses.items())}
        return out


def _complex_dims(dims: Sequence[int], maps: Sequence[RationalMatrix], degrees: Sequence[int]) -> Dict[int, int]:
    def one(n):
        d_in = maps[n - 1] if n > 0 else RationalMatrix(dims[n], 0)
        d_out = maps[n] if n < len(maps) else RationalMatrix(0, dims[n])
        return cohomology_dim(d_in, d_out)

    return dict(zip(degrees, _pmap(one, range(len(degrees)))))


def ce_cohomology(M: CEModule, allowed: CochainFilter | None = None, label: str = "ce") -> CohomologyReport:
    q = M.algebra.dim
    dims = [len(_cochain_basis(M, k, allowed)[0]) for k in range(q + 1)]
    maps = [ce_differential(M, k, allowed) for k in range(q)]
    return CohomologyReport(label, _complex_dims(dims, maps, list(range(q + 1))))


# ---------------------------------------------------------------------------
# Vertical cohomology of the Euler resolution


def xi_basis(model: FoliatedModel, r: int, trunc: Truncation) -> List[DifferentialForm]:
    """Monomial representatives spanning the truncated ``Xi^r``."""
    if model.xi_trivial:
        return []
    chart = model.chart
    out = []
    for J in combinations(model.v_idx, r):
        key, _ = model.top_key(J)
        for f in scalar_basis(chart, model.vertical, trunc.degree - _key_weight(chart, key), trunc.freq):
            out.append(DifferentialForm._raw(chart, r + model.p, {key: f}))
    return out


def _phi_top_basis(model: FoliatedModel, trunc: Truncation) -> List[DifferentialForm]:
    chart = model.chart
    key, _ = model.top_key(())
    return [DifferentialForm._raw(chart, model.p, {key: f})
            for f in scalar_basis(chart, chart.names, trunc.degree - _key_weight(chart, key), trunc.freq)]


def _witnesses(d_in: RationalMatrix, d_out: RationalMatrix, coords: FormCoordinates) -> List[str]:
    """Cocycles spanning a complement of the coboundaries."""
    image = [[c for c in col] for col in _columns(d_in)]
    base = RationalMatrix.from_rows(image, d_in.rows) if image else RationalMatrix(0, d_in.rows)
    r = base.rank()
    out = []
    rows = list(image)
    for vec in kernel_basis(d_out):
        trial = RationalMatrix.from_rows(rows + [vec], d_out.cols)
        if trial.rank() > r:
            rows.append(vec)
            r += 1
            out.append(str(coords.form(vec)))
    return out


def _columns(M: RationalMatrix) -> List[List[Fraction]]:
    return [list(c) for c in zip(*M.to_rows())] if M.rows else [[] for _ in range(M.cols)]


def vertical_cohomology(model: FoliatedModel, trunc: Truncation, witnesses: bool = False) -> CohomologyReport:
    """Dimensions of ``Φ^{0,p} -E-> Xi^1 -d_V-> Xi^2 -> ...`` in degrees ``1..q``."""
    model.require_action()
    q = model.q
    if q == 0:
        return CohomologyReport("vertical", {}, trunc)
    if model.xi_trivial:
        return CohomologyReport("vertical", {k: 0 for k in range(1, q + 1)}, trunc)
    spaces = [FormCoordinates(xi_basis(model, r, trunc)) for r in range(q + 1)]
    phi = _phi_top_basis(model, trunc)
    E = spaces[1].matrix([euler(model, b).rep for b in phi])
    dV = [spaces[r + 1].matrix([d_V(model, q_r(model, b, r)).rep for b in spaces[r].basis]) for r in range(1, q)]
    maps = [E] + dV
    dims = [len(phi)] + [len(spaces[r]) for r in range(1, q + 1)]
    all_dims = _complex_dims(dims, maps, list(range(0, q + 1)))
    report = CohomologyReport("vertical", {k: all_dims[k] for k in range(1, q + 1)}, trunc)
    if witnesses:
        for k in range(1, q + 1):
            if report.dims[k]:
                d_in = maps[k - 1]
                d_out = maps[k] if k < len(maps) else RationalMatrix(0, dims[k])
                report.witnesses[k] = _witnesses(d_in, d_out, spaces[k])
    return report


def _form_weight(chart, omega: DifferentialForm) -> int:
    w = 0
    for key, c in omega.terms.items():
        if any(c.den):
            raise TruncationError(f"Cartan form {omega} has denominators; no weight filtration")
        w = max(w, c.poly_degree() + _key_weight(chart, key))
    return w


def xi_representation(model: FoliatedModel, trunc: Truncation) -> Tuple[FormCoordinates, List[RationalMatrix]]:
    """``Xi^0`` truncated, with ``rho(e_i) = q_0 ∘ θ(Φ(e_i))`` as matrices."""
    A = model.require_action()
    space = FormCoordinates(xi_basis(model, 0, trunc))
    mats = [space.matrix([rho(model, i, q_r(model, b, 0)).rep for b in space.basis]) for i in range(A.algebra.dim)]
    return space, mats


@dataclass
class ComparisonReport:
    pairs: Dict[int, Tuple[int, int]]
    truncation: Truncation

    @property
    def equal(self) -> bool:
        return all(a == b for a, b in self.pairs.values())

    @property
    def verdict(self) -> str:
        return "equal" if self.equal else "unequal"

    def as_dict(self) -> dict:
        return {
            "degrees": {str(k): {"vertical": a, "ce": b} for k, (a, b) in sorted(self.pairs.items())},
            "truncation": self.truncation.as_dict(),
            "verdict": self.verdict,
        }


def _xi_module(model: FoliatedModel, trunc: Truncation,
               representation_override: Sequence[RationalMatrix] | None = None):
    """CE module ``Xi^0`` (truncated) with the weight filter on cochains."""
    A = model.require_action()
    space, mats = xi_representation(model, trunc)
    if representation_override is not None:
        mats = list(representation_override)
    module = CEModule(A.algebra, len(space), mats)
    weights = [_form_weight(model.chart, w) for w in cartan_basis(A).forms]
    chart = model.chart
    coeff_weight = [b.terms[next(iter(b.terms))].poly_degree() + _key_weight(chart, next(iter(b.terms)))
                    for b in space.basis]

    def allowed(S, a):
        return coeff_weight[a] + sum(weights[i] for i in S) <= trunc.degree

    return module, allowed


def xi_ce_cohomology(model: FoliatedModel, trunc: Truncation,
                     representation_override: Sequence[RationalMatrix] | None = None) -> CohomologyReport:
    """CE cohomology of the symmetry algebra with values in truncated ``Xi^0``."""
    module, allowed = _xi_module(model, trunc, representation_override)
    rep = ce_cohomology(module, allowed, label="ce")
    rep.truncation = trunc
    return rep


def theorem1_compare(model: FoliatedModel, trunc: Truncation,
                     representation_override: Sequence[RationalMatrix] | None = None) -> ComparisonReport:
    """Vertical cohomology against CE cohomology of ``g`` in ``Xi^0``, degrees ``k >= 1``."""
    vert = vertical_cohomology(model, trunc)
    module, allowed = _xi_module(model, trunc, representation_override)
    for k in range(1, model.q + 1):
        n_ce = len(_cochain_basis(module, k, allowed)[0])
        n_xi = len(xi_basis(model, k, trunc))
        if n_ce != n_xi:
            raise TruncationError(f"truncation mismatch at degree {k}: {n_ce} cochains vs {n_xi} classes")
    ce = ce_cohomology(module, allowed)
    pairs = {k: (vert.dims[k], ce.dims.get(k, 0)) for k in range(1, model.q + 1)}
    return ComparisonReport(pairs, trunc)


def obstruction_scan(variational: CohomologyReport, candidates: Sequence) -> List[dict]:
    """One-sided test: a candidate whose CE dims disagree is excluded.

    ``candidates`` holds CEModules or ``(name, CEModule)`` pairs.  Agreement
    gives "not excluded", never existence.
    """
    items = [c if isinstance(c, tuple) else (repr(c.algebra), c) for c in candidates]

    def one(item):
        name, module = item
        ce = ce_cohomology(module).dims
        degrees = sorted(set(k for k in variational.dims if k >= 1) | set(k for k in ce if k >= 1))
        diffs = [k for k in degrees if variational.dims.get(k, 0) != ce.get(k, 0)]
        verdict = "excluded" if diffs else "not excluded"
        return {
            "candidate": name,
            "verdict": verdict,
            "ce": {str(k): ce[k] for k in sorted(ce) if k >= 1},
            "variational": {str(k): variational.dims[k] for k in sorted(variational.dims) if k >= 1},
            "disagree": diffs,
        }

    return _pmap(one, items)


def invariant_cohomology(S: PfaffianSystem, trunc: Truncation, witnesses: bool = False) -> CohomologyReport:
    cx = invariant_complex(S, trunc)
    return _subcomplex_report(cx, witnesses)


def equivariant_cohomology(model: FoliatedModel, trunc: Truncation, witnesses: bool = False) -> CohomologyReport:
    cx = equivariant_complex(model, trunc)
    return _subcomplex_report(cx, witnesses)


def _subcomplex_report(cx, witnesses: bool) -> CohomologyReport:
    rep = CohomologyReport(cx.label, _complex_dims(cx.dims, cx.maps, cx.degrees), cx.truncation)
    if witnesses:
        for n, k in enumerate(cx.degrees):
            if rep.dims[k]:
                d_in = cx.maps[n - 1] if n > 0 else RationalMatrix(cx.dims[n], 0)
                d_out = cx.maps[n] if n < len(cx.maps) else RationalMatrix(0, cx.dims[n])
                rep.witnesses[k] = _witnesses(d_in, d_out, _Basis(cx.bases[n]))
    return rep


class _Basis:
    def __init__(self, forms):
        self.forms = forms

    def form(self, vec):
        out = None
        for v, b in zip(vec, self.forms):
            if v:
                out = b.scale(v) if out is None else out + b.scale(v)
        return out if out is not None else DifferentialForm.zero(self.forms[0].chart, self.forms[0].degree)
