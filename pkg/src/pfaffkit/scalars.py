"""Exact coefficient ring on chart models.

Elements are rational polynomials in the flat coordinates, tensored with
trigonometric polynomials in the periodic coordinates, localized at a finite
set of user-declared polynomial denominators.  Every element is stored in a
canonical form ``N / prod(d_i ** e_i)`` where ``N`` is a finite sum of
``rational * monomial * fourier_basis`` terms and no ``d_i`` with ``e_i > 0``
divides ``N``.  Equality and the zero test are therefore syntactic.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from numbers import Rational
from typing import Iterable, Mapping, Sequence

__all__ = [
    "Coord",
    "Chart",
    "ScalarExpr",
    "ScalarError",
    "UnknownCoordinate",
    "NotInvertible",
    "normalize",
    "partial",
    "is_zero",
]


class ScalarError(ValueError):
    pass


class UnknownCoordinate(ScalarError):
    pass


class NotInvertible(ScalarError):
    """Raised when a division needs a denominator the chart has not declared."""

    def __init__(self, message: str, factor: "ScalarExpr | None" = None):
        super().__init__(message)
        self.factor = factor


@dataclass(frozen=True)
class Coord:
    name: str
    periodic: bool = False

    @property
    def kind(self) -> str:
        return "periodic" if self.periodic else "flat"


# ---------------------------------------------------------------------------
# Fourier basis arithmetic.  A basis element on one circle is (k, s) with
# s = 0 for cos(k t), s = 1 for sin(k t); (0, 0) is the unit, (0, 1) never
# appears.


def _fourier(k: int, s: int):
    if k < 0:
        return (-1 if s else 1), (-k, s)
    if k == 0 and s:
        return 0, None
    return 1, (k, s)


@lru_cache(maxsize=None)
def _fourier_mul1(a, b):
    (ka, sa), (kb, sb) = a, b
    if ka == 0:
        return ((Fraction(1), b),)
    if kb == 0:
        return ((Fraction(1), a),)
    half = Fraction(1, 2)
    if sa == 0 and sb == 0:
        parts = ((half, ka - kb, 0), (half, ka + kb, 0))
    elif sa == 1 and sb == 1:
        parts = ((half, ka - kb, 0), (-half, ka + kb, 0))
    elif sa == 1 and sb == 0:
        parts = ((half, ka + kb, 1), (half, ka - kb, 1))
    else:
        parts = ((half, ka + kb, 1), (-half, ka - kb, 1))
    out: dict = {}
    for c, k, s in parts:
        sign, key = _fourier(k, s)
        if sign:
            out[key] = out.get(key, 0) + sign * c
    return tuple((c, key) for key, c in out.items() if c)


@lru_cache(maxsize=None)
def _trig_mul(t1, t2):
    if not t1:
        return ((Fraction(1), ()),)
    factors = [_fourier_mul1(a, b) for a, b in zip(t1, t2)]
    out = []
    for combo in itertools.product(*factors):
        c = Fraction(1)
        for ci, _ in combo:
            c *= ci
        out.append((c, tuple(key for _, key in combo)))
    return tuple(out)


# ---------------------------------------------------------------------------
# Numerators: dict {(mono, trig): Fraction}.


def _num_add(a: dict, b: dict, scale=1) -> dict:
    out = dict(a)
    for k, v in b.items():
        w = out.get(k, 0) + scale * v
        if w:
            out[k] = w
        else:
            out.pop(k, None)
    return out


def _num_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for (m1, t1), c1 in a.items():
        for (m2, t2), c2 in b.items():
            m = tuple(x + y for x, y in zip(m1, m2))
            for cf, t in _trig_mul(t1, t2):
                key = (m, t)
                out[key] = out.get(key, 0) + c1 * c2 * cf
    return {k: v for k, v in out.items() if v}


def _poly_divide(p: dict, d: dict):
    """Exact quotient of flat polynomials (mono -> coeff), or None."""
    lead_d = max(d)
    cd = d[lead_d]
    r = dict(p)
    q: dict = {}
    while r:
        lt = max(r)
        if any(a < b for a, b in zip(lt, lead_d)):
            return None
        m = tuple(a - b for a, b in zip(lt, lead_d))
        c = r[lt] / cd
        q[m] = c
        for dm, dc in d.items():
            key = tuple(a + b for a, b in zip(m, dm))
            w = r.get(key, 0) - c * dc
            if w:
                r[key] = w
            else:
                r.pop(key, None)
    return q


def _num_divide(num: dict, d: dict):
    """Divide a numerator by a trig-free flat polynomial, or return None."""
    groups: dict = {}
    for (m, t), c in num.items():
        groups.setdefault(t, {})[m] = c
    out = {}
    for t, poly in groups.items():
        q = _poly_divide(poly, d)
        if q is None:
            return None
        for m, c in q.items():
            out[(m, t)] = c
    return out


# ---------------------------------------------------------------------------


def _as_coord(c) -> Coord:
    if isinstance(c, Coord):
        return c
    if isinstance(c, str):
        return Coord(c)
    name, kind = c
    if kind not in ("flat", "periodic"):
        raise ScalarError(f"coordinate kind must be 'flat' or 'periodic', got {kind!r}")
    return Coord(name, kind == "periodic")


class Chart:
    """A coordinate chart with flat and periodic coordinates.

    ``denominators`` are polynomials in the flat coordinates declared
    invertible.  Each must be irreducible over the rationals and no two may be
    proportional; this keeps the canonical fraction form unique.
    """

    def __init__(self, name: str, coords: Sequence, denominators: Iterable = ()):
        self.name = name
        self.coords = tuple(_as_coord(c) for c in coords)
        if not self.coords:
            raise ScalarError("a chart needs at least one coordinate")
        names = [c.name for c in self.coords]
        if len(set(names)) != len(names):
            raise ScalarError(f"duplicate coordinate names in chart {name!r}")
        self.dim = len(self.coords)
        self.flat_names = tuple(c.name for c in self.coords if not c.periodic)
        self.periodic_names = tuple(c.name for c in self.coords if c.periodic)
        self.index = {c.name: i for i, c in enumerate(self.coords)}
        self._slot = {}
        for i, n in enumerate(self.flat_names):
            self._slot[n] = ("flat", i)
        for i, n in enumerate(self.periodic_names):
            self._slot[n] = ("periodic", i)
        self._nf = len(self.flat_names)
        self._np = len(self.periodic_names)
        self._zero_mono = (0,) * self._nf
        self._unit_trig = ((0, 0),) * self._np
        polys = []
        if denominators:
            base = Chart(name, self.coords)
            for d in denominators:
                expr = d if isinstance(d, ScalarExpr) else normalize(d, base)
                polys.append(self._den_poly(expr))
        self._den_polys = tuple(polys)
        self._check_denominators()
        self._den_cache: dict = {}
        self._key = (name, self.coords, tuple(frozenset(p.items()) for p in self._den_polys))
        self._hash = hash(self._key)

    # -- construction helpers ------------------------------------------------
    def _den_poly(self, expr: "ScalarExpr") -> dict:
        if any(expr.den):
            raise ScalarError("a declared denominator must be a polynomial")
        if expr.is_zero():
            raise ScalarError("a declared denominator must be nonzero")
        poly = {}
        for (m, t), c in expr.num.items():
            if any(k for k, _ in t):
                raise ScalarError("declared denominators may not involve sin/cos")
            poly[m] = c
        if set(poly) == {self._zero_mono}:
            raise ScalarError("constant denominators are already units; do not declare them")
        return poly

    def _check_denominators(self) -> None:
        if not self._den_polys:
            return
        import sympy

        syms = sympy.symbols([f"_c{i}" for i in range(self._nf)] or ["_c0"])
        monic = []
        for poly in self._den_polys:
            expr = sum(sympy.Rational(c.numerator, c.denominator)
                       * sympy.Mul(*[s ** e for s, e in zip(syms, m)]) for m, c in poly.items())
            _, factors = sympy.factor_list(expr)
            if len(factors) != 1 or factors[0][1] != 1:
                raise ScalarError(f"declared denominator {self._poly_str(poly)} is not irreducible")
            lead = poly[max(poly)]
            monic.append(frozenset((m, c / lead) for m, c in poly.items()))
        if len(set(monic)) != len(monic):
            raise ScalarError("declared denominators must be pairwise non-proportional")

    def localize(self, denominators: Iterable) -> "Chart":
        base = Chart(self.name, self.coords)
        exprs = list(self.denominators)
        for d in denominators:
            exprs.append(d if isinstance(d, ScalarExpr) else normalize(d, self))
        for e in exprs:
            if any(e.den):
                raise ScalarError("a declared denominator must be a polynomial")
        return Chart(self.name, self.coords, [ScalarExpr._raw(base, dict(e.num), ()) for e in exprs])

    def _poly_str(self, poly: dict) -> str:
        return str(ScalarExpr._raw(self, {(m, self._unit_trig): c for m, c in poly.items()},
                                   (0,) * len(self._den_polys)))

    # -- identity --------------------------------------------------------------
    def __eq__(self, other):
        return self is other or (isinstance(other, Chart) and self._key == other._key)

    def __hash__(self):
        return self._hash

    def __repr__(self):
        parts = ", ".join(f"{c.name}: {c.kind}" for c in self.coords)
        return f"Chart({self.name!r}, [{parts}], denominators={len(self._den_polys)})"

    # -- accessors ---------------------------------------------------------------
    @property
    def names(self) -> tuple:
        return tuple(c.name for c in self.coords)

    def coord(self, name: str) -> Coord:
        try:
            return self.coords[self.index[name]]
        except KeyError:
            raise UnknownCoordinate(f"unknown coordinate {name!r} in chart {self.name!r}") from None

    def slot(self, name: str):
        try:
            return self._slot[name]
        except KeyError:
            raise UnknownCoordinate(f"unknown coordinate {name!r} in chart {self.name!r}") from None

    @property
    def denominators(self) -> tuple:
        nd = len(self._den_polys)
        return tuple(ScalarExpr._raw(self, {(m, self._unit_trig): c for m, c in p.items()}, (0,) * nd)
                     for p in self._den_polys)

    def den_power(self, exps: tuple) -> dict:
        """Numerator of prod(d_i ** e_i)."""
        hit = self._den_cache.get(exps)
        if hit is not None:
            return hit
        out = {(self._zero_mono, self._unit_trig): Fraction(1)}
        for poly, e in zip(self._den_polys, exps):
            p = {(m, self._unit_trig): c for m, c in poly.items()}
            for _ in range(e):
                out = _num_mul(out, p)
        self._den_cache[exps] = out
        return out

    # -- element constructors ------------------------------------------------------
    def const(self, value) -> "ScalarExpr":
        value = Fraction(value)
        num = {(self._zero_mono, self._unit_trig): value} if value else {}
        return ScalarExpr._raw(self, num, (0,) * len(self._den_polys))

    def zero(self) -> "ScalarExpr":
        return self.const(0)

    def one(self) -> "ScalarExpr":
        return self.const(1)

    def var(self, name: str) -> "ScalarExpr":
        kind, i = self.slot(name)
        if kind == "periodic":
            raise ScalarError(f"periodic coordinate {name!r} may only appear inside sin/cos")
        m = tuple(1 if j == i else 0 for j in range(self._nf))
        return ScalarExpr._raw(self, {(m, self._unit_trig): Fraction(1)}, (0,) * len(self._den_polys))

    def _trig(self, name: str, k: int, s: int) -> "ScalarExpr":
        kind, i = self.slot(name)
        if kind != "periodic":
            raise ScalarError(f"sin/cos applied to flat coordinate {name!r}")
        k = int(k)
        sign, key = _fourier(k, s)
        if not sign:
            return self.zero()
        t = tuple(key if j == i else (0, 0) for j in range(self._np))
        return ScalarExpr._raw(self, {(self._zero_mono, t): Fraction(sign)}, (0,) * len(self._den_polys))

    def cos(self, name: str, k: int = 1) -> "ScalarExpr":
        return self._trig(name, k, 0)

    def sin(self, name: str, k: int = 1) -> "ScalarExpr":
        return self._trig(name, k, 1)

    def inverse_denominator(self, i: int) -> "ScalarExpr":
        den = tuple(1 if j == i else 0 for j in range(len(self._den_polys)))
        return ScalarExpr._raw(self, {(self._zero_mono, self._unit_trig): Fraction(1)}, den)


def _coerce(chart: Chart, value) -> "ScalarExpr":
    if isinstance(value, ScalarExpr):
        if value.chart is not chart and value.chart != chart:
            raise ScalarError("chart mismatch")
        return value
    if isinstance(value, (int, Rational, Fraction)):
        return chart.const(value)
    return NotImplemented


class ScalarExpr:
    """Immutable element of the coefficient ring of a chart."""

    __slots__ = ("chart", "num", "den", "_hash", "_dcache")

    def __init__(self, chart: Chart, num: Mapping, den: Sequence[int] | None = None):
        nd = len(chart._den_polys)
        den = tuple(den) if den is not None else (0,) * nd
        if len(den) != nd:
            raise ScalarError("denominator exponent vector has the wrong length")
        num = {k: Fraction(v) for k, v in num.items() if v}
        num, den = _reduce(chart, num, den)
        self._set(chart, num, den)

    @classmethod
    def _raw(cls, chart, num, den):
        self = object.__new__(cls)
        self._set(chart, num, den)
        return self

    @classmethod
    def _make(cls, chart, num, den):
        num, den = _reduce(chart, num, den)
        return cls._raw(chart, num, den)

    def _set(self, chart, num, den):
        self.chart = chart
        self.num = num
        self.den = den if num else (0,) * len(den)
        self._hash = None
        self._dcache = None

    # -- predicates ------------------------------------------------------------
    def is_zero(self) -> bool:
        return not self.num

    def __bool__(self):
        return bool(self.num)

    def is_constant(self) -> bool:
        c = self.chart
        return not any(self.den) and all(k == (c._zero_mono, c._unit_trig) for k in self.num)

    def constant_value(self) -> Fraction:
        if not self.is_constant():
            raise ScalarError(f"{self} is not a constant")
        return next(iter(self.num.values()), Fraction(0))

    def depends_on(self, name: str) -> bool:
        kind, i = self.chart.slot(name)
        if kind == "flat":
            if any(self.den[j] and self.chart._den_polys[j] and any(m[i] for m in self.chart._den_polys[j])
                   for j in range(len(self.den))):
                return True
            return any(m[i] for m, _ in self.num)
        return any(t[i][0] for _, t in self.num)

    def __eq__(self, other):
        if isinstance(other, ScalarExpr):
            return (self.chart is other.chart or self.chart == other.chart) and \
                self.den == other.den and self.num == other.num
        if isinstance(other, (int, Fraction, Rational)):
            return self.is_constant() and self.constant_value() == other if self.num else other == 0
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.chart, self.den, frozenset(self.num.items())))
        return self._hash

    # -- ring operations -----------------------------------------------------------
    def _aligned(self, other):
        if self.den == other.den:
            return self.num, other.num, self.den
        e = tuple(max(a, b) for a, b in zip(self.den, other.den))
        c = self.chart
        n1 = self.num if e == self.den else _num_mul(self.num, c.den_power(tuple(x - y for x, y in zip(e, self.den))))
        n2 = other.num if e == other.den else _num_mul(other.num, c.den_power(tuple(x - y for x, y in zip(e, other.den))))
        return n1, n2, e

    def __add__(self, other):
        other = _coerce(self.chart, other)
        if other is NotImplemented:
            return other
        if not other.num:
            return self
        if not self.num:
            return other
        n1, n2, e = self._aligned(other)
        return ScalarExpr._make(self.chart, _num_add(n1, n2), e)

    __radd__ = __add__

    def __neg__(self):
        return ScalarExpr._raw(self.chart, {k: -v for k, v in self.num.items()}, self.den)

    def __sub__(self, other):
        other = _coerce(self.chart, other)
        if other is NotImplemented:
            return other
        if not other.num:
            return self
        n1, n2, e = self._aligned(other)
        return ScalarExpr._make(self.chart, _num_add(n1, n2, -1), e)

    def __rsub__(self, other):
        other = _coerce(self.chart, other)
        if other is NotImplemented:
            return other
        return other - self

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                return self.chart.zero()
            if other == 1:
                return self
            return ScalarExpr._raw(self.chart, {k: v * other for k, v in self.num.items()}, self.den)
        other = _coerce(self.chart, other)
        if other is NotImplemented:
            return other
        if not self.num or not other.num:
            return self.chart.zero()
        den = tuple(a + b for a, b in zip(self.den, other.den))
        num = _num_mul(self.num, other.num)
        if any(den):
            return ScalarExpr._make(self.chart, num, den)
        return ScalarExpr._raw(self.chart, num, den)

    __rmul__ = __mul__

    def __pow__(self, n: int):
        if not isinstance(n, int) or n < 0:
            raise ScalarError("only non-negative integer powers are supported")
        result = self.chart.one()
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def _unit_part(self):
        """Split the numerator as prod(d_i ** m_i) * rest, stripping declared factors."""
        c = self.chart
        num = self.num
        m = [0] * len(c._den_polys)
        for i, poly in enumerate(c._den_polys):
            while True:
                q = _num_divide(num, poly)
                if q is None:
                    break
                num = q
                m[i] += 1
        return tuple(m), num

    def is_unit(self) -> bool:
        if not self.num:
            return False
        _, rest = self._unit_part()
        c = self.chart
        return set(rest) == {(c._zero_mono, c._unit_trig)}

    def exact_div(self, other) -> "ScalarExpr":
        """Return ``self / other``; raise NotInvertible if not in the ring."""
        other = _coerce(self.chart, other)
        if not other.num:
            raise ZeroDivisionError("division by the zero scalar")
        c = self.chart
        m, rest = other._unit_part()
        # self / other = self * den(other) * prod(d^-m) / rest
        h = ScalarExpr._raw(c, self.num, tuple(a + b for a, b in zip(self.den, m)))
        if any(other.den):
            h = h * ScalarExpr._raw(c, c.den_power(other.den), (0,) * len(m))
        else:
            h = ScalarExpr._make(c, h.num, h.den)
        unit_key = (c._zero_mono, c._unit_trig)
        if set(rest) == {unit_key}:
            return h * (1 / rest[unit_key])
        rest_expr = ScalarExpr._raw(c, rest, (0,) * len(m))
        if any(k for _, t in rest for k, _ in t):
            raise NotInvertible(f"division by {rest_expr} needs a trigonometric denominator", rest_expr)
        poly = {mono: v for (mono, _), v in rest.items()}
        q = _num_divide(h.num, poly)
        if q is None:
            raise NotInvertible(f"localization needed: {rest_expr} is not a declared denominator", rest_expr)
        return ScalarExpr._make(c, q, h.den)

    def inverse(self) -> "ScalarExpr":
        return self.chart.one().exact_div(self)

    def __truediv__(self, other):
        if isinstance(other, (int, Fraction)) and not isinstance(other, bool):
            if other == 0:
                raise ZeroDivisionError("division by zero")
            return self * (Fraction(1) / Fraction(other))
        return self.exact_div(other)

    def __rtruediv__(self, other):
        return _coerce(self.chart, other).exact_div(self)

    # -- calculus --------------------------------------------------------------------
    def partial(self, name: str) -> "ScalarExpr":
        if self._dcache is None:
            self._dcache = {}
        hit = self._dcache.get(name)
        if hit is not None:
            return hit
        result = self._partial(name)
        self._dcache[name] = result
        return result

    def _partial(self, name: str) -> "ScalarExpr":
        c = self.chart
        kind, i = c.slot(name)
        out: dict = {}
        if kind == "flat":
            for (m, t), v in self.num.items():
                e = m[i]
                if e:
                    key = (m[:i] + (e - 1,) + m[i + 1:], t)
                    out[key] = out.get(key, 0) + v * e
        else:
            for (m, t), v in self.num.items():
                k, s = t[i]
                if k:
                    key = (m, t[:i] + ((k, 1 - s),) + t[i + 1:])
                    out[key] = out.get(key, 0) + (v * k if s else -v * k)
        out = {k: v for k, v in out.items() if v}
        result = ScalarExpr._make(c, out, self.den) if any(self.den) else ScalarExpr._raw(c, out, self.den)
        if kind == "flat" and any(self.den):
            nd = len(self.den)
            numer = ScalarExpr._raw(c, self.num, self.den)
            for j, e in enumerate(self.den):
                if not e:
                    continue
                dpoly = c._den_polys[j]
                dd = ScalarExpr._raw(c, {(m, c._unit_trig): v for m, v in dpoly.items()}, (0,) * nd)._partial(name)
                if dd.num:
                    result = result - numer * dd * c.inverse_denominator(j) * e
        return result

    def zero_mode(self, names: Iterable[str]) -> "ScalarExpr":
        """Keep only the terms with frequency zero in the given periodic coordinates."""
        c = self.chart
        idx = []
        for n in names:
            kind, i = c.slot(n)
            if kind != "periodic":
                raise ScalarError(f"zero_mode needs periodic coordinates, got {n!r}")
            idx.append(i)
        num = {k: v for k, v in self.num.items() if all(k[1][i][0] == 0 for i in idx)}
        return ScalarExpr._make(c, num, self.den)

    def integrate(self, name: str) -> "ScalarExpr":
        """An antiderivative in ``name``; raises if none exists in the ring."""
        c = self.chart
        kind, i = c.slot(name)
        out: dict = {}
        if kind == "flat":
            if self.depends_on_denominator(name):
                raise ScalarError(f"cannot integrate along {name!r}: denominator depends on it")
            for (m, t), v in self.num.items():
                key = (m[:i] + (m[i] + 1,) + m[i + 1:], t)
                out[key] = v / (m[i] + 1)
        else:
            for (m, t), v in self.num.items():
                k, s = t[i]
                if not k:
                    raise ScalarError(f"zero-frequency mode in {name!r} has no periodic antiderivative")
                key = (m, t[:i] + ((k, 1 - s),) + t[i + 1:])
                out[key] = out.get(key, 0) + (-v / k if s else v / k)
        return ScalarExpr._make(c, {k: v for k, v in out.items() if v}, self.den)

    def depends_on_denominator(self, name: str) -> bool:
        kind, i = self.chart.slot(name)
        if kind != "flat":
            return False
        return any(e and any(m[i] for m in self.chart._den_polys[j]) for j, e in enumerate(self.den))

    # -- inspection ---------------------------------------------------------------------
    def terms(self):
        """Yield ``(mono, trig, coefficient)`` for the numerator, sorted."""
        for (m, t) in sorted(self.num, key=_term_order):
            yield m, t, self.num[(m, t)]

    def poly_degree(self, names: Iterable[str] | None = None) -> int:
        c = self.chart
        idx = [c.slot(n)[1] for n in names if c.slot(n)[0] == "flat"] if names is not None else range(c._nf)
        return max((sum(m[i] for i in idx) for m, _ in self.num), default=0)

    def max_freq(self, names: Iterable[str] | None = None) -> int:
        c = self.chart
        idx = [c.slot(n)[1] for n in names if c.slot(n)[0] == "periodic"] if names is not None else range(c._np)
        return max((t[i][0] for _, t in self.num for i in idx), default=0)

    def evaluate(self, point: Mapping[str, float]) -> float:
        c = self.chart
        xs = [point[n] for n in c.flat_names]
        ts = [point[n] for n in c.periodic_names]

        def ev(num):
            total = 0.0
            for (m, t), v in num.items():
                term = float(v)
                for x, e in zip(xs, m):
                    term *= x ** e
                for th, (k, s) in zip(ts, t):
                    term *= math.sin(k * th) if s else math.cos(k * th)
                total += term
            return total

        value = ev(self.num)
        if any(self.den):
            value /= ev(c.den_power(self.den))
        return value

    # -- printing ---------------------------------------------------------------------
    def _num_str(self, num: dict) -> str:
        c = self.chart
        if not num:
            return "0"
        pieces = []
        for key in sorted(num, key=_term_order):
            m, t = key
            v = num[key]
            factors = []
            for n, e in zip(c.flat_names, m):
                if e == 1:
                    factors.append(n)
                elif e:
                    factors.append(f"{n}^{e}")
            for n, (k, s) in zip(c.periodic_names, t):
                if k:
                    arg = n if k == 1 else f"{k}*{n}"
                    factors.append(f"{'sin' if s else 'cos'}({arg})")
            sign = "-" if v < 0 else "+"
            a = abs(v)
            if not factors:
                body = str(a)
            elif a == 1:
                body = "*".join(factors)
            else:
                body = f"{a}*" + "*".join(factors)
            pieces.append((sign, body))
        first_sign, first = pieces[0]
        out = ("-" if first_sign == "-" else "") + first
        for sign, body in pieces[1:]:
            out += f" {sign} {body}"
        return out

    def __str__(self):
        num = self._num_str(self.num)
        if not any(self.den):
            return num
        c = self.chart
        parts = []
        for poly, e in zip(c._den_polys, self.den):
            if not e:
                continue
            s = self._num_str({(m, c._unit_trig): v for m, v in poly.items()})
            if len(poly) > 1 or not s.replace("_", "a").isalnum():
                s = f"({s})"
            parts.append(s if e == 1 else f"{s}^{e}")
        if len(self.num) > 1:
            num = f"({num})"
        den = parts[0] if len(parts) == 1 else "(" + "*".join(parts) + ")"
        return f"{num}/{den}"

    def __repr__(self):
        return f"ScalarExpr({self})"

    @property
    def nterms(self) -> int:
        return len(self.num)


def _term_order(key):
    m, t = key
    return (sum(m), m, tuple(k for k, _ in t), t)


def _reduce(chart: Chart, num: dict, den: tuple):
    if not num:
        return {}, (0,) * len(den)
    if not any(den):
        return num, den
    den = list(den)
    for i, e in enumerate(den):
        while e > 0:
            q = _num_divide(num, chart._den_polys[i])
            if q is None:
                break
            num = q
            e -= 1
        den[i] = e
    return num, tuple(den)


# ---------------------------------------------------------------------------
# Raw expression trees.


def normalize(raw, chart: Chart) -> ScalarExpr:
    """Normalize a raw expression tree.

    Nodes are tuples: ``("num", q)``, ``("var", name)``, ``("add", a, ...)``,
    ``("sub", a, b)``, ``("mul", a, ...)``, ``("neg", a)``, ``("pow", a, n)``,
    ``("inv", a)``, ``("sin", name, k)``, ``("cos", name, k)``.  Plain numbers
    and ``ScalarExpr`` instances are accepted as leaves.
    """
    if isinstance(raw, ScalarExpr):
        return _coerce(chart, raw)
    if isinstance(raw, (int, Fraction)):
        return chart.const(raw)
    if isinstance(raw, str):
        return chart.var(raw)
    op, *args = raw
    if op == "num":
        return chart.const(Fraction(args[0]))
    if op == "var":
        return chart.var(args[0])
    if op == "add":
        out = chart.zero()
        for a in args:
            out = out + normalize(a, chart)
        return out
    if op == "sub":
        return normalize(args[0], chart) - normalize(args[1], chart)
    if op == "mul":
        out = chart.one()
        for a in args:
            out = out * normalize(a, chart)
        return out
    if op == "neg":
        return -normalize(args[0], chart)
    if op == "pow":
        return normalize(args[0], chart) ** int(args[1])
    if op == "inv":
        return normalize(args[0], chart).inverse()
    if op in ("sin", "cos"):
        name, k = args[0], (args[1] if len(args) > 1 else 1)
        return chart.sin(name, k) if op == "sin" else chart.cos(name, k)
    raise ScalarError(f"unknown expression node {op!r}")


def partial(f: ScalarExpr, coord: str) -> ScalarExpr:
    return f.partial(coord)


def is_zero(f: ScalarExpr) -> bool:
    return f.is_zero()
