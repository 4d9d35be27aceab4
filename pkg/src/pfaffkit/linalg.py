"""Sparse exact linear algebra over the rationals."""

from __future__ import annotations

from fractions import Fraction
from math import gcd, lcm
from typing import Dict, Iterable, List, Sequence, Tuple

__all__ = ["RationalMatrix", "ComplexError", "rank", "kernel_basis", "kernel_with_free_columns", "image_basis", "cohomology_dim"]


class ComplexError(ValueError):
    """Consecutive maps do not compose to zero."""


class RationalMatrix:
    """Immutable sparse matrix; ``entries`` maps ``(i, j)`` to a nonzero Fraction."""

    __slots__ = ("rows", "cols", "entries", "_rank")

    def __init__(self, rows: int, cols: int, entries: Dict[Tuple[int, int], object] | None = None):
        if rows < 0 or cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        self.rows = rows
        self.cols = cols
        clean = {}
        for (i, j), v in (entries or {}).items():
            if not (0 <= i < rows and 0 <= j < cols):
                raise IndexError(f"entry ({i}, {j}) outside a {rows}x{cols} matrix")
            v = Fraction(v)
            if v:
                clean[(i, j)] = v
        self.entries = clean
        self._rank = None

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence], cols: int | None = None) -> "RationalMatrix":
        rows = [list(r) for r in rows]
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ValueError("ragged rows")
        return cls(len(rows), cols, {(i, j): v for i, r in enumerate(rows) for j, v in enumerate(r) if v})

    @classmethod
    def zero(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls(rows, cols)

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    @property
    def shape(self) -> Tuple[int, int]:
        return (self.rows, self.cols)

    def to_rows(self) -> List[List[Fraction]]:
        out = [[Fraction(0)] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def row_dicts(self) -> List[Dict[int, Fraction]]:
        out: List[Dict[int, Fraction]] = [{} for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def transpose(self) -> "RationalMatrix":
        return RationalMatrix(self.cols, self.rows, {(j, i): v for (i, j), v in self.entries.items()})

    def __matmul__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.cols != other.rows:
            raise ValueError(f"shape mismatch {self.shape} @ {other.shape}")
        brows = other.row_dicts()
        out: Dict[Tuple[int, int], Fraction] = {}
        for (i, k), a in self.entries.items():
            for j, b in brows[k].items():
                out[(i, j)] = out.get((i, j), 0) + a * b
        return RationalMatrix(self.rows, other.cols, out)

    def apply(self, v: Sequence) -> List[Fraction]:
        out = [Fraction(0)] * self.rows
        for (i, j), a in self.entries.items():
            if v[j]:
                out[i] += a * v[j]
        return out

    def is_zero(self) -> bool:
        return not self.entries

    def permute_columns(self, perm: Sequence[int]) -> "RationalMatrix":
        """Column ``j`` moves to position ``perm[j]``."""
        return RationalMatrix(self.rows, self.cols, {(i, perm[j]): v for (i, j), v in self.entries.items()})

    def permute_rows(self, perm: Sequence[int]) -> "RationalMatrix":
        return RationalMatrix(self.rows, self.cols, {(perm[i], j): v for (i, j), v in self.entries.items()})

    def __eq__(self, other):
        if not isinstance(other, RationalMatrix):
            return NotImplemented
        return self.shape == other.shape and self.entries == other.entries

    def __hash__(self):
        return hash((self.shape, frozenset(self.entries.items())))

    def __repr__(self):
        return f"RationalMatrix({self.rows}x{self.cols}, nnz={len(self.entries)})"

    def rank(self) -> int:
        if self._rank is None:
            self._rank = _integer_rank(self)
        return self._rank

    def kernel_basis(self) -> List[List[Fraction]]:
        return kernel_basis(self)

    def image_basis(self) -> List[List[Fraction]]:
        return image_basis(self)


def _integer_rows(M: RationalMatrix) -> List[Dict[int, int]]:
    """Scale each row to primitive integers."""
    out = []
    for row in M.row_dicts():
        if not row:
            continue
        den = lcm(*(v.denominator for v in row.values()))
        ints = {j: int(v * den) for j, v in row.items()}
        g = 0
        for x in ints.values():
            g = gcd(g, x)
        out.append({j: x // g for j, x in ints.items()})
    return out


def _primitive(row: Dict[int, int]) -> Dict[int, int]:
    g = 0
    for x in row.values():
        g = gcd(g, x)
        if g == 1:
            return row
    return {j: x // g for j, x in row.items()} if g > 1 else row


def _combine(r: Dict[int, int], prow: Dict[int, int], c: int) -> Dict[int, int]:
    """Integer combination of ``r`` and ``prow`` clearing column ``c``."""
    a, p = r[c], prow[c]
    g = gcd(a, p)
    fa, fp = p // g, a // g
    new = {j: fa * v for j, v in r.items()} if fa != 1 else dict(r)
    for j, v in prow.items():
        w = new.get(j, 0) - fp * v
        if w:
            new[j] = w
        else:
            new.pop(j, None)
    return _primitive(new) if new else new


def _integer_echelon(M: RationalMatrix, reduced: bool = False):
    """Fraction-free sparse elimination with content removal.

    Returns ``{pivot column: primitive integer row}``.  With ``reduced`` every
    pivot column is cleared from all other rows.
    """
    pivots: Dict[int, Dict[int, int]] = {}
    for row in _integer_rows(M):
        r = row
        while r:
            hit = [c for c in r if c in pivots]
            if not hit:
                break
            c = min(hit)
            r = _combine(r, pivots[c], c)
        if not r:
            continue
        c = min(r)
        if reduced:
            for pc, prow in pivots.items():
                if c in prow:
                    pivots[pc] = _combine(prow, r, c)
        pivots[c] = r
    return pivots


def _integer_rank(M: RationalMatrix) -> int:
    return len(_integer_echelon(M))


def rank(M: RationalMatrix) -> int:
    return M.rank()


def kernel_basis(M: RationalMatrix) -> List[List[Fraction]]:
    """One kernel vector per free column, normalized to 1 there."""
    return kernel_with_free_columns(M)[1]


def kernel_with_free_columns(M: RationalMatrix):
    """``(free, vectors)``: vector ``n`` is 1 at ``free[n]`` and 0 at the other free columns.

    The coordinates of a kernel element in this basis are its entries at the
    free columns.
    """
    pivots = _integer_echelon(M, reduced=True)
    if M._rank is None:
        M._rank = len(pivots)
    free = []
    out = []
    for f in range(M.cols):
        if f in pivots:
            continue
        v = [Fraction(0)] * M.cols
        v[f] = Fraction(1)
        for pc, r in pivots.items():
            a = r.get(f)
            if a:
                v[pc] = Fraction(-a, r[pc])
        free.append(f)
        out.append(v)
    return free, out


def image_basis(M: RationalMatrix) -> List[List[Fraction]]:
    """Pivot columns of ``M``, a basis of its column space."""
    pcols = _pivot_columns(M)
    cols = M.to_rows()
    return [[cols[i][j] for i in range(M.rows)] for j in pcols]


def _pivot_columns(M: RationalMatrix) -> List[int]:
    """Leftmost maximal independent set of columns."""
    # Leading columns of the reduced form are exactly the greedy column choice.
    return sorted(_integer_echelon(M, reduced=True))


def cohomology_dim(d_in: RationalMatrix, d_out: RationalMatrix) -> int:
    """``dim ker d_out - rank d_in`` at the middle space of ``d_in`` then ``d_out``."""
    if d_in.rows != d_out.cols:
        raise ValueError(f"middle dimensions differ: {d_in.rows} vs {d_out.cols}")
    if not (d_out @ d_in).is_zero():
        raise ComplexError("d_out ∘ d_in is not zero")
    return d_out.cols - d_out.rank() - d_in.rank()


def stack(blocks: Iterable[RationalMatrix], cols: int) -> RationalMatrix:
    """Vertical concatenation."""
    entries = {}
    offset = 0
    for B in blocks:
        if B.cols != cols:
            raise ValueError("column mismatch in stack")
        for (i, j), v in B.entries.items():
            entries[(i + offset, j)] = v
        offset += B.rows
    return RationalMatrix(offset, cols, entries)
