"""Generic-point linear algebra over the fraction field of the coefficient ring.

Ranks and kernels are decided symbolically: an entry counts as nonzero when
its canonical form is nonzero, so answers hold off a proper vanishing locus.
All elimination is division-free; explicit inverses go through adjugates and
an exact division by the determinant.
"""

from __future__ import annotations

from typing import List, Sequence

from .scalars import Chart, NotInvertible, ScalarExpr

Matrix = List[List[ScalarExpr]]


def _cost(x: ScalarExpr):
    return (0 if x.is_constant() else 1, x.nterms, sum(x.den))


def echelon(chart: Chart, rows: Sequence[Sequence[ScalarExpr]]):
    """Division-free row reduction.

    Returns ``(pivot_rows, pivot_cols)``: original indices of a maximal
    generically independent set of rows and the pivot column chosen for each.
    The square submatrix on those rows and columns is generically invertible.
    """
    basis = []  # (reduced row, pivot column)
    pivot_rows, pivot_cols = [], []
    for idx, row in enumerate(rows):
        r = list(row)
        for prow, pc in basis:
            a = r[pc]
            if a.num:
                p = prow[pc]
                r = [p * x - a * y for x, y in zip(r, prow)]
        nz = [j for j, x in enumerate(r) if x.num]
        if not nz:
            continue
        pc = min(nz, key=lambda j: (_cost(r[j]), j))
        basis.append((r, pc))
        pivot_rows.append(idx)
        pivot_cols.append(pc)
    return pivot_rows, pivot_cols


def rank(chart: Chart, rows) -> int:
    return len(echelon(chart, rows)[0])


def det(chart: Chart, rows) -> ScalarExpr:
    n = len(rows)
    memo = {}

    def rec(r, cols):
        if r == n:
            return chart.one()
        key = (r, cols)
        if key in memo:
            return memo[key]
        total = chart.zero()
        for pos, j in enumerate(cols):
            a = rows[r][j]
            if a.num:
                sub = rec(r + 1, cols[:pos] + cols[pos + 1:])
                if sub.num:
                    term = a * sub
                    total = total + term if pos % 2 == 0 else total - term
        memo[key] = total
        return total

    if any(len(r) != n for r in rows):
        raise ValueError("determinant of a non-square matrix")
    return rec(0, tuple(range(n)))


def adjugate(chart: Chart, rows) -> Matrix:
    n = len(rows)
    adj = [[chart.zero()] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [r[:j] + r[j + 1:] for k, r in enumerate(rows) if k != i]
            m = det(chart, minor) if n > 1 else chart.one()
            adj[j][i] = -m if (i + j) & 1 else m
    return adj


def inverse(chart: Chart, rows) -> Matrix:
    """Exact inverse; raises NotInvertible naming the missing denominator."""
    rows = [list(r) for r in rows]
    d = det(chart, rows)
    if not d.num:
        raise NotInvertible("matrix is generically singular", d)
    adj = adjugate(chart, rows)
    return [[x.exact_div(d) if x.num else x for x in row] for row in adj]


def kernel(chart: Chart, rows, ncols: int) -> Matrix:
    """Basis of the generic kernel as polynomial vectors (Cramer's rule)."""
    rows = [list(r) for r in rows]
    if not rows:
        return [[chart.one() if i == j else chart.zero() for i in range(ncols)] for j in range(ncols)]
    prow, pcol = echelon(chart, rows)
    A = [[rows[i][j] for j in pcol] for i in prow]
    dA = det(chart, A) if A else chart.one()
    unit = dA.is_unit()
    out = []
    for f in range(ncols):
        if f in pcol:
            continue
        v = [chart.zero()] * ncols
        v[f] = dA
        for k, j in enumerate(pcol):
            Ak = [r[:k] + [rows[i][f]] + r[k + 1:] for r, i in zip(A, prow)]
            v[j] = -det(chart, Ak)
        if unit:
            v = [x.exact_div(dA) if x.num else x for x in v]
        out.append(v)
    return out


def matvec(chart: Chart, rows, v) -> list:
    out = []
    for r in rows:
        acc = chart.zero()
        for a, b in zip(r, v):
            if a.num and b.num:
                acc = acc + a * b
        out.append(acc)
    return out


def matmul(chart: Chart, A, B) -> Matrix:
    cols = list(zip(*B)) if B else []
    return [[sum((a * b for a, b in zip(row, col) if a.num and b.num), chart.zero()) for col in cols] for row in A]
