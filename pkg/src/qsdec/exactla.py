"""Small exact linear algebra helpers over the rationals.

Dense Fraction matrices as lists of lists; sizes in this project never exceed
a few dozen rows, so plain Gaussian elimination is the right tool.
"""

from __future__ import annotations

from fractions import Fraction
from typing import List, Optional, Sequence

Vec = List[Fraction]
Mat = List[List[Fraction]]


def mat(rows) -> Mat:
    return [[Fraction(x) for x in r] for r in rows]


def mat_rank(rows: Sequence[Sequence[Fraction]]) -> int:
    a = [list(map(Fraction, r)) for r in rows]
    if not a:
        return 0
    m, n = len(a), len(a[0])
    rank = 0
    row = 0
    for col in range(n):
        piv = next((r for r in range(row, m) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        pv = a[row][col]
        for r in range(row + 1, m):
            if a[r][col] != 0:
                f = a[r][col] / pv
                for c in range(col, n):
                    a[r][c] -= f * a[row][c]
        row += 1
        rank += 1
        if row == m:
            break
    return rank


def mat_solve(A: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> Optional[Vec]:
    """Solve the square system A x = b exactly; None if A is singular."""
    n = len(A)
    a = [list(map(Fraction, A[i])) + [Fraction(b[i])] for i in range(n)]
    for col in range(n):
        piv = next((r for r in range(col, n) if a[r][col] != 0), None)
        if piv is None:
            return None
        a[col], a[piv] = a[piv], a[col]
        pv = a[col][col]
        a[col] = [x / pv for x in a[col]]
        for r in range(n):
            if r != col and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[col])]
    return [a[i][n] for i in range(n)]


def mat_mul(A: Mat, B: Mat) -> Mat:
    n, k, m = len(A), len(B), len(B[0])
    out = [[Fraction(0)] * m for _ in range(n)]
    for i in range(n):
        for l in range(k):
            ail = A[i][l]
            if ail == 0:
                continue
            for j in range(m):
                out[i][j] += ail * B[l][j]
    return out


def mat_transpose(A: Sequence[Sequence[Fraction]]) -> Mat:
    return [list(col) for col in zip(*A)]


def identity(n: int) -> Mat:
    return [[Fraction(1 if i == j else 0) for j in range(n)] for i in range(n)]


def independent_subset(vectors: Sequence[Sequence[Fraction]]) -> List[int]:
    """Indices of a maximal linearly independent subset, greedy in order."""
    chosen: List[int] = []
    basis: List[List[Fraction]] = []
    for i, v in enumerate(vectors):
        cand = basis + [list(map(Fraction, v))]
        if mat_rank(cand) == len(cand):
            basis = cand
            chosen.append(i)
    return chosen


def nullspace(rows: Sequence[Sequence[Fraction]]) -> List[Vec]:
    """Exact basis of the right nullspace of the given row matrix."""
    if not rows:
        return []
    a = [list(map(Fraction, r)) for r in rows]
    m, n = len(a), len(a[0])
    pivots = []
    row = 0
    for col in range(n):
        piv = next((r for r in range(row, m) if a[r][col] != 0), None)
        if piv is None:
            continue
        a[row], a[piv] = a[piv], a[row]
        pv = a[row][col]
        a[row] = [x / pv for x in a[row]]
        for r in range(m):
            if r != row and a[r][col] != 0:
                f = a[r][col]
                a[r] = [x - f * y for x, y in zip(a[r], a[row])]
        pivots.append(col)
        row += 1
        if row == m:
            break
    free = [c for c in range(n) if c not in pivots]
    out = []
    for fc in free:
        v = [Fraction(0)] * n
        v[fc] = Fraction(1)
        for r, pc in enumerate(pivots):
            v[pc] = -a[r][fc]
        out.append(v)
    return out
