"""Exact linear feasibility over the rationals.

A minimal phase-1 simplex with Bland's rule and Fraction pivoting, enough to
decide feasibility of systems  A x <= b, x >= 0  exactly.  Degeneracy is
handled by Bland's anti-cycling rule; all arithmetic is exact, so there is no
tolerance anywhere.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Sequence

ZERO = Fraction(0)
ONE = Fraction(1)


def feasible(a: Sequence[Sequence[Fraction]], b: Sequence[Fraction]) -> bool:
    """Decide whether {x >= 0 : A x <= b} is nonempty (exact arithmetic)."""
    m = len(a)
    if m == 0:
        return True
    n = len(a[0]) if a else 0

    # rows with negative rhs are negated and given an artificial variable;
    # columns: n structural, m slacks, then artificials, then rhs
    neg_rows = [i for i in range(m) if b[i] < 0]
    n_art = len(neg_rows)
    if n_art == 0:
        return True  # x = 0 is feasible
    art_col = {row: n + m + k for k, row in enumerate(neg_rows)}
    width = n + m + n_art + 1

    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    for i in range(m):
        sign = -1 if i in art_col else 1
        row = [ZERO] * width
        for j in range(n):
            row[j] = sign * Fraction(a[i][j])
        row[n + i] = Fraction(sign)
        if i in art_col:
            row[art_col[i]] = ONE
            basis.append(art_col[i])
        else:
            basis.append(n + i)
        row[-1] = sign * Fraction(b[i])
        tableau.append(row)

    # objective: minimize the sum of artificials; reduced costs of the
    # starting basis are obtained by subtracting the artificial rows
    obj = [ZERO] * width
    for k in range(n + m, n + m + n_art):
        obj[k] = ONE
    for i, bv in enumerate(basis):
        if bv >= n + m:
            for j in range(width):
                obj[j] -= tableau[i][j]

    while True:
        # Bland: entering variable = lowest-index column with negative cost
        enter = -1
        for j in range(width - 1):
            if obj[j] < 0:
                enter = j
                break
        if enter == -1:
            break
        # ratio test, ties broken by lowest basis index (Bland)
        leave = -1
        best: Fraction | None = None
        for i in range(m):
            if tableau[i][enter] > 0:
                ratio = tableau[i][-1] / tableau[i][enter]
                if best is None or ratio < best or (
                    ratio == best and basis[i] < basis[leave]
                ):
                    best = ratio
                    leave = i
        if leave == -1:
            # unbounded phase-1 objective cannot happen (bounded below by 0)
            raise ArithmeticError("phase-1 simplex became unbounded")
        _pivot(tableau, obj, basis, leave, enter)

    return -obj[-1] == 0  # optimum of the artificial sum


def _pivot(tableau, obj, basis, leave: int, enter: int) -> None:
    piv = tableau[leave][enter]
    row = tableau[leave]
    inv = ONE / piv
    for j in range(len(row)):
        row[j] *= inv
    for i, other in enumerate(tableau):
        if i != leave and other[enter] != 0:
            f = other[enter]
            for j in range(len(other)):
                other[j] -= f * row[j]
    f = obj[enter]
    if f != 0:
        for j in range(len(obj)):
            obj[j] -= f * row[j]
    basis[leave] = enter


def nonnegative_contraction_feasible(b: Sequence[Sequence[Fraction]]) -> bool:
    """Decide whether some v >= 1 satisfies B v <= v componentwise.

    Substituting v = 1 + u reduces this to feasibility of
    (B - I) u <= (I - B) 1 with u >= 0.
    """
    n = len(b)
    if n == 0:
        return True
    a = [[Fraction(b[i][j]) - (1 if i == j else 0) for j in range(n)] for i in range(n)]
    rhs = [ONE - sum(Fraction(x) for x in b[i]) for i in range(n)]
    return feasible(a, rhs)
