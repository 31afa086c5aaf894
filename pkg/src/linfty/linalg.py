"""Small exact linear algebra over Q used by the cohomology computations.

Matrices are lists of row lists of Fractions.  Sizes stay tiny (dozens of
rows), so plain Gaussian elimination is plenty.
"""
from __future__ import annotations

from fractions import Fraction

Matrix = list[list[Fraction]]


def rref(matrix: Matrix) -> tuple[Matrix, list[int]]:
    """Reduced row echelon form and the list of pivot columns."""
    m = [row[:] for row in matrix]
    rows = len(m)
    cols = len(m[0]) if rows else 0
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        pivot = next((i for i in range(r, rows) if m[i][c] != 0), None)
        if pivot is None:
            continue
        m[r], m[pivot] = m[pivot], m[r]
        inv = Fraction(1) / m[r][c]
        m[r] = [v * inv for v in m[r]]
        for i in range(rows):
            if i != r and m[i][c] != 0:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == rows:
            break
    return m, pivots


def rank(matrix: Matrix) -> int:
    if not matrix or not matrix[0]:
        return 0
    return len(rref(matrix)[1])


def nullspace(matrix: Matrix, cols: int) -> list[list[Fraction]]:
    """Basis of the kernel of the linear map given by rows acting on R^cols.

    The matrix maps column vectors of length ``cols``; rows are the images'
    coordinates, i.e. entry [i][j] is the i-th output coordinate of basis
    vector j.  (Column-convention kernel.)
    """
    if cols == 0:
        return []
    if not matrix:
        return [unit_vector(cols, j) for j in range(cols)]
    reduced, pivots = rref(matrix)
    free = [j for j in range(cols) if j not in pivots]
    basis = []
    for j in free:
        v = [Fraction(0)] * cols
        v[j] = Fraction(1)
        for r, c in enumerate(pivots):
            v[c] = -reduced[r][j]
        basis.append(v)
    return basis


def unit_vector(n: int, j: int) -> list[Fraction]:
    v = [Fraction(0)] * n
    v[j] = Fraction(1)
    return v


def column_space_contains(matrix_cols: list[list[Fraction]], vector: list[Fraction]) -> bool:
    """Whether ``vector`` lies in the span of the given column vectors."""
    if all(v == 0 for v in vector):
        return True
    if not matrix_cols:
        return False
    span = [list(col) for col in matrix_cols]
    return rank(_transpose(span)) == rank(_transpose(span + [vector]))


def quotient_dimension(kernel: list[list[Fraction]], image: list[list[Fraction]]) -> int:
    """dim(ker / im) for im a subspace of ker (vectors as coordinate lists)."""
    if not kernel:
        return 0
    k = rank(kernel)
    i = rank(image) if image else 0
    return k - i


def quotient_representatives(
    kernel: list[list[Fraction]], image: list[list[Fraction]]
) -> list[list[Fraction]]:
    """Kernel vectors projecting to a basis of ker/im."""
    reps: list[list[Fraction]] = []
    current = [list(v) for v in image]
    for v in kernel:
        if rank(current + [v]) > rank(current):
            reps.append(list(v))
            current.append(list(v))
    return reps


def _transpose(rows: list[list[Fraction]]) -> Matrix:
    if not rows:
        return []
    return [list(col) for col in zip(*rows)]
