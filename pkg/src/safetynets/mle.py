"""Multilinear extensions of dense value tables.

A table over v Boolean variables is stored flat, and the variable order is
big-endian: variable 0 is the most significant bit of the index.  Folding
(binding) variable 0 therefore combines the first and second halves of the
array, which keeps every fold a pair of contiguous slices.  Matrices are
row-major with the row variables in front, so row variables fold first.
This ordering is normative: prover and verifier must agree on it.
"""

from __future__ import annotations


class DimensionMismatch(ValueError):
    """Point length (or table length) does not match the variable count."""


class EmptyTable(ValueError):
    """Fold requested on a table with no variables left."""


def log2_exact(n: int) -> int:
    if n <= 0 or n & (n - 1):
        raise DimensionMismatch(f"{n} is not a power of two")
    return n.bit_length() - 1


class EvalTable:
    """Dense evaluations of a function {0,1}^m × {0,1}^l → F_p."""

    __slots__ = ("values", "row_vars", "col_vars")

    def __init__(self, values: list[int], row_vars: int, col_vars: int):
        if len(values) != 1 << (row_vars + col_vars):
            raise DimensionMismatch(
                f"{len(values)} values for {row_vars}+{col_vars} variables"
            )
        self.values = values
        self.row_vars = row_vars
        self.col_vars = col_vars

    @classmethod
    def from_matrix(cls, rows: list[list[int]]) -> "EvalTable":
        n_rows = len(rows)
        n_cols = len(rows[0])
        if any(len(r) != n_cols for r in rows):
            raise DimensionMismatch("ragged matrix")
        flat = [v for row in rows for v in row]
        return cls(flat, log2_exact(n_rows), log2_exact(n_cols))

    @classmethod
    def from_vector(cls, vec: list[int]) -> "EvalTable":
        return cls(list(vec), log2_exact(len(vec)), 0)

    @property
    def num_vars(self) -> int:
        return self.row_vars + self.col_vars

    def __len__(self) -> int:
        return len(self.values)


def eq_evaluate(field, a: tuple[int, ...], b: tuple[int, ...]) -> int:
    """Π_i ((1−a_i)(1−b_i) + a_i·b_i) — the identity table's extension."""
    if len(a) != len(b):
        raise DimensionMismatch(f"point lengths {len(a)} vs {len(b)}")
    p = field.p
    acc = 1
    for ai, bi in zip(a, b):
        acc = acc * (1 - ai - bi + 2 * ai * bi) % p
    return acc


def eq_table(field, point: tuple[int, ...]) -> list[int]:
    """All 2^n values of x ↦ eq(point, x) for Boolean x, in table order.

    Built by tensoring one coordinate at a time; since each new coordinate
    must become the most significant bit, coordinates are consumed in
    reverse.
    """
    p = field.p
    arr = [1]
    for c in reversed(point):
        nc = (1 - c) % p
        arr = [a * nc % p for a in arr] + [a * c % p for a in arr]
    return arr


def fold_values(field, values: list[int], challenge: int) -> list[int]:
    """Bind the first (most significant) variable of a flat table."""
    if len(values) < 2:
        raise EmptyTable("no variable left to fold")
    p = field.p
    half = len(values) // 2
    c = challenge
    lo = values[:half]
    hi = values[half:]
    return [(a + c * (b - a)) % p for a, b in zip(lo, hi)]


def fold_table(field, table: EvalTable, challenge: int) -> EvalTable:
    """out[x] = (1−c)·table[0,x] + c·table[1,x]; row variables first."""
    if table.row_vars:
        rv, cv = table.row_vars - 1, table.col_vars
    elif table.col_vars:
        rv, cv = 0, table.col_vars - 1
    else:
        raise EmptyTable("no variable left to fold")
    return EvalTable(fold_values(field, table.values, challenge), rv, cv)


def fold_cols(field, values: list[int], n_rows: int, point: tuple[int, ...]) -> list[int]:
    """Bind every column variable of a flat row-major matrix to `point`.

    Returns one value per row: row a ↦ M̃(a, point) for Boolean a.
    """
    p = field.p
    width = len(values) // n_rows
    if width != 1 << len(point):
        raise DimensionMismatch(f"{width} columns for {len(point)} column variables")
    rows = [values[i * width : (i + 1) * width] for i in range(n_rows)]
    for c in point:
        half = len(rows[0]) // 2
        rows = [
            [(a + c * (b - a)) % p for a, b in zip(row[:half], row[half:])]
            for row in rows
        ]
    return [row[0] for row in rows]


def mle_evaluate(field, table: EvalTable, t: tuple[int, ...], u: tuple[int, ...]) -> int:
    """W̃(t,u) = Σ_{a,b Boolean} table[a,b]·eq(t,a)·eq(u,b), in O(size)."""
    if len(t) != table.row_vars or len(u) != table.col_vars:
        raise DimensionMismatch(
            f"point ({len(t)},{len(u)}) for table ({table.row_vars},{table.col_vars})"
        )
    vals = table.values
    for c in t:
        vals = fold_values(field, vals, c)
    for c in u:
        vals = fold_values(field, vals, c)
    return vals[0]
