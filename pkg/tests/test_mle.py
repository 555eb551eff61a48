import random

import pytest

from conftest import bits_of, both_fields, eq_oracle, mle_oracle, random_matrix
from safetynets import (
    M61,
    DimensionMismatch,
    EmptyTable,
    EvalTable,
    eq_evaluate,
    eq_table,
    fold_table,
    fold_values,
    mle_evaluate,
)


def test_boolean_points_return_entries():
    et = EvalTable.from_matrix([[1, 2], [3, 4]])
    assert mle_evaluate(M61, et, (0,), (1,)) == 2
    assert mle_evaluate(M61, et, (1,), (0,)) == 3


def test_known_point_off_cube():
    # (1−t)(1−u)·1 + (1−t)u·2 + t(1−u)·3 + tu·4 at t=u=2
    et = EvalTable.from_matrix([[1, 2], [3, 4]])
    assert mle_oracle(M61.p, [[1, 2], [3, 4]], (2,), (2,)) == 7
    assert mle_evaluate(M61, et, (2,), (2,)) == 7


def test_zero_table_evaluates_to_zero():
    rng = random.Random(3)
    et = EvalTable.from_matrix([[0] * 4 for _ in range(4)])
    for _ in range(10):
        t = tuple(rng.randrange(M61.p) for _ in range(2))
        u = tuple(rng.randrange(M61.p) for _ in range(2))
        assert mle_evaluate(M61, et, t, u) == 0


def test_eq_on_boolean_points():
    assert eq_evaluate(M61, (0, 1, 1), (0, 1, 1)) == 1
    assert eq_evaluate(M61, (0, 1), (1, 1)) == 0


def test_eq_off_cube():
    # (1−2)(1−3) + 2·3 = 8
    assert eq_oracle(M61.p, (2,), (3,)) == 8
    assert eq_evaluate(M61, (2,), (3,)) == 8


def test_eq_length_mismatch():
    with pytest.raises(DimensionMismatch):
        eq_evaluate(M61, (1, 2), (1,))


def test_fold_restricts_boolean_challenges():
    et = EvalTable.from_matrix([[1, 2], [3, 4]])
    assert fold_table(M61, et, 0).values == [1, 2]
    assert fold_table(M61, et, 1).values == [3, 4]


def test_fold_composition_equals_evaluate():
    et = EvalTable.from_matrix([[1, 2], [3, 4]])
    folded = fold_table(M61, fold_table(M61, et, 2), 2)
    assert folded.values == [7]
    rng = random.Random(11)
    for f in both_fields():
        mat = random_matrix(rng, f.p, 4, 8)
        t = tuple(rng.randrange(f.p) for _ in range(2))
        u = tuple(rng.randrange(f.p) for _ in range(3))
        table = EvalTable.from_matrix(mat)
        for c in t + u:
            table = fold_table(f, table, c)
        assert table.values[0] == mle_evaluate(f, EvalTable.from_matrix(mat), t, u)


def test_fold_empty_table_raises():
    et = EvalTable([5], 0, 0)
    with pytest.raises(EmptyTable):
        fold_table(M61, et, 1)
    with pytest.raises(EmptyTable):
        fold_values(M61, [5], 1)


def test_boolean_agreement_exhaustive():
    rng = random.Random(5)
    for rows, cols in ((1, 1), (2, 1), (2, 4), (4, 4), (8, 8)):
        mat = random_matrix(rng, M61.p, rows, cols)
        et = EvalTable.from_matrix(mat)
        rv, cv = et.row_vars, et.col_vars
        for a in range(rows):
            for b in range(cols):
                assert mle_evaluate(M61, et, bits_of(a, rv), bits_of(b, cv)) == mat[a][b]


def test_oracle_equivalence_random_points():
    rng = random.Random(6)
    for f in both_fields():
        for rows, cols in ((2, 2), (4, 8), (8, 8)):
            mat = random_matrix(rng, f.p, rows, cols)
            et = EvalTable.from_matrix(mat)
            for _ in range(100):
                t = tuple(rng.randrange(f.p) for _ in range(et.row_vars))
                u = tuple(rng.randrange(f.p) for _ in range(et.col_vars))
                assert mle_evaluate(f, et, t, u) == mle_oracle(f.p, mat, t, u)


def test_multilinearity_along_each_variable():
    # fixing all variables but one must give an affine function
    rng = random.Random(8)
    f = M61
    mat = random_matrix(rng, f.p, 4, 4)
    et = EvalTable.from_matrix(mat)
    for var in range(4):
        base = [rng.randrange(f.p) for _ in range(4)]

        def at(x):
            pt = list(base)
            pt[var] = x
            return mle_evaluate(f, et, tuple(pt[:2]), tuple(pt[2:]))

        v0, v1, v2 = at(0), at(1), at(2)
        assert (v2 - v1) % f.p == (v1 - v0) % f.p  # equal successive differences


def test_eq_table_matches_pointwise_eq():
    rng = random.Random(9)
    for f in both_fields():
        for n in (0, 1, 2, 4):
            point = tuple(rng.randrange(f.p) for _ in range(n))
            table = eq_table(f, point)
            assert len(table) == 1 << n
            for idx in range(1 << n):
                assert table[idx] == eq_oracle(f.p, point, bits_of(idx, n))


def test_from_matrix_validation():
    with pytest.raises(DimensionMismatch):
        EvalTable.from_matrix([[1, 2], [3]])
    with pytest.raises(DimensionMismatch):
        EvalTable.from_matrix([[1, 2, 3]])  # non-power-of-two width
    with pytest.raises(DimensionMismatch):
        mle_evaluate(M61, EvalTable.from_matrix([[1, 2]]), (1,), (1,))
