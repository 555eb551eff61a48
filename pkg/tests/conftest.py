"""Shared brute-force oracles and tiny protocol harness helpers.

Oracles here are written independently of the library's algorithms: direct
big-integer sums over Boolean points, schoolbook matrix products, naive
polynomial evaluation.  Tests compare the fast implementations against
these.
"""

import random

from safetynets import FIELDS
from safetynets.session import InteractiveSource, ProverChannel, ReplayChannel


def bits_of(index: int, width: int) -> tuple:
    """Big-endian bit tuple of an index (bit 0 = most significant)."""
    return tuple((index >> (width - 1 - i)) & 1 for i in range(width))


def eq_oracle(p: int, a, b) -> int:
    acc = 1
    for ai, bi in zip(a, b):
        acc = acc * (((1 - ai) * (1 - bi) + ai * bi) % p) % p
    return acc


def mle_oracle(p: int, matrix, t, u) -> int:
    """Brute-force Lagrange sum over every Boolean (row, col) point."""
    n_rows, n_cols = len(matrix), len(matrix[0])
    rv, cv = (n_rows - 1).bit_length(), (n_cols - 1).bit_length()
    assert n_rows == 1 << rv and n_cols == 1 << cv
    total = 0
    for a in range(n_rows):
        ea = eq_oracle(p, t, bits_of(a, rv))
        for b in range(n_cols):
            total += matrix[a][b] * ea % p * eq_oracle(p, u, bits_of(b, cv))
    return total % p


def matmul_oracle(a, b):
    """Schoolbook exact integer product."""
    inner = len(b)
    return [
        [sum(row[j] * b[j][c] for j in range(inner)) for c in range(len(b[0]))]
        for row in a
    ]


def random_matrix(rng: random.Random, p: int, rows: int, cols: int):
    return [[rng.randrange(p) for _ in range(cols)] for _ in range(rows)]


def scripted_pair(field, script):
    """A prover channel and a replay factory sharing one challenge script."""
    prover = ProverChannel(field, InteractiveSource(field, script=list(script)))

    def replay():
        return ReplayChannel(
            field, prover.phases, InteractiveSource(field, script=list(script))
        )

    return prover, replay


def both_fields():
    return sorted(FIELDS.values(), key=lambda f: f.bits)


def small_field_model(field, shapes, rng, mag=5, bias_mag=None):
    """Random signed-integer model with the given (rows, cols) chain."""
    from fractions import Fraction

    from safetynets import FieldLayer, FieldModel

    if bias_mag is None:
        bias_mag = mag
    layers = []
    for rows, cols in shapes:
        w = [[rng.randint(-mag, mag) for _ in range(cols)] for _ in range(rows)]
        b = [rng.randint(-bias_mag, bias_mag) for _ in range(rows)]
        layers.append(
            FieldLayer(
                [[field.encode_signed(v) for v in row] for row in w],
                [field.encode_signed(v) for v in b],
                rows,
                cols,
            )
        )
    return FieldModel(field, Fraction(1), Fraction(1), layers)


def signed_batch(field, rng, rows, cols, mag=3):
    """Random encoded input batch with small signed entries."""
    return [
        [field.encode_signed(rng.randint(-mag, mag)) for _ in range(cols)]
        for _ in range(rows)
    ]
