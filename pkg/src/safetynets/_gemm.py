"""Exact matrix products for field-sized integers.

Strategy: split each operand into 16-bit limbs and multiply limb pairs with
float64 BLAS GEMMs.  Every partial product is an integer below 2^53, so the
float path is exact; partials are then recombined.  For p = 2^61−1 the
recombination stays in uint64 vectors using the Mersenne rotation
x·2^s ≡ ((x mod 2^(61−s)) << s) + (x >> (61−s)); for the 127-bit field (and
for the signed big-integer product) limbs are recombined in object arrays.

Inputs and outputs are plain lists of lists of Python ints; numpy never
leaks out of this module.
"""

from __future__ import annotations

import numpy as np

_LIMB = 16
_LIMB_MASK = (1 << _LIMB) - 1
_MAX_INNER = 1 << 19  # keeps every float64 partial product below 2^51
_SMALL = 1 << 14  # below this many scalar mults, schoolbook wins


def _shape(a: list[list[int]], b: list[list[int]]) -> tuple[int, int, int]:
    n, m, k = len(a), len(b), len(b[0])
    if len(a[0]) != m:
        raise ValueError(f"inner dimensions differ: {len(a[0])} vs {m}")
    if m > _MAX_INNER:
        raise ValueError(f"inner dimension {m} exceeds exactness bound {_MAX_INNER}")
    return n, m, k


def _schoolbook_mod(a, b, p):
    cols = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) % p for col in cols] for row in a]


def _schoolbook_exact(a, b):
    cols = list(zip(*b))
    return [[sum(x * y for x, y in zip(row, col)) for col in cols] for row in a]


def _limb_split_i64(m: np.ndarray, n_limbs: int) -> list[np.ndarray]:
    return [((m >> (_LIMB * i)) & _LIMB_MASK).astype(np.float64) for i in range(n_limbs)]


def _partial_products(a_limbs, b_limbs) -> dict[int, np.ndarray]:
    """int64 partial-sum matrices keyed by limb offset i+j."""
    groups: dict[int, np.ndarray] = {}
    for i, ai in enumerate(a_limbs):
        for j, bj in enumerate(b_limbs):
            part = (ai @ bj).astype(np.int64)
            k = i + j
            if k in groups:
                groups[k] += part
            else:
                groups[k] = part
    return groups


def _rotate_mod_m61(x: np.ndarray, s: int) -> np.ndarray:
    """x·2^s mod 2^61−1 for uint64 vectors of already-reduced values."""
    if s == 0:
        return x
    low_bits = 61 - s
    hi = x >> np.uint64(low_bits)
    lo = (x & np.uint64((1 << low_bits) - 1)) << np.uint64(s)
    t = lo + hi
    p = np.uint64((1 << 61) - 1)
    return np.where(t >= p, t - p, t)


def matmul_mod(a: list[list[int]], b: list[list[int]], field) -> list[list[int]]:
    """Exact (a @ b) mod field.p for canonical-residue matrices."""
    n, m, k = _shape(a, b)
    if n * m * k <= _SMALL:
        return _schoolbook_mod(a, b, field.p)
    if field.bits == 61:
        a64 = np.array(a, dtype=np.int64)
        b64 = np.array(b, dtype=np.int64)
        n_limbs = 4
        groups = _partial_products(
            _limb_split_i64(a64, n_limbs), _limb_split_i64(b64, n_limbs)
        )
        p = np.uint64((1 << 61) - 1)
        acc = np.zeros((n, k), dtype=np.uint64)
        for off, part in groups.items():
            # partial sums are < 2^54 < p, so they are already reduced
            acc = acc + _rotate_mod_m61(part.astype(np.uint64), (_LIMB * off) % 61)
            acc = np.where(acc >= p, acc - p, acc)
        return acc.tolist()
    # wide field: recombine limbs as big ints
    a_obj = np.array(a, dtype=object)
    b_obj = np.array(b, dtype=object)
    total = _exact_nonneg_obj(a_obj, b_obj, field.bits)
    return (total % field.p).tolist()


def _exact_nonneg_obj(a_obj: np.ndarray, b_obj: np.ndarray, bits: int) -> np.ndarray:
    """Exact integer product of nonnegative object matrices with < 2^bits entries."""
    n_limbs = (bits + _LIMB - 1) // _LIMB
    a_limbs = [((a_obj >> (_LIMB * i)) & _LIMB_MASK).astype(np.float64) for i in range(n_limbs)]
    b_limbs = [((b_obj >> (_LIMB * i)) & _LIMB_MASK).astype(np.float64) for i in range(n_limbs)]
    groups = _partial_products(a_limbs, b_limbs)
    total = np.zeros(next(iter(groups.values())).shape, dtype=object)
    for off, part in sorted(groups.items()):
        total = total + part.astype(object) * (1 << (_LIMB * off))
    return total


def matmul_exact(
    a: list[list[int]], b: list[list[int]], magnitude_bits: int | None = None
) -> list[list[int]]:
    """Exact integer product of signed matrices with |entry| < 2^magnitude_bits.

    When magnitude_bits is omitted it is taken from the widest entry.
    """
    n, m, k = _shape(a, b)
    if n * m * k <= _SMALL:
        return _schoolbook_exact(a, b)
    if magnitude_bits is None:
        widest = max(
            max((abs(v) for row in a for v in row), default=0),
            max((abs(v) for row in b for v in row), default=0),
        )
        magnitude_bits = max(widest.bit_length(), 1)
    a_obj = np.array(a, dtype=object)
    b_obj = np.array(b, dtype=object)
    a_pos = (a_obj + abs(a_obj)) // 2
    a_neg = a_pos - a_obj
    b_pos = (b_obj + abs(b_obj)) // 2
    b_neg = b_pos - b_obj
    total = (
        _exact_nonneg_obj(a_pos, b_pos, magnitude_bits)
        + _exact_nonneg_obj(a_neg, b_neg, magnitude_bits)
        - _exact_nonneg_obj(a_pos, b_neg, magnitude_bits)
        - _exact_nonneg_obj(a_neg, b_pos, magnitude_bits)
    )
    return total.tolist()
