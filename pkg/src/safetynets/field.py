"""Arithmetic in the two Mersenne-prime fields used by the proof system.

Field elements are plain Python ints in ``[0, p)``.  The modulus is session
configuration: it lives on a :class:`PrimeField` object that is passed
around explicitly, never tagged onto individual elements.  Mixing elements
from different fields is a programming error, caught where sessions are
constructed.
"""

from __future__ import annotations

from random import Random


class ZeroInverse(ZeroDivisionError):
    """Multiplicative inverse of zero requested."""


class OutOfRange(ValueError):
    """Signed value outside the representable range ±(p−1)/2."""


class PrimeField:
    """Modular arithmetic for p = 2^bits − 1 (bits ∈ {61, 127}).

    Because p is Mersenne, 2^bits ≡ 1 (mod p): reduction is a shift-and-add
    fold, no division anywhere on the arithmetic path.
    """

    __slots__ = ("name", "bits", "p", "half", "elem_bytes", "wire_id")

    def __init__(self, name: str, bits: int, elem_bytes: int, wire_id: int):
        self.name = name
        self.bits = bits
        self.p = (1 << bits) - 1
        self.half = (self.p - 1) // 2  # largest encodable magnitude
        self.elem_bytes = elem_bytes
        self.wire_id = wire_id

    def __repr__(self) -> str:
        return f"PrimeField(2^{self.bits}-1)"

    # arithmetic ---------------------------------------------------------

    def add(self, a: int, b: int) -> int:
        s = a + b
        return s - self.p if s >= self.p else s

    def sub(self, a: int, b: int) -> int:
        d = a - b
        return d + self.p if d < 0 else d

    def neg(self, a: int) -> int:
        return self.p - a if a else 0

    def mul(self, a: int, b: int) -> int:
        # 2^bits ≡ 1: fold the high word back onto the low word.  Two folds
        # bring a 2·bits-wide product below p + 2; one conditional subtract
        # finishes the job.
        p, k = self.p, self.bits
        t = a * b
        t = (t >> k) + (t & p)
        t = (t >> k) + (t & p)
        return t - p if t >= p else t

    def pow(self, a: int, e: int) -> int:
        return pow(a, e, self.p)

    def inv(self, a: int) -> int:
        """Fermat inverse a^(p−2); raises ZeroInverse on 0."""
        if a == 0:
            raise ZeroInverse("0 has no multiplicative inverse")
        return pow(a, self.p - 2, self.p)

    # signed embedding -----------------------------------------------------

    def encode_signed(self, v: int) -> int:
        """Map v ∈ [−(p−1)/2, (p−1)/2] to its canonical residue."""
        if v > self.half or v < -self.half:
            raise OutOfRange(f"|{v}| exceeds (p-1)/2 for {self!r}")
        return v if v >= 0 else self.p + v

    def decode_signed(self, e: int) -> int:
        """Inverse of encode_signed: residues above (p−1)/2 are negative."""
        return e if e <= self.half else e - self.p

    # wire form ------------------------------------------------------------

    def to_bytes(self, e: int) -> bytes:
        return e.to_bytes(self.elem_bytes, "little")

    def from_bytes(self, raw: bytes) -> int:
        if len(raw) != self.elem_bytes:
            raise ValueError(f"expected {self.elem_bytes} bytes, got {len(raw)}")
        e = int.from_bytes(raw, "little")
        if e >= self.p:
            raise ValueError("non-canonical field element on the wire")
        return e

    # sampling ---------------------------------------------------------------

    def rand_element(self, rng: Random) -> int:
        # rejection-sample bits-wide draws; only the all-ones word (= p) is
        # ever rejected.
        while True:
            v = rng.getrandbits(self.bits)
            if v < self.p:
                return v


M61 = PrimeField("m61", 61, 8, 0)
M127 = PrimeField("m127", 127, 16, 1)

FIELDS = {"m61": M61, "m127": M127}
FIELDS_BY_WIRE_ID = {f.wire_id: f for f in FIELDS.values()}
