"""Arithmetic in GF(2^w) for w <= 8, backed by precomputed lookup tables.

Elements are plain ints in ``range(order)``. Addition is XOR; multiplication
and inversion go through the tables built once per :class:`FieldSpec`.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .errors import InvalidInverse

# Conway polynomials for p = 2, bit i is the coefficient of x^i.
CONWAY_POLYNOMIALS = {
    1: 0b11,  # x + 1
    2: 0b111,  # x^2 + x + 1
    3: 0b1011,  # x^3 + x + 1
    4: 0b10011,  # x^4 + x + 1
    5: 0b100101,  # x^5 + x^2 + 1
    6: 0b1011011,  # x^6 + x^4 + x^3 + x + 1
    7: 0b10000011,  # x^7 + x + 1
    8: 0b100011101,  # x^8 + x^4 + x^3 + x^2 + 1
}

MAX_WIDTH = 8


def clmul(a: int, b: int) -> int:
    """Carry-less product of two GF(2) polynomials."""
    out = 0
    while b:
        if b & 1:
            out ^= a
        a <<= 1
        b >>= 1
    return out


def poly_mod(a: int, m: int) -> int:
    """Remainder of ``a`` divided by ``m`` over GF(2)."""
    dm = m.bit_length()
    while a and a.bit_length() >= dm:
        a ^= m << (a.bit_length() - dm)
    return a


def is_irreducible(poly: int) -> bool:
    """Trial division by every polynomial of degree 1..deg/2."""
    deg = poly.bit_length() - 1
    if deg < 1:
        return False
    for d in range(1, deg // 2 + 1):
        for cand in range(1 << d, 1 << (d + 1)):
            if poly_mod(poly, cand) == 0:
                return False
    return True


@dataclass(frozen=True)
class FieldSpec:
    width_bits: int
    reduction_poly: int = 0
    order: int = field(init=False)
    mul_table: np.ndarray = field(init=False, repr=False, compare=False)
    inv_table: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        w = self.width_bits
        if not 1 <= w <= MAX_WIDTH:
            raise ValueError(f"width_bits must be in 1..{MAX_WIDTH}, got {w}")
        poly = self.reduction_poly or CONWAY_POLYNOMIALS[w]
        if poly.bit_length() - 1 != w or not is_irreducible(poly):
            raise ValueError(f"{poly:#b} is not an irreducible polynomial of degree {w}")
        order = 1 << w
        mul = np.zeros((order, order), dtype=np.uint8)
        for a in range(order):
            for b in range(a, order):
                mul[a, b] = mul[b, a] = poly_mod(clmul(a, b), poly)
        inv = np.zeros(order, dtype=np.uint8)
        for a in range(1, order):
            inv[a] = int(np.flatnonzero(mul[a] == 1)[0])
        mul.setflags(write=False)
        inv.setflags(write=False)
        object.__setattr__(self, "reduction_poly", poly)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "mul_table", mul)
        object.__setattr__(self, "inv_table", inv)
        # python lists are faster than numpy scalars for single lookups
        object.__setattr__(self, "_mul", mul.tolist())
        object.__setattr__(self, "_inv", inv.tolist())

    def mul(self, a: int, b: int) -> int:
        return self._mul[a][b]

    def inv(self, a: int) -> int:
        if a == 0:
            raise InvalidInverse("0 has no multiplicative inverse")
        return self._inv[a]

    @staticmethod
    def add(a: int, b: int) -> int:
        return a ^ b

    def elements(self) -> range:
        return range(self.order)

    def __contains__(self, a) -> bool:
        return isinstance(a, (int, np.integer)) and 0 <= a < self.order


@lru_cache(maxsize=None)
def gf(width_bits: int) -> FieldSpec:
    """Shared field instance for a width, using the Conway polynomial."""
    return FieldSpec(width_bits)


def field_for_receivers(count: int) -> FieldSpec:
    """Smallest binary extension field with at least ``max(2, count)`` elements."""
    if count < 1:
        raise ValueError("count must be >= 1")
    w = max(1, (count - 1).bit_length())
    if w > MAX_WIDTH:
        raise ValueError(f"{count} receivers need a field wider than {MAX_WIDTH} bits")
    return gf(w)
