import itertools

import pytest

from kdiff.errors import InvalidInverse
from kdiff.field import CONWAY_POLYNOMIALS, FieldSpec, clmul, field_for_receivers, gf, is_irreducible, poly_mod


def brute_mul(a, b, poly):
    # schoolbook product then long division, written independently of the tables
    prod = 0
    for i in range(8):
        if (b >> i) & 1:
            prod ^= a << i
    deg = poly.bit_length() - 1
    for shift in range(prod.bit_length() - 1 - deg, -1, -1):
        if (prod >> (shift + deg)) & 1:
            prod ^= poly << shift
    return prod


@pytest.mark.parametrize("w", range(1, 9))
def test_tables_match_schoolbook_product(w):
    f = gf(w)
    poly = CONWAY_POLYNOMIALS[w]
    for a in f.elements():
        for b in f.elements():
            assert f.mul(a, b) == brute_mul(a, b, poly)


@pytest.mark.parametrize("w", range(1, 5))
def test_field_axioms_exhaustive(w):
    f = gf(w)
    E = list(f.elements())
    for a, b in itertools.product(E, E):
        assert f.mul(a, b) == f.mul(b, a)
        assert f.add(a, b) == a ^ b
    for a, b, c in itertools.product(E, E, E):
        assert f.mul(f.mul(a, b), c) == f.mul(a, f.mul(b, c))
        assert f.mul(a, f.add(b, c)) == f.add(f.mul(a, b), f.mul(a, c))
    for a in E:
        assert f.mul(a, 1) == a
        assert f.mul(a, 0) == 0
        assert f.add(a, a) == 0


@pytest.mark.parametrize("w", range(1, 9))
def test_inverse_exhaustive(w):
    f = gf(w)
    for a in range(1, f.order):
        assert f.mul(a, f.inv(a)) == 1


def test_known_small_values():
    f4 = gf(2)
    assert f4.reduction_poly == 0b111
    assert f4.mul(2, 2) == 3
    assert f4.inv(2) == 3
    assert gf(1).mul(1, 1) == 1
    assert gf(3).inv(1) == 1


def test_zero_has_no_inverse():
    with pytest.raises(InvalidInverse):
        gf(3).inv(0)
    with pytest.raises(ZeroDivisionError):
        gf(1).inv(0)


@pytest.mark.parametrize("count,order", [(1, 2), (2, 2), (3, 4), (4, 4), (5, 8), (8, 8), (9, 16), (256, 256)])
def test_field_for_receivers(count, order):
    assert field_for_receivers(count).order == order


def test_field_for_receivers_rejects_bad_counts():
    with pytest.raises(ValueError):
        field_for_receivers(0)
    with pytest.raises(ValueError):
        field_for_receivers(257)


def test_reduction_polynomials_irreducible():
    for w, poly in CONWAY_POLYNOMIALS.items():
        assert poly.bit_length() - 1 == w
        assert is_irreducible(poly)
    assert not is_irreducible(0b101)  # (x + 1)^2
    assert not is_irreducible(0b10001)  # (x + 1)^4


def test_reducible_polynomial_rejected():
    with pytest.raises(ValueError):
        FieldSpec(2, 0b101)
    with pytest.raises(ValueError):
        FieldSpec(9)


def test_alternative_irreducible_polynomial():
    f = FieldSpec(3, 0b1101)  # x^3 + x^2 + 1
    for a in range(1, 8):
        assert f.mul(a, f.inv(a)) == 1


def test_helpers():
    assert clmul(0b11, 0b11) == 0b101
    assert poly_mod(0b101, 0b11) == 0
    assert 3 in gf(2) and 4 not in gf(2)


def test_tables_are_read_only():
    f = gf(2)
    with pytest.raises(ValueError):
        f.mul_table[0, 0] = 1
