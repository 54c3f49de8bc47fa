import random

import pytest
from hypothesis import given, settings, strategies as st

from kdiff.buffer import CancelKind, CodedPacket, ReceiverBuffer
from kdiff.field import gf


def buffer_with(field, *packets):
    b = ReceiverBuffer(field)
    for p in packets:
        b.store(p if isinstance(p, CodedPacket) else CodedPacket.of(p))
    return b


def dense_rank(vectors, field, n):
    """Row rank by textbook Gaussian elimination on dense rows."""
    rows = [[v.get(i, 0) for i in range(1, n + 1)] for v in vectors]
    rank = 0
    for col in range(n):
        pivot = next((r for r in range(rank, len(rows)) if rows[r][col]), None)
        if pivot is None:
            continue
        rows[rank], rows[pivot] = rows[pivot], rows[rank]
        inv = field.inv(rows[rank][col])
        rows[rank] = [field.mul(inv, x) for x in rows[rank]]
        for r in range(len(rows)):
            if r != rank and rows[r][col]:
                c = rows[r][col]
                rows[r] = [x ^ field.mul(c, y) for x, y in zip(rows[r], rows[rank])]
        rank += 1
    return rank


def test_coded_packet_basics():
    s = CodedPacket({11: 1, 5: 1, 3: 0})
    assert s.coefficients == {11: 1, 5: 1}
    assert s.pivot == 11 and len(s) == 2
    assert repr(s) == "CodedPacket(p11 + p5)"
    assert CodedPacket({}).is_zero() and CodedPacket({}).pivot is None
    with pytest.raises(ValueError):
        CodedPacket({0: 1})


def test_fresh_buffer():
    b = ReceiverBuffer(gf(2))
    assert b.next_needed() == 1
    assert b.rank() == 0
    assert b.undecoded_fraction() == 0.0


def test_table_scenario_next_needed():
    f = gf(2)
    rx1 = buffer_with(f, *range(1, 11))
    rx2 = buffer_with(f, 1, 2, 3, 4, 6)
    rx3 = buffer_with(f, 1, 2, 7)
    assert [b.next_needed() for b in (rx1, rx2, rx3)] == [11, 5, 3]


def test_store_and_back_substitution_example():
    f = gf(2)
    rx3 = buffer_with(f, 1, 2, 7)
    out = rx3.store(CodedPacket.of(11, 5))
    assert out.position == 11 and out.delivered_delta == 0
    assert rx3.column(11) == CodedPacket.of(11, 5)
    out = rx3.store(CodedPacket.of(11, 7))
    assert out.position == 5
    assert rx3.column(5) == CodedPacket.of(5)
    assert rx3.column(11) == CodedPacket.of(11)
    assert rx3.next_needed() == 3
    rx3.check_invariants()


def test_duplicate_is_discarded():
    b = buffer_with(gf(2), 1, 7)
    b.store(CodedPacket.of(11, 5))
    out = b.store(CodedPacket.of(11, 5))
    assert out.discarded and out.delivered_delta == 0


def test_delivery_advances_over_contiguous_prefix():
    b = buffer_with(gf(2), 2, 3, 4)
    assert b.next_needed() == 1
    out = b.store(CodedPacket.of(1))
    assert out.delivered_delta == 4
    for n in range(5, 9):
        b.store(CodedPacket.of(n))
    assert b.next_needed() == 9


def test_can_cancel_classes():
    f = gf(2)
    b = buffer_with(f, 11)
    assert b.can_cancel(CodedPacket.of(11, 5)) == (CancelKind.MULTIPLE, 1, 5)
    assert ReceiverBuffer(f).can_cancel(CodedPacket.of(11, 5)).kind is CancelKind.OTHER
    assert b.can_cancel(CodedPacket.of(11)).kind is CancelKind.ZERO
    assert b.can_cancel(CodedPacket({11: 2, 4: 3})) == (CancelKind.MULTIPLE, 3, 4)


def test_undecoded_fraction_counts_coded_columns():
    b = buffer_with(gf(2), 7, 9, 12)
    b.store(CodedPacket.of(11, 5))
    assert b.undecoded_fraction() == pytest.approx(0.25)
    assert b.coded_count == 1
    assert b.count_filled(5, 12) == 4


def test_count_filled_includes_delivered_prefix():
    b = buffer_with(gf(2), 1, 2, 3, 6)
    assert b.count_filled(1, 6) == 4
    assert b.count_filled(2, 5) == 2
    assert b.count_filled(5, 4) == 0


@settings(max_examples=300, deadline=None)
@given(
    w=st.sampled_from([1, 2, 3]),
    n=st.integers(2, 32),
    seed=st.integers(0, 2**32 - 1),
    count=st.integers(1, 60),
)
def test_rank_matches_dense_oracle(w, n, seed, count):
    f = gf(w)
    rnd = random.Random(seed)
    b = ReceiverBuffer(f)
    accepted = []
    delivered = 0
    for _ in range(count):
        k = rnd.randint(1, min(4, n))
        s = CodedPacket({i: rnd.randrange(1, f.order) for i in rnd.sample(range(1, n + 1), k)})
        before = dense_rank(accepted, f, n)
        out = b.store(s)
        after = dense_rank(accepted + [s.coefficients], f, n)
        assert out.discarded == (after == before)
        if not out.discarded:
            accepted.append(s.coefficients)
        assert b.rank() == after
        assert b.delivered >= delivered
        delivered = b.delivered
        b.check_invariants()
    # every accepted combination lies in the span of the stored columns
    for v in accepted:
        assert not b.reduce(v)
    # a fully filled prefix is delivered
    filled = [n_ for n_ in range(1, n + 1) if b.is_seen(n_)]
    prefix = 0
    while prefix + 1 in filled:
        prefix += 1
    assert b.delivered == prefix


@settings(max_examples=100, deadline=None)
@given(seed=st.integers(0, 2**32 - 1))
def test_columns_are_reduced_echelon(seed):
    rnd = random.Random(seed)
    f = gf(2)
    b = ReceiverBuffer(f)
    for _ in range(40):
        idx = rnd.sample(range(1, 25), rnd.randint(1, 3))
        b.store(CodedPacket({i: rnd.randrange(1, 4) for i in idx}))
    for n, col in b.columns():
        assert col.pivot == n and col.coefficients[n] == 1
        for i in col.indices - {n}:
            assert not b.is_seen(i)
