"""Receiver-side storage of coded transmissions.

A buffer keeps one column per *seen* packet index: the column at position
``n`` holds a stored combination whose highest coded packet is ``p_n``, with
its coefficient on ``p_n`` normalised to 1. Columns are kept in reduced
column-echelon form, so every non-pivot term of a column sits at an
*unfilled* position. Two consequences the rest of the package leans on:

* eliminating a combination against the buffer is one pass over its terms;
* positions ``1..delivered`` are exactly the leading run of filled
  positions, and each of them holds a decoded (singleton) packet.

The delivered prefix is never stored explicitly; only the undelivered region
is materialised.
"""

from __future__ import annotations

import enum
from collections import defaultdict
from dataclasses import dataclass
from typing import Iterator, Mapping, NamedTuple

from .field import FieldSpec


@dataclass(frozen=True)
class CodedPacket:
    """A linear combination ``sum a_i p_i`` with no zero coefficients."""

    coefficients: Mapping[int, int]

    def __post_init__(self):
        clean = {int(i): int(a) for i, a in dict(self.coefficients).items() if a}
        if any(i < 1 for i in clean):
            raise ValueError("packet indices start at 1")
        object.__setattr__(self, "coefficients", clean)

    @classmethod
    def of(cls, *indices: int) -> "CodedPacket":
        """Sum of the given packets with unit coefficients."""
        return cls({i: 1 for i in indices})

    @property
    def pivot(self) -> int | None:
        return max(self.coefficients) if self.coefficients else None

    @property
    def indices(self) -> frozenset[int]:
        return frozenset(self.coefficients)

    def is_zero(self) -> bool:
        return not self.coefficients

    def __len__(self):
        return len(self.coefficients)

    def __repr__(self):
        if not self.coefficients:
            return "CodedPacket(0)"
        terms = " + ".join(
            f"p{i}" if a == 1 else f"{a}*p{i}" for i, a in sorted(self.coefficients.items(), reverse=True)
        )
        return f"CodedPacket({terms})"


class CancelKind(enum.Enum):
    ZERO = "zero"
    MULTIPLE = "multiple"
    OTHER = "other"


class Cancel(NamedTuple):
    """Class of the elimination residual of a combination against a buffer."""

    kind: CancelKind
    alpha: int = 0
    index: int = 0


class StoreOutcome(NamedTuple):
    position: int | None  # None when the transmission was not innovative
    delivered_delta: int

    @property
    def discarded(self) -> bool:
        return self.position is None


class ReceiverBuffer:
    def __init__(self, field: FieldSpec):
        self.field = field
        self.delivered = 0
        # undelivered filled positions
        self._filled: set[int] = set()
        # pivot -> {index: coefficient} for the non-pivot terms of coded columns
        self._coded: dict[int, dict[int, int]] = {}
        # unfilled position -> pivots of coded columns with a term there
        self._refs: defaultdict[int, set[int]] = defaultdict(set)

    # ---- queries -------------------------------------------------------

    def next_needed(self) -> int:
        return self.delivered + 1

    def is_seen(self, n: int) -> bool:
        return n <= self.delivered or n in self._filled

    def rank(self) -> int:
        return self.delivered + len(self._filled)

    @property
    def seen_undelivered(self) -> frozenset[int]:
        return frozenset(self._filled)

    @property
    def coded_count(self) -> int:
        return len(self._coded)

    def column(self, n: int) -> CodedPacket | None:
        """The combination stored at position ``n``, or None if unfilled."""
        if not self.is_seen(n):
            return None
        terms = dict(self._coded.get(n, ()))
        terms[n] = 1
        return CodedPacket(terms)

    def columns(self) -> Iterator[tuple[int, CodedPacket]]:
        """All filled positions in increasing order with their columns."""
        for n in range(1, self.delivered + 1):
            yield n, CodedPacket({n: 1})
        for n in sorted(self._filled):
            yield n, self.column(n)

    def count_filled(self, lo: int, hi: int) -> int:
        """Number of filled positions in ``lo..hi`` inclusive."""
        if hi < lo:
            return 0
        below = max(0, min(hi, self.delivered) - lo + 1)
        return below + sum(1 for n in self._filled if lo <= n <= hi and n > self.delivered)

    def undecoded_fraction(self, include_delivered: bool = False) -> float:
        """Share of filled positions holding a combination of two or more packets.

        By default the share is taken over the undelivered region only, the
        part of the buffer where coded columns can live.
        """
        total = len(self._filled) + (self.delivered if include_delivered else 0)
        return len(self._coded) / total if total else 0.0

    # ---- elimination ---------------------------------------------------

    def reduce(self, coefficients: Mapping[int, int]) -> dict[int, int]:
        """Residual of a combination after elimination against the buffer."""
        mul = self.field._mul
        out: dict[int, int] = {}
        for j, a in coefficients.items():
            if j <= self.delivered:
                continue
            if j in self._filled:
                col = self._coded.get(j)
                if col:
                    row = mul[a]
                    for i, c in col.items():
                        v = out.get(i, 0) ^ row[c]
                        if v:
                            out[i] = v
                        else:
                            del out[i]
                continue
            v = out.get(j, 0) ^ a
            if v:
                out[j] = v
            else:
                del out[j]
        return out

    def can_cancel(self, s: CodedPacket | Mapping[int, int]) -> Cancel:
        coeffs = s.coefficients if isinstance(s, CodedPacket) else s
        res = self.reduce(coeffs)
        if not res:
            return Cancel(CancelKind.ZERO)
        if len(res) == 1:
            (j, a), = res.items()
            return Cancel(CancelKind.MULTIPLE, a, j)
        return Cancel(CancelKind.OTHER)

    def is_innovative(self, s: CodedPacket | Mapping[int, int]) -> bool:
        coeffs = s.coefficients if isinstance(s, CodedPacket) else s
        return bool(self.reduce(coeffs))

    def store(self, s: CodedPacket | Mapping[int, int]) -> StoreOutcome:
        coeffs = s.coefficients if isinstance(s, CodedPacket) else s
        res = self.reduce(coeffs)
        if not res:
            return StoreOutcome(None, 0)
        mul = self.field._mul
        n = max(res)
        scale = mul[self.field.inv(res.pop(n))]
        others = {i: scale[c] for i, c in res.items()}

        self._filled.add(n)
        if others:
            self._coded[n] = others
            for i in others:
                self._refs[i].add(n)

        # clear the new pivot out of every column that mentions it
        for q in self._refs.pop(n, ()):
            col = self._coded[q]
            row = mul[col.pop(n)]
            for i, v in others.items():
                x = col.get(i, 0) ^ row[v]
                if x:
                    if i not in col:
                        self._refs[i].add(q)
                    col[i] = x
                else:
                    del col[i]
                    self._refs[i].discard(q)
            if not col:
                del self._coded[q]

        before = self.delivered
        while self.delivered + 1 in self._filled:
            self.delivered += 1
            self._filled.remove(self.delivered)
            if self.delivered in self._coded:
                raise AssertionError(f"delivered position {self.delivered} still holds a coded column")
        return StoreOutcome(n, self.delivered - before)

    # ---- verification --------------------------------------------------

    def check_column(self, n: int) -> None:
        """Raise AssertionError unless column ``n`` is in reduced echelon form."""
        for i in self._coded.get(n, ()):
            if i >= n:
                raise AssertionError(f"column {n} has term p{i} above its pivot")
            if self.is_seen(i):
                raise AssertionError(f"column {n} has term p{i} at a filled position")
            if n not in self._refs.get(i, ()):
                raise AssertionError(f"reverse index misses column {n} at p{i}")

    def check_invariants(self, full: bool = True) -> None:
        """Check the echelon structure; ``full=False`` skips the O(filled) scan."""
        if self.is_seen(self.delivered + 1):
            raise AssertionError("next needed packet is already seen")
        if full and any(n <= self.delivered for n in self._filled):
            raise AssertionError("delivered position tracked as undelivered")
        if any(n not in self._filled for n in self._coded):
            raise AssertionError("coded column at an unfilled position")
        for n in self._coded:
            if not self._coded[n]:
                raise AssertionError(f"empty coded column {n}")
            self.check_column(n)
