"""Sender side: mode selection and construction of each transmission.

The sender has perfect feedback, so it reads the receivers' buffers
directly. Receivers and modes are numbered from 1, as ``Rx_1..Rx_R``.
"""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .buffer import CancelKind, CodedPacket, ReceiverBuffer
from .errors import FieldExhausted, OrderingViolated, ValidationError
from .field import FieldSpec

SIMPLEX_TOL = 1e-12


@dataclass(frozen=True)
class ModeVector:
    """Long-run share of slots spent in each mode."""

    beta: tuple[float, ...]

    def __post_init__(self):
        beta = tuple(float(b) for b in self.beta)
        if not beta:
            raise ValidationError("mode vector is empty", "beta")
        if any(b < 0 or not math.isfinite(b) for b in beta):
            raise ValidationError("entries must be finite and nonnegative", "beta")
        total = math.fsum(beta)
        if abs(total - 1.0) > SIMPLEX_TOL:
            raise ValidationError(f"beta sums to {total:.12g}", "beta")
        object.__setattr__(self, "beta", beta)

    def __len__(self):
        return len(self.beta)

    def __getitem__(self, m):
        return self.beta[m]

    def cumulative(self) -> np.ndarray:
        return np.cumsum(self.beta)


def mode_from_uniform(cum_beta: Sequence[float], u: float) -> int:
    """Map a uniform draw in [0, 1) to a 1-based mode.

    Mode ``m`` owns ``[cum[m-1], cum[m])``, so zero-share modes are never
    picked; rounding in the last partial sum falls through to mode R.
    """
    R = len(cum_beta)
    m = 0
    while m < R - 1 and u >= cum_beta[m]:
        m += 1
    return m + 1


def select_mode(beta: ModeVector, rng: np.random.Generator) -> int:
    return mode_from_uniform(beta.cumulative(), rng.random())


Coding = tuple[int, ...]


def encode_full(
    buffers: Sequence[ReceiverBuffer], mode: int, field: FieldSpec
) -> tuple[CodedPacket, Coding]:
    """Build a mode-``mode`` transmission with the veto-list scheme.

    Receivers ``mode..R`` are grouped by next-needed packet and the groups
    visited from the newest packet down. A group's packet is added only when
    some member could otherwise cancel the whole transmission, with the
    smallest coefficient none of the members has vetoed.
    """
    R = len(buffers)
    if not 1 <= mode <= R:
        raise ValueError(f"mode {mode} outside 1..{R}")
    groups: dict[int, list[int]] = defaultdict(list)
    for i in range(mode - 1, R):
        groups[buffers[i].next_needed()].append(i)

    s: dict[int, int] = {}
    bits = [0] * R
    for j in sorted(groups, reverse=True):
        veto = set()
        for i in groups[j]:
            kind, alpha, index = buffers[i].can_cancel(s)
            if kind is CancelKind.ZERO:
                veto.add(0)
            elif kind is CancelKind.MULTIPLE and index == j:
                veto.add(alpha)
        if 0 not in veto:
            continue
        a = next((x for x in range(1, field.order) if x not in veto), None)
        if a is None:
            raise FieldExhausted(f"GF({field.order}) has no coefficient left for p{j}")
        s[j] = a
        for i in groups[j]:
            bits[i] = 1
    return CodedPacket(s), tuple(bits)


def check_ordering(buffers: Sequence[ReceiverBuffer], mode: int = 1) -> None:
    nn = [b.next_needed() for b in buffers[mode - 1 :]]
    if any(a <= b for a, b in zip(nn, nn[1:])):
        raise OrderingViolated(f"next needed packets {nn} are not strictly decreasing")


def encode_simplified(buffers: Sequence[ReceiverBuffer], mode: int) -> tuple[CodedPacket, Coding]:
    """XOR scheme valid when next-needed packets are distinct and ordered.

    Each receiver from the leader down gets its packet added exactly when it
    could cancel everything added so far.
    """
    check_ordering(buffers, mode)
    R = len(buffers)
    s: dict[int, int] = {}
    bits = [0] * R
    for i in range(mode - 1, R):
        if not buffers[i].reduce(s):
            s[buffers[i].next_needed()] = 1
            bits[i] = 1
    return CodedPacket(s), tuple(bits)


def is_knowledge_differential(coding: Coding, r: int) -> bool:
    """Whether receiver ``r``'s next-needed packet is coded in the transmission."""
    return bool(coding[r - 1])
