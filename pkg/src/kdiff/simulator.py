"""Slotted broadcast over independent Bernoulli erasure channels.

Each slot the sender draws a mode, builds a transmission from the receivers'
buffers, and every receiver independently gets it with probability ``mu_i``.
Two engines share one random stream and produce identical traces:

``fast``       compiled kernel (:mod:`kdiff._kernel`), used for long runs;
``reference``  the :class:`~kdiff.buffer.ReceiverBuffer` objects and
               :func:`~kdiff.coder.encode_full`, optionally checking buffer
               and innovativeness invariants every slot.

Randomness: slot ``t`` consumes row ``t`` of ``rng.random((T, R + 1))``;
column 0 picks the mode, column ``i`` decides reception at ``Rx_i``.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Sequence

import numpy as np

from .buffer import ReceiverBuffer
from .coder import ModeVector, encode_full, mode_from_uniform
from .errors import SimulationError, ValidationError
from .field import field_for_receivers

log = logging.getLogger(__name__)

KMAX = 64  # leader counts at or above this share the last histogram bin
ENGINES = ("fast", "reference")


@dataclass(frozen=True)
class SimConfig:
    mu: tuple[float, ...]
    beta: tuple[float, ...]
    slots: int = 1_000_000
    seed: int = 42
    warmup_fraction: float = 0.1
    trials: int = 8
    compaction: bool = False  # no effect: delivered prefixes are never materialised
    sample_every: int = 100
    engine: str = "fast"
    check_invariants: bool = False

    def __post_init__(self):
        mu = tuple(float(x) for x in self.mu)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "beta", ModeVector(self.beta).beta)
        if not mu:
            raise ValidationError("at least one receiver is required", "mu")
        if any(not 0 < x <= 1 for x in mu):
            raise ValidationError("channel rates must lie in (0, 1]", "mu")
        if any(a <= b for a, b in zip(mu, mu[1:])):
            raise ValidationError("mu must be strictly decreasing", "mu")
        if len(self.beta) != len(mu):
            raise ValidationError(f"mu has {len(mu)} entries but beta has {len(self.beta)}", "beta")
        if self.slots < 1:
            raise ValidationError("must be positive", "slots")
        if self.trials < 1:
            raise ValidationError("must be positive", "trials")
        if not 0 <= self.warmup_fraction < 1:
            raise ValidationError("must lie in [0, 1)", "warmup_fraction")
        if self.sample_every < 1:
            raise ValidationError("must be positive", "sample_every")
        if self.engine not in ENGINES:
            raise ValidationError(f"unknown engine {self.engine!r}", "engine")

    @property
    def receivers(self) -> int:
        return len(self.mu)

    @property
    def warmup_slots(self) -> int:
        return int(self.warmup_fraction * self.slots)


@dataclass
class Trace:
    """Raw counters from one or more trials; sums of traces are traces."""

    delivered: np.ndarray  # packets delivered during the measured slots
    measured_slots: int  # summed over trials
    mode_counts: np.ndarray  # [m]
    kdiff_counts: np.ndarray  # [r, m]: mode-m slots coding Rx_r's packet
    leader_hist: np.ndarray  # [l, k]: packets delivered by Rx_l after k mode-l leader txs
    lstar_hist: np.ndarray  # [l, k]: slots where Rx_l's next packet had k mode-l leader txs
    density_sum: np.ndarray  # [r]
    density_n: np.ndarray  # [r]
    undecoded_sum: np.ndarray  # [r], share of coded columns in the undelivered region
    undecoded_all_sum: np.ndarray  # [r], same share over all filled positions
    undecoded_n: int
    noninnovative: int = 0
    trial_rates: list = field(default_factory=list)

    def __add__(self, other: "Trace") -> "Trace":
        out = {}
        for f in fields(self):
            a, b = getattr(self, f.name), getattr(other, f.name)
            out[f.name] = a + b
        return Trace(**out)


@dataclass
class SimStats:
    delivery_rate: np.ndarray
    delivery_rate_stderr: np.ndarray
    kdiff_rate: np.ndarray  # [r, m], NaN where no mode-m slot was observed
    leader_tx_hist: np.ndarray  # [l, k]
    lstar_hist: np.ndarray  # [l, k]
    buffer_density: np.ndarray  # [r], NaN without samples
    undecoded_pct: np.ndarray
    mode_counts: np.ndarray
    measured_slots: int  # summed over trials
    trials: int
    noninnovative: int = 0

    def to_dict(self) -> dict:
        return {
            "delivery_rate": _jsonable(self.delivery_rate),
            "delivery_rate_stderr": _jsonable(self.delivery_rate_stderr),
            "kdiff_rate": _jsonable(self.kdiff_rate),
            "leader_tx_hist": _jsonable(_trim_hist(self.leader_tx_hist)),
            "lstar_hist": _jsonable(_trim_hist(self.lstar_hist)),
            "buffer_density": _jsonable(self.buffer_density),
            "undecoded_pct": _jsonable(self.undecoded_pct),
            "mode_counts": self.mode_counts.tolist(),
            "measured_slots": self.measured_slots,
            "trials": self.trials,
            "noninnovative": self.noninnovative,
        }


def _jsonable(a: np.ndarray):
    """Nested lists with NaN mapped to None."""
    a = np.asarray(a, dtype=float)
    if a.ndim == 0:
        return None if math.isnan(a) else float(a)
    return [_jsonable(x) for x in a]


def _trim_hist(h: np.ndarray) -> np.ndarray:
    nz = np.flatnonzero(h.any(axis=0))
    return h[:, : (nz[-1] + 1 if nz.size else 1)]


def draw_uniforms(seed_seq: np.random.SeedSequence, slots: int, receivers: int) -> np.ndarray:
    return np.random.default_rng(seed_seq).random((slots, receivers + 1))


def trial_seeds(seed: int, trials: int) -> list[np.random.SeedSequence]:
    return np.random.SeedSequence(seed).spawn(trials)


# ---- reference engine ---------------------------------------------------


def run_trial_reference(config: SimConfig, uniforms: np.ndarray) -> Trace:
    mu = config.mu
    R = len(mu)
    gf = field_for_receivers(R)
    cum = ModeVector(config.beta).cumulative()
    T, warm, every = uniforms.shape[0], config.warmup_slots, config.sample_every
    buffers = [ReceiverBuffer(gf) for _ in range(R)]
    counts = [dict() for _ in range(R)]  # mode l -> {packet: leader txs}

    mode_counts = np.zeros(R, np.int64)
    kdiff = np.zeros((R, R), np.int64)
    lhist = np.zeros((R, KMAX + 1), np.int64)
    shist = np.zeros((R, KMAX + 1), np.int64)
    dsum, dn = np.zeros(R), np.zeros(R, np.int64)
    usum, uall, un = np.zeros(R), np.zeros(R), 0
    start = np.zeros(R, np.int64)
    noninnovative = 0

    for t in range(T):
        measuring = t >= warm
        if t == warm:
            start[:] = [b.delivered for b in buffers]
        if measuring:
            for l in range(R):
                shist[l, min(counts[l].get(buffers[l].delivered + 1, 0), KMAX)] += 1

        m = mode_from_uniform(cum, uniforms[t, 0])
        s, bits = encode_full(buffers, m, gf)
        pivot = s.pivot
        counts[m - 1][pivot] = counts[m - 1].get(pivot, 0) + 1
        if config.check_invariants:
            for i in range(m - 1, R):
                if not buffers[i].is_innovative(s):
                    noninnovative += 1
        if measuring:
            mode_counts[m - 1] += 1
            kdiff[:, m - 1] += bits

        for i in range(R):
            if uniforms[t, i + 1] < mu[i]:
                before = buffers[i].delivered
                outcome = buffers[i].store(s)
                if config.check_invariants and not outcome.discarded:
                    buffers[i].check_column(outcome.position)
                if measuring:
                    for p in range(before + 1, buffers[i].delivered + 1):
                        lhist[i, min(counts[i].get(p, 0), KMAX)] += 1

        if measuring and t % every == 0:
            for r in range(1, R):
                lo, hi = buffers[r].delivered + 2, buffers[r - 1].delivered
                if hi >= lo:
                    dsum[r] += buffers[r].count_filled(lo, hi) / (hi - lo + 1)
                    dn[r] += 1
            for r in range(R):
                usum[r] += buffers[r].undecoded_fraction()
                uall[r] += buffers[r].undecoded_fraction(include_delivered=True)
            un += 1
        if config.check_invariants:
            full = t % 1000 == 0 or t == T - 1
            for b in buffers:
                b.check_invariants(full)

    measured = T - warm
    delivered = np.array([b.delivered for b in buffers], np.int64) - start
    return Trace(
        delivered, measured, mode_counts, kdiff, lhist, shist, dsum, dn, usum, uall, un,
        noninnovative, [delivered / measured],
    )


# ---- fast engine --------------------------------------------------------


def run_trial_fast(config: SimConfig, uniforms: np.ndarray) -> Trace:
    from . import _kernel

    R = config.receivers
    gf = field_for_receivers(R)
    out = _kernel.run_trial(
        np.asarray(config.mu, np.float64),
        ModeVector(config.beta).cumulative(),
        gf.mul_table,
        gf.inv_table,
        uniforms,
        config.warmup_slots,
        config.sample_every,
        KMAX,
        config.check_invariants,
    )
    status, delivered, mode_counts, kdiff, lhist, shist, dsum, dn, usum, uall, un, nonin = out
    if status != 0:
        raise SimulationError(f"simulation kernel failed: {_kernel.STATUS[status]}")
    measured = uniforms.shape[0] - config.warmup_slots
    return Trace(
        delivered, measured, mode_counts, kdiff, lhist, shist, dsum, dn, usum, uall, int(un),
        int(nonin), [delivered / measured],
    )


def _run_one(args) -> Trace:
    config, seed_seq = args
    uniforms = draw_uniforms(seed_seq, config.slots, config.receivers)
    if config.engine == "reference":
        return run_trial_reference(config, uniforms)
    return run_trial_fast(config, uniforms)


def worker_count(trials: int) -> int:
    cap = os.environ.get("KDIFF_THREADS")
    n = int(cap) if cap else (os.cpu_count() or 1)
    return max(1, min(trials, n))


def run_traces(config: SimConfig) -> list[Trace]:
    jobs = [(config, s) for s in trial_seeds(config.seed, config.trials)]
    workers = worker_count(config.trials)
    if workers == 1:
        return [_run_one(j) for j in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(_run_one, jobs))


def run(config: SimConfig) -> SimStats:
    traces = run_traces(config)
    total = traces[0]
    for tr in traces[1:]:
        total = total + tr
    return summarize(total, len(traces))


# ---- measurements -------------------------------------------------------


def measure_kdiff(trace: Trace) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        k = trace.kdiff_counts / trace.mode_counts[None, :]
    k[:, trace.mode_counts == 0] = np.nan
    return k


def measure_buffer_density(trace: Trace) -> np.ndarray:
    with np.errstate(invalid="ignore", divide="ignore"):
        b = trace.density_sum / trace.density_n
    b[trace.density_n == 0] = np.nan
    b[0] = 0.0
    return b


def _normalise(h: np.ndarray) -> np.ndarray:
    tot = h.sum(axis=1, keepdims=True)
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(tot > 0, h / np.where(tot > 0, tot, 1), np.nan)


def summarize(trace: Trace, trials: int) -> SimStats:
    rates = np.array(trace.trial_rates)
    stderr = rates.std(axis=0, ddof=1) / np.sqrt(len(rates)) if len(rates) > 1 else np.full(rates.shape[1], np.nan)
    undecoded = 100.0 * trace.undecoded_sum / trace.undecoded_n if trace.undecoded_n else np.full(len(rates[0]), np.nan)
    return SimStats(
        delivery_rate=trace.delivered / trace.measured_slots,
        delivery_rate_stderr=stderr,
        kdiff_rate=measure_kdiff(trace),
        leader_tx_hist=_normalise(trace.leader_hist),
        lstar_hist=_normalise(trace.lstar_hist),
        buffer_density=measure_buffer_density(trace),
        undecoded_pct=undecoded,
        mode_counts=trace.mode_counts,
        measured_slots=trace.measured_slots,
        trials=trials,
        noninnovative=trace.noninnovative,
    )


def simulate(mu: Sequence[float], beta: Sequence[float], **kwargs) -> SimStats:
    return run(SimConfig(tuple(mu), tuple(beta), **kwargs))
