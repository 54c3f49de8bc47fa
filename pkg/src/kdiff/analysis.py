"""Closed-form delivery-rate model.

Every leader-transmission count distribution here has the shape

    p(0) = head,    p(k) = first * ratio**(k-1)  for k >= 1,

so the infinite sums the model needs (totals and ``E[x**k]``) are evaluated
exactly rather than by truncation.

Indexing: receivers and modes are numbered 1..R in function arguments. The
tables in :class:`AnalysisReport` are numpy arrays indexed ``[r-1, m-1]``;
``D[a-1, b-1]`` is the probability that ``Rx_a`` has seen ``Rx_b``'s next
needed packet and ``K[r-1, m-1]`` the probability that a mode-``m``
transmission codes ``Rx_r``'s next needed packet.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DegenerateRates, ModelBreakdown, ModeUnreachable, ValidationError

STABILITY_TOL = 1e-12


@dataclass(frozen=True)
class GeometricTail:
    head: float
    first: float
    ratio: float

    def __post_init__(self):
        if not 0.0 <= self.ratio < 1.0:
            raise ValueError(f"ratio {self.ratio} outside [0, 1)")

    def pmf(self, k: int) -> float:
        if k < 0:
            return 0.0
        if k == 0:
            return self.head
        return self.first * self.ratio ** (k - 1)

    def total(self) -> float:
        return self.head + self.first / (1.0 - self.ratio)

    def moment_gen(self, x: float) -> float:
        """``sum_k p(k) x**k`` for ``0 <= x <= 1``."""
        return self.head + self.first * x / (1.0 - self.ratio * x)

    def array(self, kmax: int) -> np.ndarray:
        return np.array([self.pmf(k) for k in range(kmax + 1)])


POINT_MASS_AT_ZERO = GeometricTail(1.0, 0.0, 0.0)


@dataclass(frozen=True)
class LeaderDist:
    """Leader-transmission statistics of one mode."""

    gamma: float
    lstar: GeometricTail
    t_dist: GeometricTail | None  # None for a mode that never acts
    u: float
    l_dist: GeometricTail


def _check_rates(mu: float, beta_l: float, gamma: float) -> float:
    denom = beta_l + mu * gamma
    if not denom > 0:
        raise ModeUnreachable("mode never transmits and its leader gets no knowledge differentials")
    return denom


def compute_gamma(l: int, beta: Sequence[float], K: np.ndarray) -> float:
    """Chance per slot of a mode ``1..l-1`` knowledge differential for ``Rx_l``."""
    return math.fsum(beta[m] * K[l - 1, m] for m in range(l - 1))


def compute_lstar(mu: float, beta_l: float, gamma: float) -> GeometricTail:
    denom = _check_rates(mu, beta_l, gamma)
    ratio = (1.0 - mu) * beta_l / denom
    c = mu * (beta_l + gamma) / denom
    return GeometricTail(c, c * ratio, ratio)


def compute_t(mu: float, beta_l: float, gamma: float) -> GeometricTail:
    denom = _check_rates(mu, beta_l, gamma)
    ratio = (1.0 - mu) * beta_l / denom
    return GeometricTail(mu * gamma / denom, mu * beta_l * (beta_l + gamma) / denom**2, ratio)


def compute_u(l: int, prior: Sequence[GeometricTail], mu_l: float) -> float:
    """Chance a packet stays unseen by ``Rx_l`` through modes ``1..l-1``."""
    out = 1.0
    for dist in prior[: l - 1]:
        out *= dist.moment_gen(1.0 - mu_l)
    return out


def compute_l(u: float, t_dist: GeometricTail) -> GeometricTail:
    return GeometricTail(1.0 - u + u * t_dist.head, u * t_dist.first, t_dist.ratio)


def compute_d(a: int, b: int, lstar_b: GeometricTail, l_dists: Sequence[GeometricTail], mu_a: float) -> float:
    if a <= b:
        return 1.0
    unseen = lstar_b.moment_gen(1.0 - mu_a)
    for dist in l_dists[: b - 1]:
        unseen *= dist.moment_gen(1.0 - mu_a)
    return 1.0 - unseen


def extend_codings(level: dict[tuple, float], r: int, D: np.ndarray) -> dict[tuple, float]:
    """Grow every subcoding of length ``r-1`` by receiver ``r``'s bit."""
    out = {}
    for prefix, p in level.items():
        q = 1.0
        for b, bit in enumerate(prefix):
            if bit:
                q *= D[r - 1, b]
        out[prefix + (1,)] = p * q
        out[prefix + (0,)] = p * (1.0 - q)
    return out


def compute_coding_probs(m: int, D: np.ndarray, r_max: int) -> dict[tuple, float]:
    """Probability of every mode-``m`` subcoding of length ``m..r_max``.

    Keys are 0/1 tuples whose first ``m`` entries are ``0, .., 0, 1``.
    """
    level = {(0,) * (m - 1) + (1,): 1.0}
    out = dict(level)
    for r in range(m + 1, r_max + 1):
        level = extend_codings(level, r, D)
        out.update(level)
    return out


def compute_k(r: int, m: int, coding_probs: dict[tuple, float]) -> float:
    if r < m:
        return 0.0
    return math.fsum(p for c, p in coding_probs.items() if len(c) == r and c[r - 1])


def compute_b(r: int, beta: Sequence[float], K: np.ndarray, rates: Sequence[float], mu_r: float) -> float:
    total = 0.0
    for m in range(1, r):
        if beta[m - 1] == 0:
            continue
        if rates[m - 1] <= 0:
            raise DegenerateRates(f"R_{m} = 0 while beta_{m} > 0")
        total += beta[m - 1] * (1.0 - K[r - 1, m - 1]) / rates[m - 1]
    return mu_r * total


def compute_r(r: int, beta: Sequence[float], K: np.ndarray, b_r: float, mu_r: float) -> float:
    if b_r >= 1.0:
        raise ModelBreakdown(f"buffer density B_{r} = {b_r:.6g} >= 1")
    return mu_r * math.fsum(beta[m] * K[r - 1, m] for m in range(r)) / (1.0 - b_r)


@dataclass
class AnalysisReport:
    mu: tuple[float, ...]
    beta: tuple[float, ...]
    D: np.ndarray
    K: np.ndarray
    B: np.ndarray
    R: np.ndarray
    leader: list[LeaderDist] = field(default_factory=list)

    @property
    def Q(self) -> np.ndarray:
        return self.R / np.asarray(self.mu)

    def to_dict(self, kmax: int = 10) -> dict:
        return {
            "mu": list(self.mu),
            "beta": list(self.beta),
            "D": self.D.tolist(),
            "K": self.K.tolist(),
            "B": self.B.tolist(),
            "R": self.R.tolist(),
            "Q": self.Q.tolist(),
            "leader": [
                {
                    "gamma": ld.gamma,
                    "U": ld.u,
                    "L": ld.l_dist.array(kmax).tolist(),
                    "Lstar": ld.lstar.array(kmax).tolist(),
                }
                for ld in self.leader
            ],
        }


def validate_inputs(mu: Sequence[float], beta: Sequence[float], strict: bool = True) -> None:
    if len(mu) != len(beta):
        raise ValidationError(f"mu has {len(mu)} entries but beta has {len(beta)}", "beta")
    if not mu:
        raise ValidationError("at least one receiver is required", "mu")
    if any(not 0 < x <= 1 for x in mu):
        raise ValidationError("channel rates must lie in (0, 1]", "mu")
    if any(b < 0 for b in beta):
        raise ValidationError("entries must be nonnegative", "beta")
    if strict and abs(math.fsum(beta) - 1.0) > 1e-12:
        raise ValidationError(f"beta sums to {math.fsum(beta):.12g}", "beta")


def run_rate_calc(mu: Sequence[float], beta: Sequence[float], *, strict: bool = True) -> AnalysisReport:
    """Evaluate the whole model receiver by receiver, fastest first.

    ``strict=False`` accepts a mode vector that does not sum to one, which
    is how the rate-scaling behaviour is exercised.
    """
    mu = tuple(float(x) for x in mu)
    beta = tuple(float(x) for x in beta)
    validate_inputs(mu, beta, strict)
    n = len(mu)

    D = np.ones((n, n))
    K = np.zeros((n, n))
    B = np.zeros(n)
    rates = np.zeros(n)
    leader: list[LeaderDist] = []
    levels: list[dict[tuple, float]] = []  # current subcoding level per mode

    for m in range(1, n + 1):
        # Rx_m's knowledge differentials in earlier modes only need D_m^b, b < m.
        for mode in range(1, m):
            levels[mode - 1] = extend_codings(levels[mode - 1], m, D)
            K[m - 1, mode - 1] = compute_k(m, mode, levels[mode - 1])
        levels.append({(0,) * (m - 1) + (1,): 1.0})
        K[m - 1, m - 1] = 1.0

        gamma = compute_gamma(m, beta, K)
        if beta[m - 1] + mu[m - 1] * gamma > 0:
            lstar = compute_lstar(mu[m - 1], beta[m - 1], gamma)
            t_dist = compute_t(mu[m - 1], beta[m - 1], gamma)
            u = compute_u(m, [ld.l_dist for ld in leader], mu[m - 1])
            l_dist = compute_l(u, t_dist)
        else:
            # idle mode whose leader is never helped: no leader transmissions at all
            lstar, t_dist, l_dist = POINT_MASS_AT_ZERO, None, POINT_MASS_AT_ZERO
            u = compute_u(m, [ld.l_dist for ld in leader], mu[m - 1])
        leader.append(LeaderDist(gamma, lstar, t_dist, u, l_dist))

        prior = [ld.l_dist for ld in leader]
        for a in range(m + 1, n + 1):
            D[a - 1, m - 1] = compute_d(a, m, lstar, prior, mu[a - 1])

        B[m - 1] = compute_b(m, beta, K, rates, mu[m - 1])
        rates[m - 1] = compute_r(m, beta, K, B[m - 1], mu[m - 1])

    return AnalysisReport(mu, beta, D, K, B, rates, leader)


def compare_correlation_models(mu: Sequence[float], a: int, b: int) -> tuple[float, float, float]:
    """Knowledge-difference probability of ``Rx_a`` over ``Rx_b`` under two models.

    Returns ``(correlated, independent, independent / correlated - 1)`` for a
    mode-1-only sender, where the correlated figure conditions on ``Rx_b``
    missing the packet.
    """
    if not 1 < b < a <= len(mu):
        raise ValueError(f"need 1 < b < a <= {len(mu)}, got a={a}, b={b}")
    m1, ma, mb = 1.0 - mu[0], 1.0 - mu[a - 1], 1.0 - mu[b - 1]
    dependent = mu[a - 1] / (1.0 - m1 * mb * ma)
    independent = mu[a - 1] / (1.0 - m1 * ma)
    return dependent, independent, independent / dependent - 1.0


def max_correlation_gap(mu: Sequence[float]) -> tuple[int, int, float]:
    """Receiver pair ``(a, b)`` with the largest relative gap, and that gap."""
    best = None
    for a in range(3, len(mu) + 1):
        for b in range(2, a):
            gap = compare_correlation_models(mu, a, b)[2]
            if best is None or gap > best[2]:
                best = (a, b, gap)
    if best is None:
        raise ValueError("need at least three receivers")
    return best
