"""Mode vector that equalises the receivers' delivery ratios.

The mode vector is built up one receiver at a time. Step ``r`` shrinks the
time given to modes ``1..r-1`` by ``1 - omega`` and hands ``omega`` to mode
``r``. The shrink scales the faster receivers' ratios without changing their
buffer densities, so only ``Rx_r`` has to be solved for.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from .analysis import run_rate_calc
from .coder import ModeVector
from .errors import InfeasibleEqualization, KdiffError, ValidationError

log = logging.getLogger(__name__)

OMEGA_MAX = 1.0 - 1e-9


@dataclass(frozen=True)
class FairnessStep:
    r: int
    beta: tuple[float, ...]
    omega: float
    q: tuple[float, ...]  # Q_1[r]..Q_r[r] from the update rule
    clamped: bool = False


@dataclass
class FairnessTrace:
    steps: list[FairnessStep] = field(default_factory=list)

    def to_dict(self) -> list[dict]:
        return [
            {"r": s.r, "beta": list(s.beta), "omega": s.omega, "q": list(s.q), "clamped": s.clamped}
            for s in self.steps
        ]


def compute_omega(q_prev_pair: tuple[float, float], b_r: float, weight_ratio: float = 1.0) -> float:
    """Share of time mode ``r`` needs so ``Q_r`` catches up with ``Q_{r-1}``.

    ``q_prev_pair`` is ``(Q_{r-1}, Q_r)`` and ``b_r`` the buffer density of
    ``Rx_r``, all at the previous mode vector. With ``weight_ratio = c`` the
    target becomes ``Q_r = c * Q_{r-1}`` instead of equality. The result is
    not clamped.
    """
    q_prev, q_r = q_prev_pair
    if b_r >= 1.0:
        raise InfeasibleEqualization(f"buffer density {b_r:.6g} >= 1")
    target = weight_ratio * q_prev
    # solves (1 - w) Q_r + w / (1 - B_r) = (1 - w) * target
    denom = target - q_r + 1.0 / (1.0 - b_r)
    if not denom > 0:
        raise InfeasibleEqualization(f"equalisation denominator {denom:.6g} is not positive")
    return (target - q_r) / denom


def _clamp(omega: float, r: int) -> tuple[float, bool]:
    if omega < 0.0:
        log.warning("omega[%d] = %.6g below 0, clamped", r, omega)
        return 0.0, True
    if omega > OMEGA_MAX:
        log.warning("omega[%d] = %.6g too close to 1, clamped", r, omega)
        return OMEGA_MAX, True
    return omega, False


def run_fairness(mu: Sequence[float], weights: Sequence[float] | None = None) -> tuple[ModeVector, FairnessTrace]:
    """Iteratively equalise ``Q_r`` (or ``Q_r / w_r`` when weights are given)."""
    mu = tuple(float(x) for x in mu)
    if not mu:
        raise ValidationError("at least one receiver is required", "mu")
    if any(not 0 < x <= 1 for x in mu):
        raise ValidationError("channel rates must lie in (0, 1]", "mu")
    if any(a <= b for a, b in zip(mu, mu[1:])):
        raise ValidationError("mu must be strictly decreasing", "mu")
    R = len(mu)
    if weights is None:
        weights = (1.0,) * R
    weights = tuple(float(w) for w in weights)
    if len(weights) != R or any(not w > 0 for w in weights):
        raise ValidationError("need one positive weight per receiver", "weights")

    beta = [1.0] + [0.0] * (R - 1)
    q = [1.0]
    trace = FairnessTrace([FairnessStep(1, tuple(beta), 1.0, (1.0,))])
    for r in range(2, R + 1):
        # receivers 1..r only depend on modes 1..r, the rest are idle anyway
        try:
            report = run_rate_calc(mu[:r], beta[:r], strict=False)
            q_prev, q_now, b_r = (float(x) for x in (report.Q[r - 2], report.Q[r - 1], report.B[r - 1]))
            omega = compute_omega((q_prev, q_now), b_r, weights[r - 1] / weights[r - 2])
        except KdiffError as exc:
            raise type(exc)(f"fairness iteration {r}: {exc}") from exc
        omega, clamped = _clamp(omega, r)
        q_r = (1.0 - omega) * q_now + omega / (1.0 - b_r)
        beta = [(1.0 - omega) * b for b in beta[: r - 1]] + [omega] + beta[r:]
        q = [(1.0 - omega) * x for x in q] + [q_r]
        trace.steps.append(FairnessStep(r, tuple(beta), omega, tuple(q), clamped))

    # renormalise the few ulps the products may drift by
    total = sum(beta)
    return ModeVector(tuple(b / total for b in beta)), trace
