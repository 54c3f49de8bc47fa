import logging
import math

import numpy as np
import pytest

from kdiff.analysis import run_rate_calc
from kdiff.errors import InfeasibleEqualization, ValidationError
from kdiff.fairness import compute_omega, run_fairness
from kdiff.settings import FAIRNESS

SETTINGS = [tuple(v["mu"]) for v in FAIRNESS.values()]


def bisect_omega(mu, prev_beta, r, lo=0.0, hi=1.0 - 1e-12):
    """Solve Q_r = Q_{r-1} over the family ((1-w) beta[:r-1], w) by bisection."""

    def gap(w):
        beta = [(1 - w) * b for b in prev_beta[: r - 1]] + [w]
        q = run_rate_calc(mu[:r], beta, strict=False).Q
        return q[r - 2] - q[r - 1]

    g_lo = gap(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if (gap(mid) > 0) == (g_lo > 0):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def test_omega_zero_when_already_equal():
    assert compute_omega((0.7, 0.7), 0.3) == 0.0


def test_omega_degenerate_denominator():
    with pytest.raises(InfeasibleEqualization):
        compute_omega((0.0, 2.0), 0.0)
    with pytest.raises(InfeasibleEqualization):
        compute_omega((1.0, 0.5), 1.0)


def test_omega_closed_form():
    # (1 - w) Q_r + w / (1 - B) = (1 - w) Q_{r-1}
    q1, q2, b = 1.0, 0.5833333, 0.7446808
    w = compute_omega((q1, q2), b)
    assert (1 - w) * q2 + w / (1 - b) == pytest.approx((1 - w) * q1, abs=1e-12)


@pytest.mark.parametrize("mu", SETTINGS)
def test_omega_matches_bisection_each_iteration(mu):
    _, trace = run_fairness(mu)
    for prev, step in zip(trace.steps, trace.steps[1:]):
        assert step.omega == pytest.approx(bisect_omega(mu, prev.beta, step.r), abs=1e-6)


def test_setting_a_iteration_two():
    mu = FAIRNESS["A"]["mu"]
    _, trace = run_fairness(mu)
    assert trace.steps[1].omega == pytest.approx(bisect_omega(mu, [1.0, 0, 0, 0], 2), abs=1e-6)


def test_single_receiver():
    beta, trace = run_fairness([0.6])
    assert beta.beta == (1.0,)
    assert trace.steps[0].q == (1.0,)


@pytest.mark.parametrize("mu", SETTINGS)
def test_trace_invariants(mu):
    _, trace = run_fairness(mu)
    for prev, step in zip(trace.steps, trace.steps[1:]):
        assert math.fsum(step.beta) == pytest.approx(1.0, abs=1e-12)
        assert 0.0 <= step.omega < 1.0
        assert step.q[0] == (1 - step.omega) * prev.q[0]
        assert max(step.q) - min(step.q) < 1e-9


@pytest.mark.parametrize("mu", SETTINGS)
def test_final_self_consistency(mu):
    beta, _ = run_fairness(mu)
    rep = run_rate_calc(mu, beta.beta)
    assert rep.Q.max() - rep.Q.min() <= 1e-6
    assert np.all(np.abs(rep.Q - beta.beta[0]) <= 1e-6)
    # receivers stay ordered by delivery rate
    assert np.all(np.diff(rep.R) <= 0)


def test_weights_shape_the_ratios():
    mu = FAIRNESS["A"]["mu"]
    w = (1.0, 0.9, 0.8, 0.7)
    beta, _ = run_fairness(mu, w)
    q = run_rate_calc(mu, beta.beta).Q
    np.testing.assert_allclose(q / np.array(w), q[0], rtol=1e-9)


def test_omega_clamped_and_logged(caplog):
    with caplog.at_level(logging.WARNING, logger="kdiff.fairness"):
        beta, trace = run_fairness([0.8, 0.7], weights=[1.0, 0.01])
    assert trace.steps[1].clamped and trace.steps[1].omega == 0.0
    assert beta.beta == (1.0, 0.0)
    assert "clamped" in caplog.text


def test_input_validation():
    with pytest.raises(ValidationError):
        run_fairness([0.5, 0.8])
    with pytest.raises(ValidationError):
        run_fairness([])
    with pytest.raises(ValidationError):
        run_fairness([0.8, 0.5], weights=[1.0])


def test_trace_serialises():
    _, trace = run_fairness(FAIRNESS["B"]["mu"])
    d = trace.to_dict()
    assert [s["r"] for s in d] == [1, 2, 3, 4, 5]
