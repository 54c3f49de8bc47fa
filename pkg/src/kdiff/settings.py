"""Named parameter sets used in the published experiments."""

from __future__ import annotations


def _steps(start: float, step: float, count: int) -> tuple[float, ...]:
    return tuple(round(start - k * step, 10) for k in range(count))


SIMULATION = {
    "A": {"mu": (0.8, 0.6, 0.4, 0.2), "beta": (0.85, 0.05, 0.05, 0.05)},
    "B": {"mu": (0.9, 0.8, 0.7, 0.6, 0.5), "beta": (0.8, 0.05, 0.05, 0.05, 0.05)},
    "C": {"mu": _steps(0.8, 0.05, 8), "beta": (1.0,) + (0.0,) * 7},
    "D": {"mu": _steps(0.8, 0.05, 8), "beta": (0.86,) + (0.02,) * 7},
}

FAIRNESS = {
    "A": {"mu": (0.8, 0.7, 0.6, 0.5)},
    "B": {"mu": (0.9, 0.8, 0.7, 0.6, 0.5)},
    "C": {"mu": _steps(0.9, 0.05, 8)},
}

# rows of the undecoded-packet table: (mu, beta, percentages)
UNDECODED = [
    ((0.8, 0.6, 0.4, 0.2), (0.85, 0.05, 0.05, 0.05), (0.0, 0.0, 2.66, 10.26)),
    (_steps(0.9, 0.1, 8), (0.65,) + (0.05,) * 7, (0.0, 0.01, 0.63, 1.06, 2.88, 5.23, 11.5, 16.22)),
    (_steps(0.8, 0.05, 8), (1.0,) + (0.0,) * 7, (0.0, 0.03, 0.31, 0.60, 3.20, 6.10, 11.93, 12.07)),
]


def lookup(name: str) -> dict:
    """``sim-A`` .. ``sim-D`` or ``fair-A`` .. ``fair-C``."""
    kind, _, key = name.partition("-")
    table = {"sim": SIMULATION, "fair": FAIRNESS}.get(kind)
    if table is None or key.upper() not in table:
        raise KeyError(f"unknown setting {name!r}")
    return {k: list(v) for k, v in table[key.upper()].items()}
