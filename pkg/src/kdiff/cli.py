"""Command line front end: ``kdiff {simulate,analyze,fairness,compare}``.

Configs are JSON objects::

    {"mu": [0.8, 0.6, 0.4, 0.2], "beta": [0.85, 0.05, 0.05, 0.05],
     "slots": 1000000, "trials": 8, "seed": 42, "warmup_fraction": 0.1}

Results go to ``--out`` (JSON) with a per-receiver CSV next to it, or to
stdout when no output path is given.

Exit codes: 0 ok, 2 invalid input, 3 model or simulation failure, 4 I/O.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Sequence

import numpy as np

from . import settings
from .analysis import AnalysisReport, run_rate_calc
from .coder import ModeVector
from .errors import KdiffError, ValidationError
from .fairness import run_fairness
from .simulator import SimConfig, SimStats, run

EXIT_OK, EXIT_INVALID, EXIT_MODEL, EXIT_IO = 0, 2, 3, 4
COMMANDS = ("simulate", "analyze", "fairness", "compare")
CSV_HEADER = ["receiver", "mu", "R_analytic", "R_sim", "Q_analytic", "Q_sim", "B_analytic", "B_sim", "undecoded_pct"]

log = logging.getLogger("kdiff")


@dataclass(frozen=True)
class ExperimentConfig:
    mu: tuple[float, ...]
    beta: tuple[float, ...] | None = None
    slots: int = 1_000_000
    trials: int = 8
    seed: int = 42
    warmup_fraction: float = 0.1
    output_path: str | None = None
    compaction: bool = False
    weights: tuple[float, ...] | None = None

    def to_json(self) -> str:
        d = {k: (list(v) if isinstance(v, tuple) else v) for k, v in asdict(self).items()}
        return json.dumps({k: v for k, v in d.items() if v is not None}, indent=2)

    def sim_config(self) -> SimConfig:
        return SimConfig(
            self.mu, self.beta, slots=self.slots, seed=self.seed, warmup_fraction=self.warmup_fraction,
            trials=self.trials, compaction=self.compaction,
        )


def _number_list(value, path: str) -> tuple[float, ...]:
    if not isinstance(value, list) or not value:
        raise ValidationError("expected a non-empty list of numbers", path)
    out = []
    for i, x in enumerate(value):
        if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
            raise ValidationError("expected a finite number", f"{path}[{i}]")
        out.append(float(x))
    return tuple(out)


def _integer(value, path: str, minimum: int | None = None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ValidationError("expected an integer", path)
    if minimum is not None and value < minimum:
        raise ValidationError(f"must be >= {minimum}", path)
    return value


def parse_config(source: str | dict, command: str = "simulate") -> ExperimentConfig:
    """Validate a JSON config for ``command``; unknown keys are rejected."""
    if isinstance(source, str):
        try:
            data = json.loads(source)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"malformed JSON ({exc.msg} at line {exc.lineno})", "config") from exc
    else:
        data = dict(source)
    if not isinstance(data, dict):
        raise ValidationError("expected a JSON object", "config")
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValidationError(f"unknown key(s) {', '.join(unknown)}", "config")
    if "mu" not in data:
        raise ValidationError("is required", "mu")

    mu = _number_list(data["mu"], "mu")
    if any(not 0 < x <= 1 for x in mu):
        raise ValidationError("channel rates must lie in (0, 1]", "mu")
    if any(a <= b for a, b in zip(mu, mu[1:])):
        raise ValidationError("mu must be strictly decreasing", "mu")

    beta = None
    if command == "fairness":
        if "beta" in data:
            raise ValidationError("is computed by the fairness command and must not be given", "beta")
    else:
        if "beta" not in data:
            raise ValidationError(f"is required for {command}", "beta")
        if "weights" in data:
            raise ValidationError("only applies to the fairness command", "weights")
        beta = ModeVector(_number_list(data["beta"], "beta")).beta
        if len(beta) != len(mu):
            raise ValidationError(f"mu has {len(mu)} entries but beta has {len(beta)}", "beta")

    weights = None
    if data.get("weights") is not None:
        weights = _number_list(data["weights"], "weights")
        if len(weights) != len(mu) or any(w <= 0 for w in weights):
            raise ValidationError("need one positive weight per receiver", "weights")

    warmup = data.get("warmup_fraction", 0.1)
    if isinstance(warmup, bool) or not isinstance(warmup, (int, float)) or not 0 <= warmup < 1:
        raise ValidationError("must be a number in [0, 1)", "warmup_fraction")
    out = data.get("output_path")
    if out is not None and not isinstance(out, str):
        raise ValidationError("expected a string", "output_path")
    compaction = data.get("compaction", False)
    if not isinstance(compaction, bool):
        raise ValidationError("expected true or false", "compaction")

    return ExperimentConfig(
        mu=mu,
        beta=beta,
        slots=_integer(data.get("slots", 1_000_000), "slots", 1),
        trials=_integer(data.get("trials", 8), "trials", 1),
        seed=_integer(data.get("seed", 42), "seed", 0),
        warmup_fraction=float(warmup),
        output_path=out,
        compaction=compaction,
        weights=weights,
    )


# ---- reports -------------------------------------------------------------


def _fmt(x) -> str:
    if x is None:
        return ""
    x = float(x)
    return "" if math.isnan(x) else "%.6g" % x


def emit_csv(mu: Sequence[float], analysis: AnalysisReport | None = None, sim: SimStats | None = None) -> str:
    """Per-receiver table; columns of a missing part are left empty."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for i, m in enumerate(mu):
        a = (analysis.R[i], analysis.Q[i], analysis.B[i]) if analysis else (None,) * 3
        s = (
            (sim.delivery_rate[i], sim.delivery_rate[i] / m, sim.buffer_density[i], sim.undecoded_pct[i])
            if sim
            else (None,) * 4
        )
        w.writerow([i + 1, _fmt(m), _fmt(a[0]), _fmt(s[0]), _fmt(a[1]), _fmt(s[1]), _fmt(a[2]), _fmt(s[2]), _fmt(s[3])])
    return buf.getvalue()


def _clean(obj):
    """JSON-safe copy: numpy to builtins, NaN to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return None if math.isnan(obj) else float(obj)
    return obj


def _delta(sim: np.ndarray, ana: np.ndarray) -> dict:
    sim, ana = np.asarray(sim, float), np.asarray(ana, float)
    with np.errstate(invalid="ignore", divide="ignore"):
        rel = np.where(ana != 0, np.abs(sim - ana) / np.abs(ana), np.nan)
    return {"simulated": sim, "analytic": ana, "abs_diff": np.abs(sim - ana), "rel_diff": rel}


def do_simulate(cfg: ExperimentConfig) -> tuple[dict, str]:
    stats = run(cfg.sim_config())
    return {"config": json.loads(cfg.to_json()), "simulation": stats.to_dict()}, emit_csv(cfg.mu, sim=stats)


def do_analyze(cfg: ExperimentConfig) -> tuple[dict, str]:
    rep = run_rate_calc(cfg.mu, cfg.beta)
    return {"config": json.loads(cfg.to_json()), "analysis": rep.to_dict()}, emit_csv(cfg.mu, analysis=rep)


def do_fairness(cfg: ExperimentConfig) -> tuple[dict, str]:
    beta, trace = run_fairness(cfg.mu, cfg.weights)
    rep = run_rate_calc(cfg.mu, beta.beta)
    doc = {
        "config": json.loads(cfg.to_json()),
        "beta": list(beta.beta),
        "trace": trace.to_dict(),
        "Q": rep.Q.tolist(),
        "R": rep.R.tolist(),
    }
    return doc, emit_csv(cfg.mu, analysis=rep)


def do_compare(cfg: ExperimentConfig) -> tuple[dict, str]:
    rep = run_rate_calc(cfg.mu, cfg.beta)
    stats = run(cfg.sim_config())
    mu = np.asarray(cfg.mu)
    doc = {
        "config": json.loads(cfg.to_json()),
        "analysis": rep.to_dict(),
        "simulation": stats.to_dict(),
        "delta": {
            "R": _delta(stats.delivery_rate, rep.R),
            "Q": _delta(stats.delivery_rate / mu, rep.Q),
            "B": _delta(stats.buffer_density, rep.B),
            "K": _delta(stats.kdiff_rate, rep.K),
        },
    }
    return doc, emit_csv(cfg.mu, analysis=rep, sim=stats)


HANDLERS = {"simulate": do_simulate, "analyze": do_analyze, "fairness": do_fairness, "compare": do_compare}


def dispatch(command: str, cfg: ExperimentConfig) -> tuple[dict, str]:
    return HANDLERS[command](cfg)


def write_outputs(doc: dict, table: str, out: str | None, stdout=None) -> None:
    text = json.dumps(_clean(doc), indent=2, allow_nan=False) + "\n"
    if out is None:
        (stdout or sys.stdout).write(text)
        return
    path = Path(out)
    path.write_text(text)
    path.with_suffix(".csv").write_text(table)


# ---- entry point ---------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kdiff", description="Knowledge-differential broadcast coding: simulation and analysis.")
    p.add_argument("command", choices=COMMANDS)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON config file ('-' for stdin)")
    src.add_argument("--setting", help="built-in parameters: sim-A..sim-D, fair-A..fair-C")
    p.add_argument("--out", help="output JSON path; a .csv table is written next to it")
    p.add_argument("--slots", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials", type=int)
    p.add_argument("--warmup", type=float, dest="warmup_fraction")
    p.add_argument("--compaction", action="store_true", default=None)
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _load(args) -> dict:
    if args.setting:
        try:
            data = settings.lookup(args.setting)
        except KeyError as exc:
            raise ValidationError(str(exc.args[0]), "setting") from exc
        if args.command != "fairness" and "beta" not in data:
            raise ValidationError(f"{args.setting} has no mode vector; use it with the fairness command", "setting")
        if args.command == "fairness":
            data.pop("beta", None)
        return data
    text = sys.stdin.read() if args.config == "-" else Path(args.config).read_text()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON ({exc.msg} at line {exc.lineno})", "config") from exc
    return data


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        data = _load(args)
        if isinstance(data, dict):
            for key in ("slots", "seed", "trials", "warmup_fraction", "compaction"):
                if getattr(args, key) is not None:
                    data[key] = getattr(args, key)
        cfg = parse_config(data, args.command)
        doc, table = dispatch(args.command, cfg)
        write_outputs(doc, table, args.out or cfg.output_path)
    except ValidationError as exc:
        print(f"kdiff: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except KdiffError as exc:
        print(f"kdiff: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_MODEL
    except OSError as exc:
        print(f"kdiff: I/O error: {exc.filename or ''}: {exc.strerror or exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
