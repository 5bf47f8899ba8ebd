"""Command-line front end.

Every command prints one JSON document with keys in a fixed order:
``params``, then the payload (``coefficients``, ``picks``, ``buckets`` or
``allocation``), then ``error`` and, with ``--stats``, ``stats``.

Exit codes: 0 success, 2 unreadable input or bad flags, 3 invalid values,
4 refused because a size guard would be exceeded.
"""
from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass

import numpy as np

from .extended import compute_benefits, solve_extended
from .haar import InvalidSignal, Signal, forward, inverse
from .metrics import ErrorMetric, L1, L2, LINF, norm
from .restricted import extract_restricted
from .unrestricted import DEFAULT_GRID_CAP, GridTooLarge, unrestricted_synopsis
from .vopt import TableTooLarge, vopt_linear_space

EXIT_OK, EXIT_PARSE, EXIT_INVALID, EXIT_GUARD = 0, 2, 3, 4


class ParseError(Exception):
    pass


class ValidationError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    input: str | None = None
    weights: str | None = None
    metric: str = "l2"
    budget: int = 1
    epsilon: float = 0.1
    header_cost: int = 1
    mode: str = "restricted"
    synopsis: str | None = None
    stats: bool = False
    output: str | None = None
    grid_cap: int = DEFAULT_GRID_CAP


_SPLIT = re.compile(r"[,\s;]+")


def _read_text(path: str | None) -> str:
    try:
        if path is None or path == "-":
            return sys.stdin.read()
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except (OSError, UnicodeDecodeError) as exc:
        raise ParseError(f"cannot read {path or 'stdin'}: {exc}") from None


def parse_values(text: str) -> np.ndarray:
    """One value per line or comma separated."""
    tokens = [t for t in _SPLIT.split(text.strip()) if t]
    try:
        return np.array([float(t) for t in tokens], dtype=np.float64)
    except ValueError as exc:
        raise ParseError(str(exc)) from None


def parse_matrix(text: str) -> np.ndarray:
    """Rows on lines, columns separated by commas or whitespace."""
    rows = [r for r in text.strip().splitlines() if r.strip()]
    try:
        data = [[float(t) for t in _SPLIT.split(r.strip()) if t] for r in rows]
    except ValueError as exc:
        raise ParseError(str(exc)) from None
    if not data or len({len(r) for r in data}) != 1:
        raise ParseError("matrix rows must all have the same number of columns")
    return np.array(data, dtype=np.float64)


def _metric(text: str) -> ErrorMetric:
    try:
        return ErrorMetric.parse(text)
    except ValueError as exc:
        raise ValidationError(str(exc)) from None


def _signal(cfg: RunConfig) -> Signal:
    x = parse_values(_read_text(cfg.input))
    w = parse_values(_read_text(cfg.weights)) if cfg.weights else None
    try:
        return Signal.from_values(x, w)
    except InvalidSignal as exc:
        raise ValidationError(str(exc)) from None


def _errors(sig: Signal, approx: np.ndarray, metric: ErrorMetric, objective: float | None = None) -> dict:
    out = {"metric": str(metric)}
    out["objective"] = float(objective if objective is not None else norm(sig.values, approx, sig.weights, metric))
    for m in (L1, L2, LINF):
        out[str(m)] = float(norm(sig.values, approx, sig.weights, m))
    return out


def _params(cfg: RunConfig, **extra) -> dict:
    p = {"command": cfg.command}
    p.update(extra)
    return p


def cmd_transform(cfg: RunConfig) -> dict:
    sig = _signal(cfg)
    return {"params": _params(cfg, n=sig.n), "coefficients": [float(c) for c in forward(sig.values)]}


def cmd_synopsis(cfg: RunConfig) -> dict:
    sig = _signal(cfg)
    metric = _metric(cfg.metric)
    if cfg.budget < 0:
        raise ValidationError("budget must be non-negative")
    params = _params(cfg, mode=cfg.mode, metric=str(metric), budget=cfg.budget, n=sig.n, weighted=sig.weighted)
    if cfg.mode == "restricted":
        sol = extract_restricted(sig, metric, cfg.budget)
    else:
        if not cfg.epsilon > 0:
            raise ValidationError("epsilon must be positive")
        params["epsilon"] = cfg.epsilon
        sol = unrestricted_synopsis(sig, metric, cfg.budget, cfg.epsilon, grid_cap=cfg.grid_cap)
    approx = inverse(sol.coefficient_vector(sig.n))
    doc = {
        "params": params,
        "picks": [[int(i), float(v)] for i, v in sol.picks],
        "error": _errors(sig, approx, metric, sol.reported_error),
    }
    if cfg.stats:
        doc["stats"] = {"solve": sol.stats.as_dict(), "extract": sol.extract_stats.as_dict()}
    return doc


def cmd_histogram(cfg: RunConfig) -> dict:
    x = parse_values(_read_text(cfg.input))
    if len(x) == 0:
        raise ValidationError("empty input")
    if not np.all(np.isfinite(x)):
        raise ValidationError("values must be finite")
    if cfg.budget < 1:
        raise ValidationError("a histogram needs at least one bucket")
    h = vopt_linear_space(x, cfg.budget)
    doc = {
        "params": _params(cfg, budget=cfg.budget, n=len(x)),
        "buckets": [
            {"start": s, "end": e, "mean": float(r)} for (s, e), r in zip(h.buckets, h.reps)
        ],
        "error": {"sse": float(h.sse), "l2": float(h.rmse_norm)},
    }
    if cfg.stats:
        doc["stats"] = {"cell_evals": h.cell_evals}
    return doc


def cmd_extended(cfg: RunConfig) -> dict:
    data = parse_matrix(_read_text(cfg.input))
    if cfg.budget < 0 or cfg.header_cost < 0:
        raise ValidationError("budget and header cost must be non-negative")
    try:
        coeffs = np.column_stack([forward(col) for col in data.T])
    except InvalidSignal as exc:
        raise ValidationError(str(exc)) from None
    items = compute_benefits(coeffs)
    alloc = solve_extended(items, cfg.budget, cfg.header_cost)
    doc = {
        "params": _params(cfg, budget=cfg.budget, header_cost=cfg.header_cost, n=data.shape[0], dims=data.shape[1]),
        "allocation": [
            {"index": i, "dims": list(d), "values": [float(v) for v in vals]} for i, d, vals in alloc.entries
        ],
        "error": {"profit": alloc.profit, "cost": alloc.cost},
    }
    if cfg.stats:
        doc["stats"] = alloc.stats
    return doc


def cmd_evaluate(cfg: RunConfig) -> dict:
    sig = _signal(cfg)
    metric = _metric(cfg.metric)
    if cfg.synopsis is None:
        raise ValidationError("--synopsis is required")
    try:
        doc = json.loads(_read_text(cfg.synopsis))
        picks = [(int(i), float(v)) for i, v in doc["picks"]]
    except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"bad synopsis document: {exc}") from None
    z = np.zeros(sig.n)
    for i, v in picks:
        if not 0 <= i < sig.n:
            raise ValidationError(f"coefficient index {i} out of range for n={sig.n}")
        z[i] = v
    approx = inverse(z)
    return {
        "params": _params(cfg, metric=str(metric), n=sig.n, weighted=sig.weighted),
        "picks": [[i, v] for i, v in picks],
        "error": _errors(sig, approx, metric),
    }


COMMANDS = {
    "transform": cmd_transform,
    "synopsis": cmd_synopsis,
    "histogram": cmd_histogram,
    "extended": cmd_extended,
    "evaluate": cmd_evaluate,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="wavesyn", description="Wavelet synopses and V-Opt histograms.")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, metric=False):
        p.add_argument("--input", help="values file; stdin when omitted")
        p.add_argument("--output", help="write the document here instead of stdout")
        p.add_argument("--stats", action="store_true", help="include solver counters")
        if metric:
            p.add_argument("--weights", help="per-point weights, same format as the input")
            p.add_argument("--metric", default="l2", help="l1, l2, ... or linf (default l2)")

    common(sub.add_parser("transform", help="Haar coefficients of a signal"))
    p = sub.add_parser("synopsis", help="B-term wavelet synopsis")
    common(p, metric=True)
    p.add_argument("--mode", choices=["restricted", "unrestricted"], default="restricted")
    p.add_argument("--budget", "-B", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--grid-cap", type=int, default=DEFAULT_GRID_CAP)
    p = sub.add_parser("histogram", help="optimal V-Opt histogram")
    common(p)
    p.add_argument("--budget", "-B", type=int, default=1)
    p = sub.add_parser("extended", help="extended-wavelet allocation for an n x M data matrix")
    common(p)
    p.add_argument("--budget", "-B", type=int, default=1)
    p.add_argument("--header-cost", type=int, default=1)
    p = sub.add_parser("evaluate", help="error of a synopsis document on a signal")
    common(p, metric=True)
    p.add_argument("--synopsis", required=True, help="document written by the synopsis command")
    return ap


def run(argv=None) -> int:
    args = build_parser().parse_args(argv)
    cfg = RunConfig(**{k.replace("-", "_"): v for k, v in vars(args).items()})
    try:
        doc = COMMANDS[cfg.command](cfg)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (GridTooLarge, TableTooLarge) as exc:
        print(f"refused: {exc}", file=sys.stderr)
        return EXIT_GUARD
    text = json.dumps(doc, indent=2) + "\n"
    if cfg.output:
        with open(cfg.output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
