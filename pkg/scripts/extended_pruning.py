"""How often does candidate pruning drop the optimal allocation?

Compares the top-ceil(B/j) candidate rule and the exchange-argument rule
against exhaustive search on random benefit matrices, then on two
hand-built instances where the first rule fails.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from _config import emit, parse_config
from wavesyn.extended import build_candidates, items_from_benefits, solve_extended
from wavesyn.oracles import brute_extended


@dataclass
class Config:
    """Candidate pruning audit."""

    trials: int = 1000
    max_items: int = 8
    max_dims: int = 4
    max_budget: int = 16
    headers: tuple[int, ...] = (0, 1, 2)
    distribution: str = "uniform"  # uniform or heavy
    seed: int = 0
    out: str | None = None


CONSTRUCTED = [
    ("two tight items, no header", [[10, 1], [10, 1], [5, 5]], 4, 0),
    ("four tight items, header 1", [[10, 1, 1]] * 4 + [[3.9, 3.9, 3.9]], 12, 1),
]


def _row(label, items, B, h):
    best, _ = brute_extended(items, B, h)
    out = {"instance": label, "B": B, "h": h, "optimum": best}
    for rule in ("top_ceil", "exchange"):
        p = solve_extended(items, B, h, rule=rule).profit
        out[f"{rule}_profit"] = p
        out[f"{rule}_candidates"] = len(build_candidates(items, B, h, rule=rule))
        out[f"{rule}_lost"] = not math.isclose(p, best, rel_tol=0, abs_tol=1e-9)
    return out


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    lost = {"top_ceil": 0, "exchange": 0}
    rows = []
    for t in range(cfg.trials):
        n = int(rng.integers(1, cfg.max_items + 1))
        M = int(rng.integers(1, cfg.max_dims + 1))
        B = int(rng.integers(0, cfg.max_budget + 1))
        h = cfg.headers[t % len(cfg.headers)]
        b = rng.random((n, M)) if cfg.distribution == "uniform" else rng.pareto(1.5, size=(n, M))
        r = _row(f"random {t}", items_from_benefits(b), B, h)
        for rule in lost:
            lost[rule] += r[f"{rule}_lost"]
        if r["top_ceil_lost"] or r["exchange_lost"]:
            rows.append(r)
    rows.append({"summary": True, "trials": cfg.trials, **{f"{k}_lost": v for k, v in lost.items()}})
    for label, bens, B, h in CONSTRUCTED:
        rows.append(_row(label, items_from_benefits(bens), B, h))
    emit(rows, cfg.out)


if __name__ == "__main__":
    main(parse_config(Config))
