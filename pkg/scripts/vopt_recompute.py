"""Cost of recovering the optimal histogram by recursive recomputation.

Reports total cell evaluations against a single forward pass, and checks
the result against the stored-table DP where that fits in memory.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from _config import emit, parse_config
from wavesyn.vopt import TableTooLarge, forward_pass_cells, vopt_full_table, vopt_linear_space


@dataclass
class Config:
    """V-Opt recompute overhead sweep."""

    sizes: tuple[int, ...] = (128, 256, 512, 1024)
    budgets: tuple[int, ...] = (2, 8, 32, 128)
    signal: str = "walk"  # walk, noise or steps
    seed: int = 0
    out: str | None = None


def _signal(kind: str, n: int, rng) -> np.ndarray:
    if kind == "walk":
        return np.cumsum(rng.normal(size=n))
    if kind == "steps":
        return np.repeat(rng.normal(size=max(1, n // 16)) * 4, 16)[:n] + rng.normal(size=n) * 0.1
    return rng.normal(size=n)


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    vopt_linear_space(np.arange(4.0), 2)
    rows = []
    for n in cfg.sizes:
        x = _signal(cfg.signal, n, rng)
        for B in cfg.budgets:
            if B > n:
                continue
            t = time.perf_counter()
            h = vopt_linear_space(x, B)
            elapsed = time.perf_counter() - t
            row = {
                "n": n,
                "B": B,
                "sse": h.sse,
                "buckets": len(h.reps),
                "cell_evals": h.cell_evals,
                "ratio_to_one_pass": h.cell_evals / forward_pass_cells(n, B),
                "seconds": round(elapsed, 4),
            }
            try:
                row["full_table_sse"] = vopt_full_table(x, B)[0].sse
            except TableTooLarge:
                pass
            rows.append(row)
    emit(rows, cfg.out)


if __name__ == "__main__":
    main(parse_config(Config))
