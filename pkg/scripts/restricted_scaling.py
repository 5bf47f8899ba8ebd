"""Work and working-set counters of the restricted DP as n and B grow.

Prints one JSON line per (n, B): min-plus pair count, node visits, peak live
profile entries next to 4B log2(n/B) + 4B, and wall time.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from _config import emit, parse_config
from wavesyn.metrics import ErrorMetric
from wavesyn.restricted import restricted_error


@dataclass
class Config:
    """Restricted DP scaling sweep."""

    log_n: tuple[int, ...] = (8, 9, 10, 11, 12)
    budgets: tuple[int, ...] = (4, 16, 64)
    metric: str = "l2"
    seed: int = 0
    out: str | None = None


def main(cfg: Config) -> None:
    metric = ErrorMetric.parse(cfg.metric)
    rng = np.random.default_rng(cfg.seed)
    restricted_error(np.arange(8.0), metric, 2)  # compile outside the timings
    rows = []
    prev: dict[int, int] = {}
    for lg in cfg.log_n:
        n = 1 << lg
        x = rng.normal(size=n)
        for B in cfg.budgets:
            if B > n:
                continue
            t = time.perf_counter()
            err, used, st = restricted_error(x, metric, B, return_stats=True)
            row = {
                "n": n,
                "B": B,
                "error": err,
                "budget_used": used,
                "minplus_ops": st.minplus_ops,
                "node_visits": st.node_visits,
                "peak_live_entries": st.peak_live_entries,
                "peak_bound": 4 * B * math.log2(n / B) + 4 * B if B <= n // 2 else None,
                "seconds": round(time.perf_counter() - t, 4),
            }
            if B in prev and n // 2 in {r["n"] for r in rows}:
                row["ops_ratio_vs_half_n"] = st.minplus_ops / prev[B]
            prev[B] = st.minplus_ops
            rows.append(row)
    emit(rows, cfg.out)


if __name__ == "__main__":
    main(parse_config(Config))
