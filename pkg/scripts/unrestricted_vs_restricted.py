"""How much do free coefficient values buy over retained ones?

For random signals, compares the restricted optimum with the grid DP at a
range of epsilons and reports the gap alongside the additive allowance
eps*M + delta*n^(1/k).
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from _config import emit, parse_config
from wavesyn.haar import Signal
from wavesyn.metrics import ErrorMetric
from wavesyn.restricted import restricted_error
from wavesyn.unrestricted import GridTooLarge, build_grid, unrestricted_synopsis


@dataclass
class Config:
    """Restricted vs grid-valued synopses."""

    n: int = 16
    budgets: tuple[int, ...] = (1, 2, 4)
    epsilons: tuple[float, ...] = (2.0, 1.0, 0.5, 0.25)
    metrics: tuple[str, ...] = ("l1", "l2", "linf")
    trials: int = 5
    weighted: bool = False
    seed: int = 0
    out: str | None = None


def main(cfg: Config) -> None:
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for trial in range(cfg.trials):
        w = rng.uniform(0.5, 2.0, size=cfg.n) if cfg.weighted else None
        sig = Signal.from_values(rng.normal(size=cfg.n) * 5, w)
        M = float(np.max(np.abs(sig.values)))
        for name in cfg.metrics:
            metric = ErrorMetric.parse(name)
            rn = 1.0 if metric.is_inf else cfg.n ** (1 / metric.k)
            for B in cfg.budgets:
                r, _ = restricted_error(sig, metric, B)
                for eps in cfg.epsilons:
                    row = {"trial": trial, "metric": name, "B": B, "eps": eps, "restricted": r}
                    try:
                        g = build_grid(sig, metric, eps)
                    except GridTooLarge as exc:
                        rows.append(row | {"skipped": str(exc)})
                        continue
                    t = time.perf_counter()
                    sol = unrestricted_synopsis(sig, metric, B, eps)
                    row |= {
                        "grid_points": g.count,
                        "unrestricted": sol.reported_error,
                        "allowance": eps * M + g.delta * rn,
                        "gain": r - sol.reported_error,
                        "minplus_ops": sol.stats.minplus_ops,
                        "seconds": round(time.perf_counter() - t, 4),
                    }
                    rows.append(row)
    emit(rows, cfg.out)


if __name__ == "__main__":
    main(parse_config(Config))
