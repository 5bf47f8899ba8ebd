"""Exhaustive reference solvers for small instances.

Only the transform primitives and metric definitions are shared with the
solvers, so agreement between the two is meaningful evidence.
"""
from __future__ import annotations

import itertools
from functools import lru_cache

import numpy as np

from .haar import Signal, basis_vector, forward, leaf_path
from .metrics import ErrorMetric, finalize

MAX_RESTRICTED_N = 20
MAX_HISTOGRAM_N = 14
MAX_EXTENDED_N = 8
MAX_GRID_ASSIGNMENTS = 5_000_000


class InstanceTooLarge(RuntimeError):
    pass


def _signal(signal) -> Signal:
    return signal if isinstance(signal, Signal) else Signal.from_values(signal)


def _basis(n: int) -> np.ndarray:
    """Row i is the reconstruction of a unit coefficient at index i."""
    return np.stack([basis_vector(i, n) for i in range(n)])


def _errors(x, w, recon, metric: ErrorMetric) -> np.ndarray:
    """Power-domain error of every row of ``recon``."""
    e = w * np.abs(x - recon)
    return e.max(axis=1) if metric.is_inf else (e**metric.k).sum(axis=1)


@lru_cache(maxsize=64)
def _restricted_table(xb: bytes, wb: bytes, k: int | None):
    x = np.frombuffer(xb)
    w = np.frombuffer(wb)
    n = len(x)
    metric = ErrorMetric(k)
    coeffs = forward(x)
    basis = _basis(n)
    best = np.full(n + 1, np.inf)
    arg = np.zeros(n + 1, dtype=np.int64)
    bits = np.arange(n)
    chunk = 1 << 14
    for start in range(0, 1 << n, chunk):
        masks = np.arange(start, min(start + chunk, 1 << n))
        sel = (masks[:, None] >> bits) & 1
        err = _errors(x, w, (sel * coeffs) @ basis, metric)
        size = sel.sum(axis=1)
        for s in range(n + 1):
            hit = size == s
            if not hit.any():
                continue
            pos = np.flatnonzero(hit)
            j = pos[np.argmin(err[pos])]
            if err[j] < best[s]:
                best[s], arg[s] = err[j], masks[j]
    return best, arg


def brute_restricted_profile(signal, metric: ErrorMetric) -> np.ndarray:
    """Best power-domain error for each exact subset size 0..n."""
    sig = _signal(signal)
    if sig.n > MAX_RESTRICTED_N:
        raise InstanceTooLarge(f"n={sig.n} exceeds {MAX_RESTRICTED_N} for exhaustive search")
    best, _ = _restricted_table(sig.values.tobytes(), sig.weights.tobytes(), metric.k)
    return best.copy()


def brute_restricted(signal, metric: ErrorMetric, B: int):
    """(error, kept indices) over every coefficient subset of size <= B."""
    if B < 0:
        raise ValueError("budget must be non-negative")
    sig = _signal(signal)
    if sig.n > MAX_RESTRICTED_N:
        raise InstanceTooLarge(f"n={sig.n} exceeds {MAX_RESTRICTED_N} for exhaustive search")
    best, arg = _restricted_table(sig.values.tobytes(), sig.weights.tobytes(), metric.k)
    s = int(np.argmin(best[: min(B, sig.n) + 1]))
    mask = int(arg[s])
    return finalize(best[s], metric), tuple(i for i in range(sig.n) if mask >> i & 1)


def _prefix_rows(n: int) -> np.ndarray:
    """Signed partial ancestor sums: one row per (leaf, depth)."""
    rows = []
    for j in range(n):
        acc = np.zeros(n)
        for idx, sign in leaf_path(j, n):
            acc = acc.copy()
            acc[idx] = sign
            rows.append(acc)
    return np.array(rows)


def brute_unrestricted_on_grid(signal, metric: ErrorMetric, B: int, grid):
    """(error, {index: value}) over every grid-valued synopsis of size <= B.

    ``grid`` supplies ``delta`` and ``half_count``; values are
    ``m * delta`` with ``|m| <= half_count``. A synopsis counts only if
    every partial ancestor sum along every root-to-leaf path stays on the
    grid, the same range the table solver tracks.
    """
    sig = _signal(signal)
    x, w, n = sig.values, sig.weights, sig.n
    delta, half = grid.delta, grid.half_count
    steps = np.array([m for m in range(-half, half + 1) if m != 0], dtype=np.int64)
    total = sum(
        len(list(itertools.combinations(range(n), s))) * len(steps) ** s for s in range(min(B, n) + 1)
    )
    if total > MAX_GRID_ASSIGNMENTS:
        raise InstanceTooLarge(f"{total} assignments exceed {MAX_GRID_ASSIGNMENTS}")
    basis = _basis(n).astype(np.int64)
    prefix = _prefix_rows(n).astype(np.int64)
    best = _errors(x, w, np.zeros((1, n)), metric)[0]
    best_assign: dict[int, float] = {}
    for s in range(1, min(B, n) + 1 if len(steps) else 1):
        vals = np.array(list(itertools.product(steps, repeat=s)), dtype=np.int64)
        for pos in itertools.combinations(range(n), s):
            z = np.zeros((len(vals), n), dtype=np.int64)
            z[:, pos] = vals
            ok = np.all(np.abs(z @ prefix.T) <= half, axis=1)
            if not ok.any():
                continue
            z = z[ok]
            err = _errors(x, w, (z @ basis) * delta, metric)
            j = int(np.argmin(err))
            if err[j] < best:
                best = err[j]
                best_assign = {int(p): float(z[j, p] * delta) for p in pos}
    return finalize(best, metric), best_assign


def brute_histogram(values, B: int):
    """(sse, 1-based boundaries) over every split into at most B buckets."""
    x = np.asarray(values, dtype=np.float64).ravel()
    n = len(x)
    if n > MAX_HISTOGRAM_N:
        raise InstanceTooLarge(f"n={n} exceeds {MAX_HISTOGRAM_N} for exhaustive search")
    if B < 1:
        raise ValueError("a histogram needs at least one bucket")
    best, best_cuts = np.inf, ()
    for s in range(min(B, n)):
        for cuts in itertools.combinations(range(1, n), s):
            edges = (0, *cuts, n)
            sse = sum(float(((x[a:b] - x[a:b].mean()) ** 2).sum()) for a, b in zip(edges, edges[1:]))
            if sse < best:
                best, best_cuts = sse, cuts
    return best, [1] + [c + 1 for c in best_cuts] + [n + 1]


def brute_extended(items, B: int, h: int):
    """(profit, sizes) over every per-item size choice 0..M with cost <= B."""
    n = len(items)
    if n > MAX_EXTENDED_N:
        raise InstanceTooLarge(f"{n} items exceed {MAX_EXTENDED_N} for exhaustive search")
    M = max((len(it.benefits) for it in items), default=0)
    if n == 0:
        return 0.0, ()
    table = np.zeros((n, M + 1))
    for t, it in enumerate(items):
        b = np.sort(np.asarray(it.benefits, dtype=np.float64))[::-1]
        prof = np.concatenate([[0.0], np.cumsum(b)])
        table[t, : len(prof)] = prof
        table[t, len(prof) :] = -np.inf  # sizes beyond this item's dimensions
    sizes = np.array(list(itertools.product(range(M + 1), repeat=n)), dtype=np.int64)
    cost = np.where(sizes > 0, sizes + h, 0).sum(axis=1)
    profit = table[np.arange(n), sizes].sum(axis=1)
    profit[cost > B] = -np.inf
    j = int(np.argmax(profit))
    return float(profit[j]), tuple(int(s) for s in sizes[j])
