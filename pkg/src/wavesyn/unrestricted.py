"""Near-optimal unrestricted Haar synopsis over a quantized value grid.

Coefficient values are restricted to multiples of ``delta`` inside
``[-V, V]``. Every table is indexed by the grid position of the incoming
ancestor sum, so a node's work is one min-plus step per (incoming value,
coefficient value) pair. The result is within ``eps * M`` of the best
synopsis with arbitrary real values.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .haar import Signal, coefficient_count
from .metrics import ErrorMetric, accumulate, finalize
from .restricted import Stats, SynopsisSolution

DEFAULT_GRID_CAP = 20000


class GridTooLarge(RuntimeError):
    """The value grid would exceed the configured size cap."""


@dataclass(frozen=True)
class ValueGrid:
    delta: float
    half_range: float
    half_count: int  # points are m * delta for |m| <= half_count

    @property
    def count(self) -> int:
        return 2 * self.half_count + 1

    @property
    def points(self) -> np.ndarray:
        return np.arange(-self.half_count, self.half_count + 1) * self.delta

    def value(self, idx: int) -> float:
        """Grid value at table position ``idx`` (0 is the most negative)."""
        return (idx - self.half_count) * self.delta


def _root_n(n: int, metric: ErrorMetric) -> float:
    return 1.0 if metric.is_inf else n ** (1.0 / metric.k)


def build_grid(
    signal: Signal,
    metric: ErrorMetric,
    eps: float,
    *,
    cap: int = DEFAULT_GRID_CAP,
    range_factor: float = 1.0,
) -> ValueGrid:
    """Grid with spacing eps*M/n^(1/k) covering +-2 n^(1/k) M.

    With non-uniform weights the spacing shrinks and the range grows by the
    smallest weight. ``range_factor`` widens the range for experiments.
    """
    if not eps > 0:
        raise ValueError("epsilon must be positive")
    if range_factor < 1:
        raise ValueError("range_factor must be >= 1")
    M = float(np.max(np.abs(signal.values)))
    if M == 0:
        return ValueGrid(1.0, 0.0, 0)
    rn = _root_n(signal.n, metric)
    wmin = float(np.min(signal.weights))
    delta = eps * M * wmin / rn
    V = range_factor * 2.0 * rn * M / wmin
    half = math.ceil(V / delta - 1e-9)
    if 2 * half + 1 > cap:
        raise GridTooLarge(
            f"value grid needs {2 * half + 1} points (cap {cap}); increase epsilon or the cap"
        )
    return ValueGrid(delta, V, half)


# ---------------------------------------------------------------- kernel


@njit(cache=True, fastmath=True)
def _node_table(tl, tr, cap, kind, half, st):
    """Table of a coefficient node from its children's tables.

    Tables are budget-major: ``t[b, v]`` is the best error with at most b
    coefficients in the subtree given incoming grid value v. Candidate
    coefficient values are grid steps m with |m| <= half; both children's
    incoming values v + m and v - m must stay on the grid.
    """
    lnl, R = tl.shape
    lnr = tr.shape[0]
    ln = cap + 1
    out = np.full((ln, R), np.inf)
    ops = 0
    for i in range(lnl):
        for j in range(min(lnr, ln - i)):
            a = tl[i]
            c = tr[j]
            dst = out[i + j]
            for v in range(R):
                t = max(a[v], c[v]) if kind == 0 else a[v] + c[v]
                if t < dst[v]:
                    dst[v] = t
            ops += R
    if ln > 1:
        for i in range(min(lnl, ln - 1)):
            for j in range(min(lnr, ln - 1 - i)):
                a = tl[i]
                c = tr[j]
                dst = out[i + j + 1]
                for v in range(R):
                    lo = max(-half, -v, v - R + 1)
                    hi = min(half, R - 1 - v, v)
                    best = np.inf
                    if kind == 0:
                        for m in range(lo, hi + 1):
                            t = max(a[v + m], c[v - m])
                            best = min(best, t)
                    else:
                        for m in range(lo, hi + 1):
                            best = min(best, a[v + m] + c[v - m])
                    if best < dst[v]:
                        dst[v] = best
                    # m = 0 is the excluded case, counted above
                    ops += hi - lo
    for b in range(1, ln):
        for v in range(R):
            if out[b - 1, v] < out[b, v]:
                out[b, v] = out[b - 1, v]
    st[0] += R
    st[1] += ops
    return out


def _offsets(half: int) -> np.ndarray:
    """Nonzero grid steps ordered by magnitude, positive first."""
    out = []
    for m in range(1, half + 1):
        out += [m, -m]
    return np.array(out, dtype=np.int64)


class _Grid:
    def __init__(self, signal: Signal, metric: ErrorMetric, grid: ValueGrid, B: int):
        self.x = np.asarray(signal.values, dtype=np.float64)
        self.w = np.asarray(signal.weights, dtype=np.float64)
        self.n = len(self.x)
        self.metric = metric
        self.kind = metric.code
        self.grid = grid
        self.B = B
        self.vals = grid.points
        self.offsets = _offsets(grid.half_count)
        self.st = np.zeros(2, dtype=np.int64)
        self.live = 0
        self.peak = 0

    def _hold(self, t: np.ndarray) -> None:
        self.live += t.size
        self.peak = max(self.peak, self.live)

    def release(self, *tables) -> None:
        for t in tables:
            self.live -= t.size

    def table(self, h: int) -> np.ndarray:
        """Post-order table of heap node ``h`` (leaves at ``n + j``); the
        caller owns the returned table and must release it."""
        n = self.n
        if h >= n:
            j = h - n
            e = self.w[j] * np.abs(self.x[j] - self.vals)
            t = (e if self.metric.is_inf else e**self.metric.k).reshape(1, -1)
            self.st[0] += len(self.vals)
            self._hold(t)
            return t
        tl = self.table(2 * h)
        tr = self.table(2 * h + 1)
        cap = min(self.B, coefficient_count(h, n))
        t = _node_table(tl, tr, cap, self.kind, self.grid.half_count, self.st)
        self._hold(t)
        self.release(tl, tr)
        return t

    def stats(self) -> Stats:
        return Stats(int(self.st[0]), int(self.st[1]), int(self.peak))


def solve_node(
    node: int, signal, metric: ErrorMetric, B: int, grid: ValueGrid
) -> np.ndarray:
    """Value-by-budget table (power-domain accumulators) for a coefficient
    node ``>= 1`` or a leaf heap position ``n + j``. Row ``v`` corresponds to
    ``grid.points[v]`` as the incoming ancestor sum."""
    sig = signal if isinstance(signal, Signal) else Signal.from_values(signal)
    if not 1 <= node < 2 * sig.n:
        raise IndexError(f"node {node} out of range")
    return _Grid(sig, metric, grid, B).table(node).T


def _split(tl, tr, vl, vr, b, kind):
    """Best (value, b') for at most ``b`` coefficients split over two
    children rows; smaller b' wins ties."""
    lnl, lnr = tl.shape[0], tr.shape[0]
    b = min(b, lnl + lnr - 2)
    best, arg = np.inf, -1
    for bl in range(max(0, b - lnr + 1), min(b, lnl - 1) + 1):
        a, c = tl[bl, vl], tr[b - bl, vr]
        t = max(a, c) if kind == 0 else a + c
        if t < best:
            best, arg = t, bl
    return best, arg


def unrestricted_synopsis(
    signal,
    metric: ErrorMetric,
    B: int,
    eps: float,
    *,
    grid_cap: int = DEFAULT_GRID_CAP,
    range_factor: float = 1.0,
) -> SynopsisSolution:
    """At most ``B`` grid-valued coefficients minimizing the weighted error.

    The returned solution's ``stats`` cover the error pass and
    ``extract_stats`` the recomputation that recovers the coefficients.
    """
    if B < 0:
        raise ValueError("budget must be non-negative")
    sig = signal if isinstance(signal, Signal) else Signal.from_values(signal)
    x, w, n = sig.values, sig.weights, sig.n
    M = float(np.max(np.abs(x)))
    if B == 0 or M == 0:
        err = finalize(accumulate(x, np.zeros(n), w, metric), metric)
        return SynopsisSolution([], err)
    if np.all(x == x[0]):
        # a single average reproduces a constant signal exactly
        return SynopsisSolution([(0, float(x[0]))], 0.0)

    grid = build_grid(sig, metric, eps, cap=grid_cap, range_factor=range_factor)
    g = _Grid(sig, metric, grid, B)
    zero = grid.half_count

    # node 0: single child (node 1), no ancestors
    t1 = g.table(1)
    prof = t1[:, zero].copy()
    arg = np.full(len(prof), 0, dtype=np.int64)  # 0 = average not kept
    for m in g.offsets:
        row = t1[:, zero + m]
        for b in range(1, len(prof)):
            if row[b - 1] < prof[b]:
                prof[b], arg[b] = row[b - 1], m
    best = prof.min()
    # the smallest budget reaching the optimum is never a padded entry
    b_used = int(np.flatnonzero(prof == best)[0])
    top_stats = g.stats()
    g.release(t1)
    m0 = int(arg[b_used])

    # recompute extraction
    e = _Grid(sig, metric, grid, B)
    picks: list[tuple[int, float]] = []
    if m0 != 0 and b_used > 0:
        picks.append((0, grid.value(zero + m0)))
        _descend(e, 1, zero + m0, b_used - 1, picks)
    else:
        _descend(e, 1, zero, b_used, picks)
    return SynopsisSolution(picks, finalize(best, metric), top_stats, e.stats())


def _descend(g: _Grid, h: int, v: int, b: int, picks: list) -> None:
    n = g.n
    if b <= 0 or h >= n:
        return
    tl = g.table(2 * h)
    tr = g.table(2 * h + 1)
    R = tl.shape[1]
    kind = g.kind
    best, split = _split(tl, tr, v, v, b, kind)
    choice = 0
    for m in g.offsets:
        vl, vr = v + m, v - m
        if not (0 <= vl < R and 0 <= vr < R):
            continue
        t, s = _split(tl, tr, vl, vr, b - 1, kind)
        if t < best:
            best, split, choice = t, s, int(m)
    lnl, lnr = tl.shape[0], tr.shape[0]
    g.release(tl, tr)
    if choice == 0:
        bb = min(b, lnl + lnr - 2)
        _descend(g, 2 * h, v, split, picks)
        _descend(g, 2 * h + 1, v, bb - split, picks)
    else:
        picks.append((h, g.grid.delta * choice))
        bb = min(b - 1, lnl + lnr - 2)
        _descend(g, 2 * h, v + choice, split, picks)
        _descend(g, 2 * h + 1, v - choice, bb - split, picks)
