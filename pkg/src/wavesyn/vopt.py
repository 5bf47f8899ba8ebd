"""Optimal V-Opt histograms (least squared error) in linear space.

The forward pass keeps two DP rows plus, for every prefix end past the
midpoint, where the bucket covering the midpoint starts and ends and how
many buckets precede it. That single bucket splits the problem into two
independent halves, which are solved again the same way.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

FULL_TABLE_LIMIT = 20_000_000  # cells


class TableTooLarge(RuntimeError):
    pass


@dataclass
class Histogram:
    boundaries: list[int]  # 1-based bucket starts followed by n + 1
    reps: list[float]
    sse: float
    cell_evals: int = 0

    @property
    def rmse_norm(self) -> float:
        """Square root of the sse, i.e. the l2 error."""
        return math.sqrt(self.sse)

    @property
    def buckets(self) -> list[tuple[int, int]]:
        """Inclusive 1-based (start, end) of each bucket."""
        b = self.boundaries
        return [(b[k], b[k + 1] - 1) for k in range(len(b) - 1)]


@dataclass
class PrefixSums:
    cum: np.ndarray = field(repr=False)
    cum2: np.ndarray = field(repr=False)

    @classmethod
    def of(cls, values) -> "PrefixSums":
        x = np.asarray(values, dtype=np.float64).ravel()
        z = np.zeros(1)
        return cls(np.concatenate([z, np.cumsum(x)]), np.concatenate([z, np.cumsum(x * x)]))

    @property
    def n(self) -> int:
        return len(self.cum) - 1

    def mean(self, j: int, i: int) -> float:
        return float((self.cum[i] - self.cum[j]) / (i - j))

    def errors_ending_at(self, i: int, lo: int) -> np.ndarray:
        """bucket_error(j, i) for j = lo .. i-1, vectorized."""
        j = np.arange(lo, i)
        s = self.cum[i] - self.cum[lo:i]
        e = (self.cum2[i] - self.cum2[lo:i]) - s * s / (i - j)
        return np.maximum(e, 0.0)


def bucket_error(j: int, i: int, sums: PrefixSums) -> float:
    """Squared deviation from the mean over positions j+1..i (1-based)."""
    if j >= i:
        raise ValueError(f"empty bucket ({j}, {i}]")
    s = sums.cum[i] - sums.cum[j]
    e = (sums.cum2[i] - sums.cum2[j]) - s * s / (i - j)
    return max(float(e), 0.0)


def _check(values, B: int) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64).ravel()
    if B < 1:
        raise ValueError("a histogram needs at least one bucket")
    if len(x) == 0:
        raise ValueError("empty input")
    if not np.all(np.isfinite(x)):
        raise ValueError("values must be finite")
    return x


@njit(cache=True, inline="always")
def _err(cum, cum2, j, i):
    s = cum[i] - cum[j]
    e = (cum2[i] - cum2[j]) - s * s / (i - j)
    return e if e > 0.0 else 0.0


@njit(cache=True)
def _crossing_pass(cum, cum2, lo, hi, B):
    L = hi - lo
    mid = L // 2  # local position that the crossing bucket must contain
    prev = np.full(L + 1, np.inf)
    prev[0] = 0.0
    cur = np.empty(L + 1)
    # crossing state for the previous and current budget, valid for i >= mid
    pa = np.zeros(L + 1, dtype=np.int64)
    pb = np.zeros(L + 1, dtype=np.int64)
    pc = np.zeros(L + 1, dtype=np.int64)
    ca = np.zeros(L + 1, dtype=np.int64)
    cb = np.zeros(L + 1, dtype=np.int64)
    cc = np.zeros(L + 1, dtype=np.int64)
    cells = 0
    for b in range(1, B + 1):
        cur[0] = 0.0
        for i in range(1, L + 1):
            best = np.inf
            arg = 0
            for j in range(i):
                t = prev[j] + _err(cum, cum2, lo + j, lo + i)
                if t < best:
                    best = t
                    arg = j
            cells += i
            cur[i] = best
            if i >= mid:
                if arg < mid:
                    ca[i] = arg + 1
                    cb[i] = i
                    cc[i] = b - 1
                else:
                    ca[i] = pa[arg]
                    cb[i] = pb[arg]
                    cc[i] = pc[arg]
        prev, cur = cur, prev
        pa, ca = ca, pa
        pb, cb = cb, pb
        pc, cc = cc, pc
    return prev[L], pa[L], pb[L], pc[L], cells


@njit(cache=True)
def _full_pass(cum, cum2, n, B):
    E = np.full((B + 1, n + 1), np.inf)
    E[:, 0] = 0.0
    arg = np.zeros((B + 1, n + 1), dtype=np.int64)
    cells = 0
    for b in range(1, B + 1):
        for i in range(1, n + 1):
            best = np.inf
            a = 0
            for j in range(i):
                t = E[b - 1, j] + _err(cum, cum2, j, i)
                if t < best:
                    best = t
                    a = j
            cells += i
            E[b, i] = best
            arg[b, i] = a
    return E, arg, cells


def _crossing(sums: PrefixSums, lo: int, hi: int, B: int):
    """One forward pass over positions lo+1..hi with at most B buckets.

    Returns (sse, A, Bend, C, cells): the bucket covering the midpoint is
    [A, Bend] (local 1-based positions) and C buckets come before it. Ties
    between split points go to the smallest.
    """
    sse, A, Bend, C, cells = _crossing_pass(sums.cum, sums.cum2, lo, hi, B)
    return float(sse), int(A), int(Bend), int(C), int(cells)


def vopt_linear_space(values, B: int) -> Histogram:
    """Optimal histogram with at most ``B`` buckets using O(n) working space."""
    x = _check(values, B)
    sums = PrefixSums.of(x)
    n = len(x)
    starts: list[int] = []
    counter = [0]
    top_sse = _solve_range(sums, 0, n, B, starts, counter)
    starts.sort()
    bounds = [s + 1 for s in starts] + [n + 1]
    reps = [sums.mean(bounds[k] - 1, bounds[k + 1] - 1) for k in range(len(bounds) - 1)]
    return Histogram(bounds, reps, top_sse, counter[0])


def _solve_range(sums, lo, hi, B, starts, counter) -> float:
    """Solve positions lo+1..hi, appending 0-based bucket starts."""
    L = hi - lo
    if L <= 0:
        return 0.0
    if B == 1 or L == 1:
        counter[0] += L
        starts.append(lo)
        return bucket_error(lo, hi, sums)
    sse, A, Bend, C, cells = _crossing(sums, lo, hi, B)
    counter[0] += cells
    starts.append(lo + A - 1)
    _solve_range(sums, lo, lo + A - 1, C, starts, counter)
    _solve_range(sums, lo + Bend, hi, B - C - 1, starts, counter)
    return sse


def forward_pass_cells(n: int, B: int) -> int:
    """Cell evaluations of one forward pass over ``n`` positions."""
    return B * n * (n + 1) // 2


def vopt_full_table(values, B: int, *, limit: int = FULL_TABLE_LIMIT):
    """Reference DP storing every row; returns (Histogram, table).

    ``table[b, i]`` is the least sse of the first ``i`` values with at most
    ``b`` buckets.
    """
    x = _check(values, B)
    n = len(x)
    if (n + 1) * (B + 1) > limit:
        raise TableTooLarge(f"full table needs {(n + 1) * (B + 1)} cells (limit {limit})")
    sums = PrefixSums.of(x)
    E, arg, cells = _full_pass(sums.cum, sums.cum2, n, B)
    starts = []
    i, b = n, B
    while i > 0:
        j = int(arg[b, i])
        starts.append(j)
        i, b = j, b - 1
    starts.reverse()
    bounds = [s + 1 for s in starts] + [n + 1]
    reps = [sums.mean(bounds[k] - 1, bounds[k + 1] - 1) for k in range(len(bounds) - 1)]
    return Histogram(bounds, reps, float(E[B, n]), int(cells)), E
