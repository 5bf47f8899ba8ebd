"""Extended wavelets: one stored header per coefficient shared by the
dimensions it keeps.

Storing ``j`` of an item's ``M`` per-dimension values costs ``h + j`` and
earns the ``j`` largest benefits. The allocation is a group knapsack over
the candidate (item, size) pairs. The forward pass remembers, for every
reachable cost, only the item whose choice first pushed the running cost
past half the budget; that item splits the instance into two independent
subproblems with at most half the budget each.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .haar import check_length, support_size

RULES = ("top_ceil", "exchange")


@dataclass(frozen=True)
class MultiCoefficient:
    index: int
    benefits: tuple[float, ...]  # descending
    dims: tuple[int, ...]  # original dimension of each benefit
    values: tuple[float, ...]  # coefficient value in each of those dimensions

    @property
    def M(self) -> int:
        return len(self.benefits)

    def profit(self, j: int) -> float:
        return float(sum(self.benefits[:j]))


@dataclass(frozen=True)
class ItemSizePair:
    item: int  # position in the item list
    size: int
    profit: float
    cost: int


@dataclass
class ExtendedAllocation:
    entries: list[tuple[int, tuple[int, ...], tuple[float, ...]]]  # (index, dims, values)
    profit: float
    cost: int
    stats: dict = field(default_factory=dict)

    @property
    def sizes(self) -> dict[int, int]:
        return {idx: len(d) for idx, d, _ in self.entries}


def compute_benefits(coeffs, *, normalize: bool = True) -> list[MultiCoefficient]:
    """Per-dimension benefit lists from an ``n x M`` coefficient matrix.

    A benefit is the squared error energy a value removes: with
    ``normalize`` the squared coefficient times its support size (the
    orthonormal-basis energy), otherwise the bare square.
    """
    c = np.asarray(coeffs, dtype=np.float64)
    if c.ndim == 1:
        c = c[:, None]
    n = c.shape[0]
    if normalize:
        check_length(n)
        scale = np.array([support_size(i, n) for i in range(n)], dtype=np.float64)
    else:
        scale = np.ones(n)
    energy = c * c * scale[:, None]
    items = []
    for i in range(n):
        order = sorted(range(c.shape[1]), key=lambda d: (-energy[i, d], d))
        items.append(
            MultiCoefficient(
                i,
                tuple(float(energy[i, d]) for d in order),
                tuple(order),
                tuple(float(c[i, d]) for d in order),
            )
        )
    return items


def items_from_benefits(benefits) -> list[MultiCoefficient]:
    """Items straight from a benefit matrix (rows = items, any order)."""
    b = np.asarray(benefits, dtype=np.float64)
    if b.ndim == 1:
        b = b[:, None]
    if np.any(b < 0):
        raise ValueError("benefits must be non-negative")
    out = []
    for i, row in enumerate(b):
        order = sorted(range(len(row)), key=lambda d: (-row[d], d))
        out.append(MultiCoefficient(i, tuple(float(row[d]) for d in order), tuple(order), (0.0,) * len(row)))
    return out


def _keep_count(rule: str, n: int, B: int, h: int, j: int) -> int:
    if rule == "top_ceil":
        return min(n, math.ceil(B / j))
    # any solution using an item at size j leaves room for at most
    # (B - h - j) // (h + 1) other items, so one of that many + 1 better
    # items at size j is free to swap in
    if h + j > B:
        return 0
    return min(n, (B - h - j) // (h + 1) + 1)


def build_candidates(items, B: int, h: int, *, rule: str = "exchange") -> list[ItemSizePair]:
    """Candidate (item, size) pairs, sorted by item then size.

    ``rule="top_ceil"`` keeps the top ceil(B/j) items for each size j;
    ``rule="exchange"`` keeps the count justified by the swap argument
    above. Pairs with zero profit or cost above ``B`` never help and are
    dropped under either rule.
    """
    if rule not in RULES:
        raise ValueError(f"rule must be one of {RULES}")
    if B < 0 or h < 0:
        raise ValueError("budget and header cost must be non-negative")
    n = len(items)
    M = max((it.M for it in items), default=0)
    keep: set[tuple[int, int]] = set()
    for j in range(1, M + 1):
        k = _keep_count(rule, n, B, h, j)
        ranked = sorted(
            (t for t in range(n) if items[t].M >= j), key=lambda t: (-items[t].profit(j), t)
        )
        keep.update((t, j) for t in ranked[:k])
    out = []
    for t, j in sorted(keep):
        p = items[t].profit(j)
        if p > 0 and h + j <= B:
            out.append(ItemSizePair(t, j, p, h + j))
    return out


def _groups(pairs: list[ItemSizePair]) -> list[list[ItemSizePair]]:
    groups: list[list[ItemSizePair]] = []
    for p in pairs:
        if groups and groups[-1][0].item == p.item:
            groups[-1].append(p)
        else:
            groups.append([p])
    return groups


def _forward(groups, B: int, counter: dict):
    """Exact-cost best profit and crossing record for every cost <= B."""
    P = np.full(B + 1, -np.inf)
    P[0] = 0.0
    # crossing record: group position, size, cost before it; -1 if none
    Qg = np.full(B + 1, -1, dtype=np.int64)
    Qr = np.zeros(B + 1, dtype=np.int64)
    Qb = np.zeros(B + 1, dtype=np.int64)
    for g, opts in enumerate(groups):
        for z in range(B, 0, -1):
            best, pick = P[z], None
            for p in opts:
                if p.cost <= z and P[z - p.cost] + p.profit > best:
                    best, pick = P[z - p.cost] + p.profit, p
            counter["cells"] += len(opts)
            if pick is None:
                continue
            zp = z - pick.cost
            P[z] = best
            if 2 * zp < B <= 2 * z:
                Qg[z], Qr[z], Qb[z] = g, pick.size, zp
            elif 2 * zp >= B:
                Qg[z], Qr[z], Qb[z] = Qg[zp], Qr[zp], Qb[zp]
            else:
                Qg[z] = -1
    counter["peak"] = max(counter["peak"], counter["live"] + 4 * (B + 1))
    return P, Qg, Qr, Qb


def _allocate(groups, B: int, chosen: list, counter: dict) -> float:
    if B <= 0 or not groups:
        return 0.0
    P, Qg, Qr, Qb = _forward(groups, B, counter)
    z = int(np.argmax(P))  # first (smallest) cost reaching the best profit
    best = float(P[z])
    if z == 0:
        return best
    if 2 * z < B:
        _allocate(groups, z, chosen, counter)
        return best
    g, r, bl = int(Qg[z]), int(Qr[z]), int(Qb[z])
    pair = next(p for p in groups[g] if p.size == r)
    chosen.append(pair)
    # one split record per level stays live while the halves are solved
    counter["live"] += 3
    _allocate(groups[:g], bl, chosen, counter)
    _allocate(groups[g + 1 :], z - bl - pair.cost, chosen, counter)
    counter["live"] -= 3
    return best


def solve_extended(items, B: int, h: int = 1, *, rule: str = "exchange") -> ExtendedAllocation:
    """Most profitable allocation with total cost at most ``B``."""
    if B < 0:
        raise ValueError("budget must be non-negative")
    pairs = build_candidates(items, B, h, rule=rule)
    groups = _groups(pairs)
    counter = {"cells": 0, "live": 0, "peak": 0}
    chosen: list[ItemSizePair] = []
    best = _allocate(groups, B, chosen, counter)
    chosen.sort(key=lambda p: p.item)
    entries = []
    for p in chosen:
        it = items[p.item]
        entries.append((it.index, tuple(it.dims[: p.size]), tuple(it.values[: p.size])))
    profit = float(sum(p.profit for p in chosen))
    if not math.isclose(profit, best, rel_tol=1e-9, abs_tol=1e-9):
        raise RuntimeError(f"recovered profit {profit} differs from optimum {best}")
    stats = {"candidates": len(pairs), "dp_cells": counter["cells"], "peak_live_entries": counter["peak"]}
    return ExtendedAllocation(entries, profit, int(sum(p.cost for p in chosen)), stats)
