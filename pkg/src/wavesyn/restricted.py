"""Optimal restricted B-term Haar synopsis.

The error-only pass walks the error tree depth first. A node evaluated under
incoming ancestor value ``v`` asks its children for their error profiles
twice: once with its own coefficient kept (``v + c`` / ``v - c``) and once
without (``v``). Only the node's own output and its children's two profiles
are live per level, which keeps the working set at O(B log(n/B)).

The solution itself is recovered by recomputation: the root decision and the
budget split are read off freshly computed child profiles, then each child is
solved again inside its own subtree with its share of the budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .haar import Signal, coefficient_count, forward
from .metrics import ErrorMetric, finalize

# indices into the int64 stats vector shared with the kernel
VISITS, OPS, PEAK, LIVE = 0, 1, 2, 3


@dataclass
class Stats:
    node_visits: int = 0
    minplus_ops: int = 0
    peak_live_entries: int = 0

    @classmethod
    def from_array(cls, a: np.ndarray) -> "Stats":
        return cls(int(a[VISITS]), int(a[OPS]), int(a[PEAK]))

    def as_dict(self) -> dict:
        return {
            "node_visits": self.node_visits,
            "peak_live_entries": self.peak_live_entries,
            "minplus_ops": self.minplus_ops,
        }


@dataclass
class SynopsisSolution:
    picks: list[tuple[int, float]]
    reported_error: float
    stats: Stats = field(default_factory=Stats)
    extract_stats: Stats = field(default_factory=Stats)

    def coefficient_vector(self, n: int) -> np.ndarray:
        z = np.zeros(n)
        for i, val in self.picks:
            z[i] = val
        return z


# ---------------------------------------------------------------- kernels


@njit(cache=True, inline="always")
def _leaf(x, w, v, kind):
    e = w * abs(x - v)
    if kind <= 1:
        return e
    if kind == 2:
        return e * e
    return e**kind


@njit(cache=True, inline="always")
def _comb(a, b, kind):
    if kind == 0:
        return a if a > b else b
    return a + b


@njit(cache=True)
def _count(h, n):
    if h >= n:
        return 0
    t = 0
    m = n
    while m > 1:
        m >>= 1
        t += 1
    s = 0
    hh = h
    while hh > 1:
        hh >>= 1
        s += 1
    return (1 << (t - s)) - 1


@njit(cache=True, fastmath=True, inline="always")
def _conv_flat(m, o, off, pl, al, pr, ar, ln, kind):
    """m[o + off + i + j] = min(m[...], m[pl + i] (+) m[pr + j]) for in-range
    pairs. All operands live in the flat buffer ``m``; returns pairs touched."""
    ops = 0
    for i in range(al):
        cnt = ln - off - i
        if cnt <= 0:
            break
        if cnt > ar:
            cnt = ar
        a = m[pl + i]
        base = o + off + i
        if kind == 0:
            for j in range(cnt):
                t = a if a > m[pr + j] else m[pr + j]
                m[base + j] = min(m[base + j], t)
        else:
            for j in range(cnt):
                t = a + m[pr + j]
                m[base + j] = min(m[base + j], t)
        ops += cnt
    return ops


@njit(cache=True)
def _conv_bisect(m, o, off, pl, al, pr, ar, ln):
    """l_inf variant: per output budget, bisect for the crossing split."""
    ops = 0
    for b in range(off, ln):
        t = b - off
        lo = t - (ar - 1)
        if lo < 0:
            lo = 0
        hi = t if t < al - 1 else al - 1
        if lo > hi:
            continue
        # m[pl + i] falls and m[pr + t - i] rises with i; the max bottoms out
        # at the first crossing or just before it
        a, z = lo, hi + 1
        while a < z:
            q = (a + z) >> 1
            ops += 1
            if m[pl + q] <= m[pr + t - q]:
                z = q
            else:
                a = q + 1
        best = np.inf
        if a <= hi:
            best = max(m[pl + a], m[pr + t - a])
        if a - 1 >= lo:
            c = max(m[pl + a - 1], m[pr + t - a + 1])
            if c < best:
                best = c
        ops += 2
        if best < m[o + b]:
            m[o + b] = best
    return ops


@njit(cache=True, inline="always")
def _conv(m, o, off, pl, al, pr, ar, ln, kind, fast):
    if fast and kind == 0:
        # bisect only where its worst case beats the scan's exact pair count
        pairs = 0
        for i in range(al):
            cnt = ln - off - i
            if cnt <= 0:
                break
            pairs += cnt if cnt < ar else ar
        r = al if al < ar else ar
        probes = 2
        while r > 0:
            probes += 1
            r >>= 1
        if (ln - off) * probes < pairs:
            return _conv_bisect(m, o, off, pl, al, pr, ar, ln)
    return _conv_flat(m, o, off, pl, al, pr, ar, ln, kind)


@njit(cache=True, inline="always")
def _cummin(m, o, ln):
    for b in range(1, ln):
        m[o + b] = min(m[o + b], m[o + b - 1])


@njit(cache=True)
def _height(h, n):
    """Number of coefficient levels in the subtree of heap node ``h``."""
    t = 0
    q = (_count(h, n) + 1) >> 1
    while q > 0:
        q >>= 1
        t += 1
    return t


@njit(cache=True, fastmath=True, inline="always")
def _conv_sub(m, o, off, pl, pr, al, ar, ln, nd, stride_c, kind):
    """Subset-innermost min-plus: own[b][s] at m[o + b*nd + s], child rows
    L[i][s] at m[pl + i*stride_c + s] (same for R). Vectorizes across s."""
    ops = 0
    for i in range(al):
        cnt = ln - off - i
        if cnt <= 0:
            break
        if cnt > ar:
            cnt = ar
        lb = pl + i * stride_c
        for j in range(cnt):
            ob = o + (off + i + j) * nd
            rb = pr + j * stride_c
            if kind == 0:
                for s in range(nd):
                    t = m[lb + s] if m[lb + s] > m[rb + s] else m[rb + s]
                    m[ob + s] = min(m[ob + s], t)
            else:
                for s in range(nd):
                    t = m[lb + s] + m[rb + s]
                    m[ob + s] = min(m[ob + s], t)
        ops += cnt * nd
    return ops


@njit(cache=True)
def _block(x, w, coeffs, kind, r, v, cap, fast, m, dst, st, vb0, tb0, tsz):
    """Profile of a short subtree rooted at ``r`` under ``v``, into m[dst:].

    Evaluates every (node, ancestor-subset) pair inside the subtree level by
    level; visits and pair evaluations are exactly those of the
    node-at-a-time recursion, only batched. Deep levels, where a node sees
    many subsets but short profiles, are stored subset-innermost; shallow
    levels budget-innermost. Scratch: incoming values at m[vb0:], three
    tables of ``tsz`` entries at m[tb0:].
    """
    n = x.shape[0]
    kr = _height(r, n)
    live = st[LIVE]
    if cap == 0:
        lo = (r << kr) - n
        acc = _leaf(x[lo], w[lo], v, kind)
        for j in range(lo + 1, lo + (1 << kr)):
            acc = _comb(acc, _leaf(x[j], w[j], v, kind), kind)
        m[dst] = acc
        st[VISITS] += (2 << kr) - 1
        st[OPS] += (1 << kr) - 1
        if live + 3 > st[PEAK]:
            st[PEAK] = live + 3
        return 1

    # incoming values per depth: 2**d nodes x 2**d subsets; bit e of a subset
    # marks the in-block ancestor at depth e as kept
    m[vb0] = v
    vb = vb0
    for d in range(kr - 1):
        nd = 1 << d
        nb = vb + nd * nd
        nsub = nd << 1
        for k in range(nd):
            c = coeffs[(r << d) + k]
            lft = nb + (2 * k) * nsub
            rgt = lft + nsub
            for s in range(nd):
                u = m[vb + k * nd + s]
                m[lft + s] = u
                m[lft + s + nd] = u + c
                m[rgt + s] = u
                m[rgt + s + nd] = u - c
        vb = nb

    # bottom coefficient level, leaves evaluated on the fly; layout [k][b][s]
    # when a deeper level will use it, [k][s][b] otherwise
    d = kr - 1
    nd = 1 << d
    tc = tb0
    to = tb0 + tsz
    tt = tb0 + 2 * tsz
    for k in range(nd):
        h = (r << d) + k
        c = coeffs[h]
        j = 2 * h - n
        x0 = x[j]
        x1 = x[j + 1]
        w0 = w[j]
        w1 = w[j + 1]
        row = vb + k * nd
        out = tc + k * nd * 2
        for s in range(nd):
            u = m[row + s]
            exc = _comb(_leaf(x0, w0, u, kind), _leaf(x1, w1, u, kind), kind)
            inc = _comb(_leaf(x0, w0, u + c, kind), _leaf(x1, w1, u - c, kind), kind)
            if kr >= 3:
                m[out + s] = exc
                m[out + nd + s] = inc if inc < exc else exc
            else:
                m[out + 2 * s] = exc
                m[out + 2 * s + 1] = inc if inc < exc else exc
    size_c = nd * nd * 2
    visits = nd * nd * 5
    ops = nd * nd * 2
    peak = live + size_c + 2
    ln_c = 2
    sub_major = kr >= 3

    for d in range(kr - 2, -1, -1):
        nd = 1 << d
        nsub = nd << 1
        cnt = (2 << (kr - 1 - d)) - 1
        ln = (cap if cap < cnt else cnt) + 1
        if nd >= 4:
            # children and own both [k][b][s]
            cstride = ln_c * nsub
            for k in range(nd):
                lrow = tc + (2 * k) * cstride
                rrow = lrow + cstride
                o = to + k * ln * nd
                if ln == 4 and ln_c == 2 and kind != 0:
                    # two-level subtree unrolled; same pair set as _conv_sub
                    for s in range(nd):
                        li0 = m[lrow + nd + s]
                        li1 = m[lrow + nsub + nd + s]
                        ri0 = m[rrow + nd + s]
                        ri1 = m[rrow + nsub + nd + s]
                        le0 = m[lrow + s]
                        le1 = m[lrow + nsub + s]
                        re0 = m[rrow + s]
                        re1 = m[rrow + nsub + s]
                        e0 = le0 + re0
                        b1 = min(min(li0 + ri0, le0 + re1), min(le1 + re0, e0))
                        e2 = le1 + re1
                        b2 = min(min(li0 + ri1, li1 + ri0), min(e2, b1))
                        b3 = min(li1 + ri1, b2)
                        m[o + s] = e0
                        m[o + nd + s] = b1
                        m[o + 2 * nd + s] = b2
                        m[o + 3 * nd + s] = b3
                    ops += 8 * nd
                    continue
                for q in range(ln * nd):
                    m[o + q] = np.inf
                ops += _conv_sub(m, o, 1, lrow + nd, rrow + nd, ln_c, ln_c, ln, nd, nsub, kind)
                ops += _conv_sub(m, o, 0, lrow, rrow, ln_c, ln_c, ln, nd, nsub, kind)
                for b in range(1, ln):
                    for s in range(nd):
                        m[o + b * nd + s] = min(m[o + b * nd + s], m[o + (b - 1) * nd + s])
        else:
            if sub_major:
                # re-lay children as [k][s][b], one child table at a time
                slab = ln_c * nsub
                for k in range(2 * nd):
                    src = tc + k * slab
                    for q in range(slab):
                        m[tt + q] = m[src + q]
                    for b in range(ln_c):
                        for s in range(nsub):
                            m[src + s * ln_c + b] = m[tt + b * nsub + s]
                if live + size_c + slab > peak:
                    peak = live + size_c + slab
                sub_major = False
            for k in range(nd):
                lrow = tc + (2 * k) * nsub * ln_c
                rrow = lrow + nsub * ln_c
                for s in range(nd):
                    o = to + (k * nd + s) * ln
                    for b in range(ln):
                        m[o + b] = np.inf
                    ops += _conv(m, o, 1, lrow + (s + nd) * ln_c, ln_c, rrow + (s + nd) * ln_c, ln_c, ln, kind, fast)
                    ops += _conv(m, o, 0, lrow + s * ln_c, ln_c, rrow + s * ln_c, ln_c, ln, kind, fast)
                    _cummin(m, o, ln)
        visits += nd * nd
        size_o = nd * nd * ln
        if live + size_c + size_o > peak:
            peak = live + size_c + size_o
        tc, to = to, tc
        size_c = size_o
        ln_c = ln
    # a lone root row is the same in either layout
    for b in range(ln_c):
        m[dst + b] = m[tc + b]
    st[VISITS] += visits
    st[OPS] += ops
    if peak > st[PEAK]:
        st[PEAK] = peak
    return ln_c


def _full_block_source(K: int, use_max: bool) -> str:
    """Source of :func:`_block` specialized to a full-budget subtree of
    ``K`` coefficient levels.

    When the budget cap does not truncate any profile inside the batch,
    every loop bound is a constant; writing them as literals lets the
    compiler unroll and vectorize the short loops. Visits, pair counts and
    the peak are the same as the generic kernel's.
    """
    comb = "max({a}, {b})" if use_max else "{a} + {b}"
    out = []

    def emit(depth, text):
        out.append("    " * depth + text)

    emit(0, f"def _full_block_{K}_{'max' if use_max else 'sum'}(x, w, coeffs, kind, r, v, m, dst, st, vb0, tb0, tsz):")
    emit(1, "n = x.shape[0]")
    emit(1, "m[vb0] = v")
    emit(1, "vb = vb0")
    for d in range(K - 1):
        nd = 1 << d
        emit(1, f"nb = vb + {nd * nd}")
        emit(1, f"for k in range({nd}):")
        emit(2, f"c = coeffs[(r << {d}) + k]")
        emit(2, f"lft = nb + k * {4 * nd}")
        emit(2, f"rgt = lft + {2 * nd}")
        emit(2, f"for s in range({nd}):")
        emit(3, f"u = m[vb + k * {nd} + s]")
        emit(3, "m[lft + s] = u")
        emit(3, f"m[lft + s + {nd}] = u + c")
        emit(3, "m[rgt + s] = u")
        emit(3, f"m[rgt + s + {nd}] = u - c")
        emit(1, "vb = nb")

    nd = 1 << (K - 1)
    sub_major = K >= 3
    emit(1, "tc = tb0")
    emit(1, "to = tb0 + tsz")
    emit(1, "tt = tb0 + 2 * tsz")
    emit(1, f"for k in range({nd}):")
    emit(2, f"h = (r << {K - 1}) + k")
    emit(2, "c = coeffs[h]")
    emit(2, "j = 2 * h - n")
    emit(2, "x0 = x[j]")
    emit(2, "x1 = x[j + 1]")
    emit(2, "w0 = w[j]")
    emit(2, "w1 = w[j + 1]")
    emit(2, f"row = vb + k * {nd}")
    emit(2, f"o = tc + k * {2 * nd}")
    emit(2, f"for s in range({nd}):")
    emit(3, "u = m[row + s]")
    emit(3, "e = " + comb.format(a="_leaf(x0, w0, u, kind)", b="_leaf(x1, w1, u, kind)"))
    emit(3, "i = " + comb.format(a="_leaf(x0, w0, u + c, kind)", b="_leaf(x1, w1, u - c, kind)"))
    if sub_major:
        emit(3, "m[o + s] = e")
        emit(3, f"m[o + {nd} + s] = min(i, e)")
    else:
        emit(3, "m[o + 2 * s] = e")
        emit(3, "m[o + 2 * s + 1] = min(i, e)")
    size_c = nd * nd * 2
    visits = nd * nd * 5
    ops = nd * nd * 2
    peak = size_c + 2
    ln_c = 2

    for d in range(K - 2, -1, -1):
        nd = 1 << d
        nsub = nd << 1
        ln = 2 * ln_c
        if nd >= 4:
            cs = ln_c * nsub
            emit(1, f"for k in range({nd}):")
            emit(2, f"lrow = tc + k * {2 * cs}")
            emit(2, f"rrow = lrow + {cs}")
            emit(2, f"o = to + k * {ln * nd}")
            emit(2, f"for q in range({ln * nd}):")
            emit(3, "m[o + q] = np.inf")
            emit(2, f"for i in range({ln_c}):")
            emit(3, f"for j in range({ln_c}):")
            emit(4, f"oi = o + (i + j + 1) * {nd}")
            emit(4, f"oe = o + (i + j) * {nd}")
            emit(4, f"li = lrow + i * {nsub}")
            emit(4, f"ri = rrow + j * {nsub}")
            emit(4, f"for s in range({nd}):")
            emit(5, "t = " + comb.format(a=f"m[li + {nd} + s]", b=f"m[ri + {nd} + s]"))
            emit(5, "m[oi + s] = min(m[oi + s], t)")
            emit(5, "t = " + comb.format(a="m[li + s]", b="m[ri + s]"))
            emit(5, "m[oe + s] = min(m[oe + s], t)")
            emit(2, f"for b in range(1, {ln}):")
            emit(3, f"for s in range({nd}):")
            emit(4, f"m[o + b * {nd} + s] = min(m[o + b * {nd} + s], m[o + (b - 1) * {nd} + s])")
        else:
            if sub_major:
                slab = ln_c * nsub
                emit(1, f"for k in range({2 * nd}):")
                emit(2, f"src = tc + k * {slab}")
                emit(2, f"for q in range({slab}):")
                emit(3, "m[tt + q] = m[src + q]")
                emit(2, f"for b in range({ln_c}):")
                emit(3, f"for s in range({nsub}):")
                emit(4, f"m[src + s * {ln_c} + b] = m[tt + b * {nsub} + s]")
                peak = max(peak, size_c + slab)
                sub_major = False
            emit(1, f"for k in range({nd}):")
            emit(2, f"lrow = tc + k * {2 * nsub * ln_c}")
            emit(2, f"rrow = lrow + {nsub * ln_c}")
            emit(2, f"for s in range({nd}):")
            emit(3, f"o = to + (k * {nd} + s) * {ln}")
            emit(3, f"for b in range({ln}):")
            emit(4, "m[o + b] = np.inf")
            emit(3, f"li = lrow + (s + {nd}) * {ln_c}")
            emit(3, f"ri = rrow + (s + {nd}) * {ln_c}")
            emit(3, f"le = lrow + s * {ln_c}")
            emit(3, f"re = rrow + s * {ln_c}")
            emit(3, f"for i in range({ln_c}):")
            emit(4, "a = m[li + i]")
            emit(4, "z = m[le + i]")
            emit(4, f"for j in range({ln_c}):")
            emit(5, "t = " + comb.format(a="a", b="m[ri + j]"))
            emit(5, "m[o + i + j + 1] = min(m[o + i + j + 1], t)")
            emit(5, "t = " + comb.format(a="z", b="m[re + j]"))
            emit(5, "m[o + i + j] = min(m[o + i + j], t)")
            emit(3, f"for b in range(1, {ln}):")
            emit(4, "m[o + b] = min(m[o + b], m[o + b - 1])")
        ops += nd * nd * 2 * ln_c * ln_c
        visits += nd * nd
        size_o = nd * nd * ln
        peak = max(peak, size_c + size_o)
        emit(1, "tc, to = to, tc")
        size_c = size_o
        ln_c = ln
    emit(1, f"for b in range({ln_c}):")
    emit(2, "m[dst + b] = m[tc + b]")
    emit(1, f"st[VISITS] += {visits}")
    emit(1, f"st[OPS] += {ops}")
    emit(1, f"st[PEAK] = max(st[PEAK], st[LIVE] + {peak})")
    emit(1, f"return {ln_c}")
    return "\n".join(out) + "\n"


def _compile_full_blocks():
    env = {"np": np, "_leaf": _leaf, "VISITS": VISITS, "OPS": OPS, "PEAK": PEAK, "LIVE": LIVE}
    made = []
    for K in (3, 4, 5):
        for use_max in (True, False):
            src = _full_block_source(K, use_max)
            exec(compile(src, f"<full block {K}>", "exec"), env)
            name = f"_full_block_{K}_{'max' if use_max else 'sum'}"
            made.append(njit(fastmath=True)(env[name]))
    return made


(_fb3m, _fb3s, _fb4m, _fb4s, _fb5m, _fb5s) = _compile_full_blocks()


@njit(inline="always")
def _run_block(x, w, coeffs, kind, r, v, cap, fast, m, dst, st, vb0, tb0, tsz):
    """Batched subtree profile: the size-specialized kernel when the budget
    leaves the batch untruncated, the generic one otherwise."""
    kr = _height(r, x.shape[0])
    if not fast and kr >= 3 and cap >= (1 << kr) - 1:
        if kind == 0:
            if kr == 3:
                return _fb3m(x, w, coeffs, kind, r, v, m, dst, st, vb0, tb0, tsz)
            if kr == 4:
                return _fb4m(x, w, coeffs, kind, r, v, m, dst, st, vb0, tb0, tsz)
            if kr == 5:
                return _fb5m(x, w, coeffs, kind, r, v, m, dst, st, vb0, tb0, tsz)
        else:
            if kr == 3:
                return _fb3s(x, w, coeffs, kind, r, v, m, dst, st, vb0, tb0, tsz)
            if kr == 4:
                return _fb4s(x, w, coeffs, kind, r, v, m, dst, st, vb0, tb0, tsz)
            if kr == 5:
                return _fb5s(x, w, coeffs, kind, r, v, m, dst, st, vb0, tb0, tsz)
    return _block(x, w, coeffs, kind, r, v, cap, fast, m, dst, st, vb0, tb0, tsz)



@njit(cache=True)
def _solve(x, w, coeffs, kind, h0, v0, cap, fast, block, st, out):
    """Profile of heap node ``h0`` (>= 1) under incoming value ``v0``.

    Writes ``min(cap, count(h0)) + 1`` entries to ``out`` and returns that
    length. Subtrees with at most ``block`` coefficient levels are handed to
    :func:`_block`. ``st`` accumulates visits, min-plus ops and the peak.
    """
    n = x.shape[0]
    if h0 >= n:
        j = h0 - n
        out[0] = _leaf(x[j], w[j], v0, kind)
        st[VISITS] += 1
        if st[LIVE] + 1 > st[PEAK]:
            st[PEAK] = st[LIVE] + 1
        return 1
    top_cap = min(cap, _count(h0, n))
    levels = _height(h0, n)
    kb = block if block < levels else levels
    stride = top_cap + 1
    nframe = (levels + 1) * 2 * stride
    tsz = 1 << (2 * kb - 1)
    vb0 = nframe
    tb0 = vb0 + (1 << (2 * kb))
    m = np.empty(tb0 + 3 * tsz)
    if levels <= kb:
        ln = _run_block(x, w, coeffs, kind, h0, v0, top_cap, fast, m, 0, st, vb0, tb0, tsz)
        for b in range(ln):
            out[b] = m[b]
        return ln

    fh = np.empty(levels, np.int64)
    fv = np.empty(levels)
    fph = np.zeros(levels, np.int64)
    fcap = np.empty(levels, np.int64)
    fslot = np.zeros(levels, np.int64)
    fcnt = np.empty(levels, np.int64)
    clen = np.zeros((levels + 1, 2), np.int64)

    d = 0
    fh[0] = h0
    fv[0] = v0
    fcap[0] = top_cap
    fcnt[0] = _count(h0, n)
    st[LIVE] += top_cap + 1
    st[VISITS] += 1
    if st[LIVE] > st[PEAK]:
        st[PEAK] = st[LIVE]

    while d >= 0:
        ph = fph[d]
        h = fh[d]
        o = (2 * d + fslot[d]) * stride
        ln = fcap[d] + 1
        if ph == 0:
            for b in range(ln):
                m[o + b] = np.inf
            if fcap[d] == 0:
                fph[d] = 2
                ph = 2
        if ph == 2 or ph == 4:
            pl = (2 * d + 2) * stride
            pr = pl + stride
            al = clen[d + 1, 0]
            ar = clen[d + 1, 1]
            if ph == 2 and fcap[d] >= 1:
                st[OPS] += _conv(m, o, 1, pl, al, pr, ar, ln, kind, fast)
                st[LIVE] -= al + ar
            elif ph == 4:
                st[OPS] += _conv(m, o, 0, pl, al, pr, ar, ln, kind, fast)
                _cummin(m, o, ln)
                st[LIVE] -= al + ar
                if d > 0:
                    clen[d, fslot[d]] = ln
                    fph[d - 1] += 1
                d -= 1
                continue
        ph = fph[d]
        slot = ph & 1
        child = 2 * h + slot
        c = coeffs[h]
        if ph == 0:
            cv = fv[d] + c
        elif ph == 1:
            cv = fv[d] - c
        else:
            cv = fv[d]
        ccnt = (fcnt[d] - 1) >> 1
        ccap = fcap[d] if fcap[d] < ccnt else ccnt
        if levels - d - 1 <= kb:
            dst = (2 * d + 2 + slot) * stride
            ln_c = _run_block(x, w, coeffs, kind, child, cv, ccap, fast, m, dst, st, vb0, tb0, tsz)
            clen[d + 1, slot] = ln_c
            st[LIVE] += ln_c
            fph[d] += 1
        else:
            d += 1
            fh[d] = child
            fv[d] = cv
            fph[d] = 0
            fcap[d] = ccap
            fcnt[d] = ccnt
            fslot[d] = slot
            st[LIVE] += ccap + 1
            st[VISITS] += 1
            if st[LIVE] > st[PEAK]:
                st[PEAK] = st[LIVE]

    for b in range(top_cap + 1):
        out[b] = m[b]
    st[LIVE] -= top_cap + 1
    return top_cap + 1


def block_height(n: int, B: int) -> int:
    """Coefficient levels batched at the bottom of the tree.

    Batching trades live entries for speed; the height is the largest that
    keeps the batch well inside the B*log(n/B) working-set budget.
    """
    budget = 2 * B * max(1.0, math.log2(max(n, 2) / max(B, 1)))
    k = 1
    while k < 5 and 3 * 4**k < budget:
        k += 1
    return k


# ------------------------------------------------------------ python layer


class _Problem:
    def __init__(self, signal: Signal, metric: ErrorMetric, B: int, fast_linf: bool = False):
        self.signal = signal
        self.metric = metric
        self.x = np.ascontiguousarray(signal.values, dtype=np.float64)
        self.w = np.ascontiguousarray(signal.weights, dtype=np.float64)
        self.coeffs = forward(self.x)
        self.kind = metric.code
        self.fast = bool(fast_linf and metric.is_inf)
        self.n = len(self.x)
        self.block = block_height(self.n, B)

    def profile(self, h: int, v: float, cap: int, st: np.ndarray) -> np.ndarray:
        """Profile of heap node ``h`` (leaves are ``n + j``); ``st[LIVE]`` is
        raised by the returned profile's length, the caller releases it."""
        cap = max(0, min(cap, coefficient_count(h, self.n)))
        out = np.empty(cap + 1)
        ln = _solve(
            self.x, self.w, self.coeffs, self.kind, h, float(v), cap, self.fast, self.block, st, out
        )
        st[LIVE] += ln
        st[PEAK] = max(st[PEAK], st[LIVE])
        return out[:ln]

    def root_profile(self, B: int, st: np.ndarray) -> np.ndarray:
        """Profile of the extra parent node 0 (single child: node 1)."""
        n = self.n
        cap = min(B, n)
        ln = cap + 1
        prof = np.full(ln, np.inf)
        st[VISITS] += 1
        st[LIVE] += ln
        st[PEAK] = max(st[PEAK], st[LIVE])
        c0 = self.coeffs[0]
        if cap >= 1:
            p = self.profile(1, 0.0 + c0, min(cap, n - 1), st)
            prof[1:] = p[: ln - 1]
            st[OPS] += ln - 1
            st[LIVE] -= len(p)
        p = self.profile(1, 0.0, min(cap, n - 1), st)
        padded = p[np.minimum(np.arange(ln), len(p) - 1)]
        prof = np.minimum(prof, padded)
        st[OPS] += min(ln, len(p))
        st[LIVE] -= len(p) + ln
        return prof


def _new_stats() -> np.ndarray:
    return np.zeros(4, dtype=np.int64)


def _as_signal(signal) -> Signal:
    return signal if isinstance(signal, Signal) else Signal.from_values(signal)


def solve_subtree(
    node: int,
    v: float,
    signal,
    metric: ErrorMetric,
    B: int,
    *,
    fast_linf: bool = False,
    stats: np.ndarray | None = None,
) -> np.ndarray:
    """Error profile (power-domain accumulators) of ``node`` under ``v``.

    ``node`` is a coefficient index (0 for the overall average) or a leaf heap
    position ``n + j``. Entry ``b`` is the least subtree error keeping at most
    ``b`` coefficients at or below ``node``. For node 0, ``v`` must be 0.
    """
    if B < 0:
        raise ValueError("budget must be non-negative")
    prob = _Problem(_as_signal(signal), metric, B, fast_linf)
    st = _new_stats() if stats is None else stats
    if node == 0:
        if v != 0:
            raise ValueError("node 0 has no ancestors; incoming value must be 0")
        return prob.root_profile(B, st)
    if not 1 <= node < 2 * prob.n:
        raise IndexError(f"node {node} out of range")
    out = prob.profile(node, v, B, st)
    st[LIVE] -= len(out)
    return out


def restricted_error(
    signal, metric: ErrorMetric, B: int, *, fast_linf: bool = False, return_stats: bool = False
):
    """Optimal error keeping at most ``B`` coefficients of the transform.

    Returns ``(error, budget_used)`` where ``budget_used`` is the smallest
    budget reaching the optimum; with ``return_stats`` a :class:`Stats` is
    appended.
    """
    if B < 0:
        raise ValueError("budget must be non-negative")
    prob = _Problem(_as_signal(signal), metric, B, fast_linf)
    st = _new_stats()
    prof = prob.root_profile(B, st)
    best = prof[-1]
    used = int(np.flatnonzero(prof == best)[0])
    res = (finalize(best, metric), used)
    if return_stats:
        return res + (Stats.from_array(st),)
    return res


def _best_split(pl, pr, b, metric: ErrorMetric):
    """Smallest-b' argmin of pl[b'] (+) pr[b - b']; (inf, -1) if none fits."""
    lo, hi = max(0, b - (len(pr) - 1)), min(b, len(pl) - 1)
    best, arg = np.inf, -1
    for bl in range(lo, hi + 1):
        c = max(pl[bl], pr[b - bl]) if metric.is_inf else pl[bl] + pr[b - bl]
        if c < best:
            best, arg = c, bl
    return best, arg


def extract_restricted(signal, metric: ErrorMetric, B: int, *, fast_linf: bool = False) -> SynopsisSolution:
    """Optimal restricted synopsis with its coefficients.

    Picks are emitted in pre-order: a node's own coefficient, then all of its
    left subtree, then its right subtree.
    """
    if B < 0:
        raise ValueError("budget must be non-negative")
    sig = _as_signal(signal)
    prob = _Problem(sig, metric, B, fast_linf)
    n = prob.n
    top = _new_stats()
    prof = prob.root_profile(B, top)
    best = prof[-1]
    b = int(np.flatnonzero(prof == best)[0])

    st = _new_stats()
    picks: list[tuple[int, float]] = []
    c0 = prob.coeffs[0]
    if b > 0:
        p_inc = prob.profile(1, 0.0 + c0, min(b - 1, n - 1), st)
        p_exc = prob.profile(1, 0.0, min(b, n - 1), st)
        st[LIVE] -= len(p_inc) + len(p_exc)
        exc_val = p_exc[min(b, len(p_exc) - 1)]
        if p_inc[min(b - 1, len(p_inc) - 1)] < exc_val:
            picks.append((0, float(c0)))
            _descend(prob, 1, 0.0 + c0, b - 1, picks, st)
        else:
            _descend(prob, 1, 0.0, b, picks, st)

    sol = SynopsisSolution(picks, finalize(best, metric), Stats.from_array(top), Stats.from_array(st))
    return sol


def _descend(prob: _Problem, h: int, v: float, b: int, picks: list, st: np.ndarray) -> None:
    n = prob.n
    if b <= 0 or h >= n:
        return
    c = prob.coeffs[h]
    metric = prob.metric
    cnt_child = coefficient_count(2 * h, n)
    b = min(b, 2 * cnt_child + 1)
    st[VISITS] += 1
    pl_e = prob.profile(2 * h, v, b, st)
    pr_e = prob.profile(2 * h + 1, v, b, st)
    exc_b = min(b, 2 * cnt_child)  # padding: beyond both subtrees nothing improves
    exc_val, exc_split = _best_split(pl_e, pr_e, exc_b, metric)
    pl_i = prob.profile(2 * h, v + c, b - 1, st)
    pr_i = prob.profile(2 * h + 1, v - c, b - 1, st)
    inc_val, inc_split = _best_split(pl_i, pr_i, b - 1, metric)
    st[LIVE] -= len(pl_e) + len(pr_e) + len(pl_i) + len(pr_i)
    if inc_val < exc_val:
        picks.append((h, float(c)))
        _descend(prob, 2 * h, v + c, inc_split, picks, st)
        _descend(prob, 2 * h + 1, v - c, b - 1 - inc_split, picks, st)
    else:
        _descend(prob, 2 * h, v, exc_split, picks, st)
        _descend(prob, 2 * h + 1, v, exc_b - exc_split, picks, st)


def node_visit_count(n: int) -> int:
    """Closed-form visit count of a full solve: sum over nodes of 2**ancestors."""
    total = 1  # node 0
    for i in range(1, n):
        total += 1 << (i.bit_length())  # node i has bit_length(i) ancestors incl. node 0
    total += n * (1 << (n.bit_length()))  # leaves
    return total
