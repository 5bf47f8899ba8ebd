import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from wavesyn.haar import Signal, forward, inverse
from wavesyn.metrics import L1, L2, LINF, ErrorMetric, accumulate, finalize, norm
from wavesyn.oracles import brute_restricted, brute_restricted_profile
from wavesyn.restricted import (
    _Problem,
    block_height,
    extract_restricted,
    node_visit_count,
    restricted_error,
    solve_subtree,
)

EXAMPLE = [1, 2, 3, 7]
EXAMPLE_W = [0.5, 0.5, 1.5, 1.5]
METRICS = [L1, L2, ErrorMetric(3), LINF]


def _evaluate(sol, sig, metric):
    return norm(sig.values, inverse(sol.coefficient_vector(sig.n)), sig.weights, metric)


def test_single_coefficient_examples():
    assert restricted_error(EXAMPLE, L1, 1) == (7.5, 1)
    assert restricted_error(EXAMPLE, LINF, 1)[0] == 3.75
    e, _ = restricted_error(Signal.from_values(EXAMPLE, EXAMPLE_W), L2, 1)
    assert e == pytest.approx(5.78, abs=0.01)


def test_zero_budget_is_signal_norm():
    for m in METRICS:
        sig = Signal.from_values([3, -1, 4, 1, -5, 9, 2, -6], np.arange(1, 9))
        e, used = restricted_error(sig, m, 0)
        assert used == 0
        assert e == pytest.approx(norm(sig.values, 0, sig.weights, m))


@pytest.mark.parametrize("m", METRICS)
def test_full_budget_is_exact(m):
    x = np.random.default_rng(0).normal(size=16)
    assert restricted_error(x, m, 16)[0] == pytest.approx(0, abs=1e-12)
    assert restricted_error(x, m, 40)[0] == pytest.approx(0, abs=1e-12)


def test_extract_examples():
    sol = extract_restricted(EXAMPLE, L1, 1)
    assert sol.picks == [(0, 3.25)]
    assert sol.reported_error == 7.5
    sol = extract_restricted([2.5] * 8, L2, 1)
    assert sol.picks == [(0, 2.5)] and sol.reported_error == 0
    sol = extract_restricted(EXAMPLE, L2, 4)
    assert sol.reported_error == 0
    assert sol.picks == [(0, 3.25), (1, -1.75), (2, -0.5), (3, -2.0)]


def test_root_profile_is_nonincreasing(rng):
    for m in METRICS:
        x = rng.normal(size=32)
        prof = solve_subtree(0, 0.0, x, m, 32)
        assert np.all(np.diff(prof) <= 0)
        assert prof[0] == pytest.approx(accumulate(x, 0, np.ones(32), m))
        assert prof[-1] == pytest.approx(0, abs=1e-12)


def test_subtree_profile_matches_direct_enumeration(rng):
    # node 2 of n=8 covers leaves 0..3 and coefficients 2, 4, 5
    x = rng.normal(size=8)
    c = forward(x)
    v = 0.7
    for m in (L1, LINF):
        prof = solve_subtree(2, v, x, m, 3)
        best = np.full(4, np.inf)
        for mask in range(8):
            keep = [i for bit, i in enumerate((2, 4, 5)) if mask >> bit & 1]
            z = np.zeros(8)
            z[keep] = c[keep]
            approx = inverse(z)[:4] + v
            e = np.abs(x[:4] - approx)
            a = e.max() if m.is_inf else e.sum()
            best[len(keep)] = min(best[len(keep)], a)
        assert prof == pytest.approx(np.minimum.accumulate(best), abs=1e-12)


def test_leaf_profile(rng):
    x = rng.normal(size=4)
    assert solve_subtree(5, 0.25, x, L2, 3).tolist() == [pytest.approx((x[1] - 0.25) ** 2)]


@pytest.mark.parametrize("n", [4, 8, 16])
def test_matches_exhaustive_search(n, rng):
    for trial in range(12):
        w = None if trial % 2 == 0 else rng.uniform(0.1, 3, size=n)
        sig = Signal.from_values(rng.normal(size=n) * 4, w)
        for m in METRICS:
            for B in range(n + 1):
                e, _ = restricted_error(sig, m, B)
                ref, _ = brute_restricted(sig, m, B)
                assert e == pytest.approx(ref, rel=1e-9, abs=1e-9), (m, B)


@given(
    arrays(np.float64, 8, elements=st.integers(-3, 3).map(float)),
    st.sampled_from(METRICS),
    st.integers(0, 8),
)
def test_ties_and_duplicates(x, m, B):
    # small integer signals are full of ties and zero coefficients
    sig = Signal.from_values(x)
    e, _ = restricted_error(sig, m, B)
    assert e == pytest.approx(brute_restricted(sig, m, B)[0], abs=1e-9)
    sol = extract_restricted(sig, m, B)
    assert len(sol.picks) <= B
    assert _evaluate(sol, sig, m) == pytest.approx(sol.reported_error, abs=1e-9)


@pytest.mark.parametrize("m", METRICS)
def test_extraction_reproduces_reported_error(m, rng):
    for n in (2, 8, 32, 64):
        for B in (1, 2, 5, n // 2, n):
            sig = Signal.from_values(rng.normal(size=n), rng.uniform(0.2, 2, size=n))
            e, used = restricted_error(sig, m, B)
            sol = extract_restricted(sig, m, B)
            assert sol.reported_error == pytest.approx(e, rel=1e-9, abs=1e-9)
            assert len(sol.picks) == used
            assert _evaluate(sol, sig, m) == pytest.approx(e, rel=1e-9, abs=1e-9)
            c = forward(sig.values)
            assert all(v == c[i] for i, v in sol.picks)


def test_picks_follow_tree_preorder(rng):
    x = rng.normal(size=64)
    sol = extract_restricted(x, L2, 20)
    idx = [i for i, _ in sol.picks]

    def preorder(i, n):
        if i >= n:
            return []
        return [i] + preorder(2 * i, n) + preorder(2 * i + 1, n)

    order = [0] + preorder(1, 64)
    assert idx == [i for i in order if i in set(idx)]


@pytest.mark.parametrize("n", [2, 4, 8, 16, 32])
def test_visit_count_closed_form(n, rng):
    expected = 1 + sum(2 ** i.bit_length() for i in range(1, n)) + n * 2 ** n.bit_length()
    assert node_visit_count(n) == expected
    for B in range(1, n + 1):
        _, _, st_ = restricted_error(rng.normal(size=n), L2, B, return_stats=True)
        assert st_.node_visits == expected


def test_peak_live_entries_within_bound(rng):
    for lg in range(2, 12):
        n = 2**lg
        for B in (1, 2, 3, 5, 8, 16, 33, 64):
            if B > n // 2:
                continue
            _, _, st_ = restricted_error(rng.normal(size=n), L1, B, return_stats=True)
            assert st_.peak_live_entries <= 4 * B * math.log2(n / B) + 4 * B


def test_block_height_limits():
    assert block_height(4, 1) == 1
    assert block_height(2**16, 64) == 5
    for n in (2**6, 2**10, 2**14):
        for B in (1, 4, 16, 64):
            k = block_height(n, B)
            assert 1 <= k <= 5


@pytest.mark.parametrize("B", [1, 3, 8])
def test_fast_linf_agrees_with_linear_scan(B, rng):
    for _ in range(10):
        x = rng.normal(size=32)
        a = restricted_error(x, LINF, B, return_stats=True)
        b = restricted_error(x, LINF, B, fast_linf=True, return_stats=True)
        assert a[0] == b[0]
        assert b[2].minplus_ops <= a[2].minplus_ops
        sol = extract_restricted(x, LINF, B, fast_linf=True)
        assert sol.reported_error == a[0]


def test_budget_monotone(rng):
    x = rng.normal(size=32)
    for m in METRICS:
        errs = [restricted_error(x, m, B)[0] for B in range(0, 33)]
        assert all(a >= b for a, b in zip(errs, errs[1:]))


def test_negative_budget_rejected():
    with pytest.raises(ValueError):
        restricted_error(EXAMPLE, L1, -1)
    with pytest.raises(ValueError):
        extract_restricted(EXAMPLE, L1, -1)


@pytest.mark.parametrize("m", [L1, L2, LINF])
def test_block_height_does_not_change_profiles(m, rng):
    # height 1 never batches; taller batches take the unrolled kernels
    # whenever the budget leaves them untruncated
    for n, B in [(64, 64), (256, 40), (256, 7), (1024, 12)]:
        sig = Signal.from_values(rng.normal(size=n), rng.uniform(0.5, 2, size=n))
        prob = _Problem(sig, m, B)
        profiles = []
        for k in range(1, 6):
            prob.block = k
            st = np.zeros(4, dtype=np.int64)
            profiles.append(prob.profile(1, float(sig.values.mean()), B, st))
        for p in profiles[1:]:
            np.testing.assert_allclose(p, profiles[0], rtol=1e-12, atol=1e-9)
