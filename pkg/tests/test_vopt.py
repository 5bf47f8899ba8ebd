import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wavesyn.oracles import InstanceTooLarge, brute_histogram
from wavesyn.vopt import (
    PrefixSums,
    TableTooLarge,
    bucket_error,
    forward_pass_cells,
    vopt_full_table,
    vopt_linear_space,
)


def _sse(x, boundaries):
    x = np.asarray(x, dtype=float)
    return sum(float(((x[a - 1 : b - 1] - x[a - 1 : b - 1].mean()) ** 2).sum()) for a, b in zip(boundaries, boundaries[1:]))


def test_bucket_error_examples():
    s = PrefixSums.of([1, 2, 3, 4])
    assert bucket_error(0, 4, s) == 5.0
    assert bucket_error(2, 3, s) == 0.0
    assert bucket_error(0, 3, PrefixSums.of([7, 7, 7])) == 0.0
    with pytest.raises(ValueError):
        bucket_error(2, 2, s)


def test_bucket_error_clamps_cancellation():
    s = PrefixSums.of([1e8 + 0.1] * 5)
    assert bucket_error(0, 5, s) >= 0.0


def test_errors_ending_at_matches_scalar():
    x = np.random.default_rng(2).normal(size=9)
    s = PrefixSums.of(x)
    assert np.allclose(s.errors_ending_at(9, 2), [bucket_error(j, 9, s) for j in range(2, 9)])


def test_two_bucket_example():
    h = vopt_linear_space([1, 2, 3, 4], 2)
    assert h.sse == pytest.approx(1.0)
    assert h.boundaries == [1, 3, 5]
    assert h.buckets == [(1, 2), (3, 4)]
    assert h.reps == [1.5, 3.5]
    assert h.rmse_norm == pytest.approx(1.0)


def test_step_signal_is_exact():
    h = vopt_linear_space([1, 1, 4, 4], 2)
    assert h.sse == 0 and h.reps == [1.0, 4.0]


def test_one_bucket_and_enough_buckets():
    assert vopt_full_table([1, 2, 3, 4], 1)[0].sse == pytest.approx(5.0)
    assert vopt_linear_space([1, 2, 3, 4], 1).sse == pytest.approx(5.0)
    assert vopt_full_table([3.0], 1)[0].sse == 0
    x = np.random.default_rng(0).normal(size=13)
    for B in (13, 20):
        assert vopt_linear_space(x, B).sse == pytest.approx(0, abs=1e-12)


def test_rejects_bad_input():
    for bad in ([], [1.0, np.nan]):
        with pytest.raises(ValueError):
            vopt_linear_space(bad, 1)
    with pytest.raises(ValueError):
        vopt_linear_space([1, 2], 0)
    with pytest.raises(TableTooLarge):
        vopt_full_table(np.zeros(1000), 50, limit=10_000)


def test_oracle_examples():
    assert brute_histogram([1, 2, 3, 4], 2) == (pytest.approx(1.0), [1, 3, 5])
    x = np.random.default_rng(4).normal(size=7)
    assert brute_histogram(x, 7)[0] == pytest.approx(0, abs=1e-12)
    assert brute_histogram(x, 1)[0] == pytest.approx(bucket_error(0, 7, PrefixSums.of(x)))
    with pytest.raises(InstanceTooLarge):
        brute_histogram(np.zeros(20), 3)


def test_matches_exhaustive(rng):
    for _ in range(40):
        n = int(rng.integers(1, 13))
        x = rng.integers(-5, 6, size=n).astype(float) if rng.random() < 0.5 else rng.normal(size=n)
        for B in range(1, n + 1):
            ref, _ = brute_histogram(x, B)
            lin = vopt_linear_space(x, B)
            full, _ = vopt_full_table(x, B)
            assert lin.sse == pytest.approx(ref, abs=1e-9)
            assert full.sse == pytest.approx(ref, abs=1e-9)
            assert _sse(x, lin.boundaries) == pytest.approx(lin.sse, abs=1e-9)


def test_matches_full_table_larger(rng):
    for _ in range(15):
        n = int(rng.integers(13, 65))
        x = rng.normal(size=n)
        for B in range(1, n + 1, 3):
            lin = vopt_linear_space(x, B)
            full, _ = vopt_full_table(x, B)
            assert lin.sse == pytest.approx(full.sse, abs=1e-9)
            assert len(lin.boundaries) - 1 <= B


@given(st.lists(st.integers(-20, 20), min_size=1, max_size=30), st.integers(1, 8))
def test_histogram_is_well_formed(vals, B):
    h = vopt_linear_space(vals, B)
    b = h.boundaries
    assert b[0] == 1 and b[-1] == len(vals) + 1
    assert all(p < q for p, q in zip(b, b[1:]))
    assert len(b) - 1 <= B
    x = np.asarray(vals, dtype=float)
    for (s, e), r in zip(h.buckets, h.reps):
        assert r == pytest.approx(x[s - 1 : e].mean())
    assert _sse(vals, b) == pytest.approx(h.sse, abs=1e-9)


def test_sse_nonincreasing_in_budget(rng):
    x = rng.normal(size=40)
    _, E = vopt_full_table(x, 40)
    col = E[1:, 40]
    assert np.all(np.diff(col) <= 1e-12)
    assert col[-1] == pytest.approx(0, abs=1e-12)
    prev = np.inf
    for B in range(1, 41):
        s = vopt_linear_space(x, B).sse
        assert s <= prev + 1e-12
        prev = s


def test_ties_resolve_deterministically():
    x = [0, 1, 0, 1, 0, 1, 0, 1]
    a = vopt_linear_space(x, 3)
    b = vopt_linear_space(x, 3)
    assert a.boundaries == b.boundaries and a.sse == b.sse


@pytest.mark.parametrize("n", [64, 256, 1000])
def test_recompute_overhead(n, rng):
    x = rng.normal(size=n)
    for B in (2, 8, 32):
        h = vopt_linear_space(x, B)
        top = forward_pass_cells(n, B)
        assert top <= h.cell_evals <= 4 * top
