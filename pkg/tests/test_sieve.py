"""Sieve tests.  Oracles: brute-force divisor enumeration, ordered-tuple
counting, the factorisation formula, and the Dirichlet hyperbola identity.
"""

import random

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from divisorlab import sieve as sv
from divisorlab.errors import DomainError, MemoryBudgetError


def d2_brute(n: int) -> int:
    return sum(1 for d in range(1, n + 1) if n % d == 0)


def d3_brute(n: int) -> int:
    count = 0
    for a in range(1, n + 1):
        if n % a:
            continue
        m = n // a
        for b in range(1, m + 1):
            if m % b == 0:
                count += 1
    return count


def test_d2_block_first_ten():
    blk = sv.dk_block(2, 1, 11)
    expected = [d2_brute(n) for n in range(1, 11)]
    assert list(blk.values) == expected == [1, 2, 2, 3, 2, 4, 2, 4, 3, 4]
    assert not blk.overflow_flag


def test_d3_ordered_triples():
    blk = sv.dk_block(3, 1, 13)
    assert blk.values[4 - 1] == 6 == d3_brute(4)
    assert blk.values[12 - 1] == 18 == d3_brute(12)


def test_dk_at_one_and_primes():
    for k in (1, 2, 5, 17, 30):
        blk = sv.dk_block(k, 1, 32)
        assert blk.values[0] == 1
        for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31):
            assert blk.values[p - 1] == k


def test_block_offset_slicing():
    full = sv.dk_block(4, 1, 200)
    part = sv.dk_block(4, 150, 200)
    assert np.array_equal(full.values[149:], part.values)


def test_segment_independence():
    # full range equals concatenated segmented computation
    n = 5000
    full = sv.dk_block(6, 1, n)
    pieces = [sv.dk_block(6, lo, min(lo + 1250, n)).values
              for lo in range(1, n, 1250)]
    assert np.array_equal(full.values, np.concatenate(pieces))


def test_partial_sums_small_values():
    s2 = sv.dk_partial_sums(2, 10, [10])
    assert s2.checkpoints == ((10, 27),)
    s3 = sv.dk_partial_sums(3, 10, [10])
    assert s3.checkpoints == ((10, 53),)
    s1 = sv.dk_partial_sums(1, 12345, [1, 777, 12345])
    assert s1.checkpoints == ((1, 1), (777, 777), (12345, 12345))


def test_partial_sums_checkpoint_consistency():
    # multiple checkpoints agree with independent single-checkpoint runs
    series = sv.dk_partial_sums(3, 4000, [10, 100, 1000, 4000])
    for x, d in series.checkpoints:
        single = sv.dk_partial_sums(3, x, [x])
        assert single.checkpoints[0][1] == d


def test_hyperbola_identity():
    # independent O(sqrt x) oracle for D_2
    xs = [1, 2, 10, 99, 1000, 54321, 10 ** 6]
    series = sv.dk_partial_sums(2, 10 ** 6, xs)
    for x, d in series.checkpoints:
        assert d == sv.d2_summatory_hyperbola(x)


def test_dk_factor_against_brute():
    assert sv.dk_factor(3, 12) == 18
    assert sv.dk_factor(2, 6) == 4
    for k in (2, 3, 7, 30):
        for p in (2, 97, 999983):
            assert sv.dk_factor(k, p) == k
    assert sv.dk_factor(5, 1) == 1


@settings(max_examples=80, deadline=None)
@given(st.integers(2, 8), st.integers(1, 3000))
def test_dk_factor_matches_sieve(k, n):
    blk = sv.dk_block(k, n, n + 1)
    assert int(blk.values[0]) == sv.dk_factor(k, n)


@settings(max_examples=60, deadline=None)
@given(st.integers(2, 12), st.integers(1, 500), st.integers(1, 500))
def test_dk_factor_multiplicative(k, a, b):
    # d_k is multiplicative: coprime arguments factor the count
    import math as _m
    if _m.gcd(a, b) == 1:
        assert sv.dk_factor(k, a * b) == sv.dk_factor(k, a) * sv.dk_factor(k, b)


def test_oracle_equivalence_random():
    rng = random.Random(20260808)
    table = {k: sv.dk_block(k, 1, 100001).values for k in (2, 3, 5, 10)}
    for k, vals in table.items():
        for _ in range(500):
            n = rng.randint(1, 100000)
            assert int(vals[n - 1]) == sv.dk_factor(k, n)


def test_determinism():
    a = sv.dk_block(5, 1, 10000)
    b = sv.dk_block(5, 1, 10000)
    assert np.array_equal(a.values, b.values)
    sa = sv.dk_partial_sums(5, 10000, [10000])
    sb = sv.dk_partial_sums(5, 10000, [10000])
    assert sa == sb


def test_exact_sum_uint64_wide():
    vals = np.full(3 * (1 << 20), (1 << 63) + 12345, dtype=np.uint64)
    got = sv._exact_sum_uint64(vals)
    assert got == 3 * (1 << 20) * ((1 << 63) + 12345)


def test_overflow_detection_synthetic():
    # feed a synthetic near-saturation table through one convolution sweep
    a = np.full(64, 1 << 60, dtype=np.uint64)
    b, overflowed = sv._ones_convolve(a)
    assert overflowed


def test_precondition_errors():
    with pytest.raises(DomainError):
        sv.dk_block(0, 1, 10)
    with pytest.raises(DomainError):
        sv.dk_block(31, 1, 10)
    with pytest.raises(DomainError):
        sv.dk_block(2, 10, 10)
    with pytest.raises(DomainError):
        sv.dk_block(2, 1, sv.DESK_X_CAP + 10)
    with pytest.raises(MemoryBudgetError):
        sv.dk_block(2, 1, 10 ** 9)
    with pytest.raises(DomainError):
        sv.dk_partial_sums(2, 100, [50, 20])
    with pytest.raises(DomainError):
        sv.dk_partial_sums(2, 100, [150])


def test_checkpoint_cache_roundtrip(tmp_path):
    series = sv.dk_partial_sums(10, 20000, [100, 20000])
    path = tmp_path / "ck.csv"
    sv.save_checkpoints_csv(path, series)
    again = sv.load_checkpoints_csv(path)
    assert again == series
    # corruption is detected and reported as a miss
    body = path.read_text().replace("100", "101", 1)
    path.write_text(body)
    assert sv.load_checkpoints_csv(path) is None
