from collections import Counter

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paircorr.energy import (SortedDifferences, energy_brute, energy_fast, energy_localized, fit_scaling,
                             gamma_scan, trivial_count)
from paircorr.errors import Degenerate, GuardExceeded, InvalidSpec, MemoryBudgetExceeded
from paircorr.sequences import SequenceSpec, from_values, materialize


def test_small_examples():
    assert energy_brute(from_values([5.0]), 1.0) == 1
    assert energy_fast(from_values([5.0]), 1.0) == 1
    two = from_values([1.0, 2.0])
    assert energy_brute(two, 0.5) == 6 and energy_fast(two, 0.5) == 6
    assert energy_brute(two, 1.5) == 14 and energy_fast(two, 1.5) == 14


def test_brute_guard():
    with pytest.raises(GuardExceeded):
        energy_brute(materialize(SequenceSpec.power(1), 61), 1.0)


def test_fast_equals_brute_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        N = int(rng.integers(1, 41))
        seq = from_values(np.cumsum(rng.uniform(0.1, 3.0, N)))
        g = float(rng.choice([0.1, 0.5, 1.0, 2.0]))
        assert energy_fast(seq, g) == energy_brute(seq, g)


def test_squares_integer_energy():
    N = 40
    seq = materialize(SequenceSpec.power(2), N)
    sq = [n * n for n in range(1, N + 1)]
    sums = Counter(a + b for a in sq for b in sq)
    assert energy_fast(seq, 0.5) == sum(c * c for c in sums.values())


def test_localized():
    seq = materialize(SequenceSpec.power(1.5), 30)
    assert energy_localized(seq, 1.0, 0.0, np.inf) == energy_fast(seq, 1.0)
    assert energy_localized(seq, 1.0, 0.1, 0.2) == 0
    # D of (1, 2, 4) meets [0.5, 1.5) in {1, -1}; only equal signs are within 0.25
    assert energy_localized(from_values([1.0, 2.0, 4.0]), 0.25, 0.5, 1.5) == 2
    with pytest.raises(InvalidSpec):
        energy_localized(seq, 1.0, 2.0, 1.0)


def test_scan_full_cover_and_consistency():
    seq = materialize(SequenceSpec.power(1.5), 25)
    big = 2 * (seq.values[-1] - seq.values[0]) + 1
    curve = gamma_scan(seq, [0.25, big, 1.0])
    assert curve.gammas == sorted(curve.gammas, reverse=True)
    assert curve.totals[0] == 25 ** 4
    assert curve.totals == [energy_fast(seq, g) for g in curve.gammas]
    assert all(a >= b for a, b in zip(curve.totals, curve.totals[1:]))
    assert curve.trivial == trivial_count(25) == 2 * 25 ** 2 - 25
    assert curve.to_csv().splitlines()[0] == "N,gamma,total,trivial,nontrivial"


def test_invariances():
    seq = materialize(SequenceSpec.power(1.3), 35)
    shifted = from_values(seq.values + 17.25)
    flipped = from_values(np.sort(-seq.values) + 1000.0)
    for g in (0.3, 1.0):
        e = energy_fast(seq, g)
        assert energy_fast(shifted, g) == e
        assert energy_fast(flipped, g) == e


def test_fit_scaling():
    pts = [(N, 7 * N ** 3) for N in (10, 20, 40, 80)]
    assert fit_scaling(pts)[0] == pytest.approx(3, abs=1e-9)
    slope = fit_scaling([(N, 2 * N * N - N) for N in (250, 500, 1000, 2000, 4000)])[0]
    assert 1.9 <= slope <= 2.1
    with pytest.raises(Degenerate):
        fit_scaling([(10, 1), (10, 2), (10, 3)])
    with pytest.raises(Degenerate):
        fit_scaling([(10, 1), (20, 2)])


def test_memory_budget():
    seq = materialize(SequenceSpec.power(1.5), 200)
    with pytest.raises(MemoryBudgetExceeded):
        energy_fast(seq, 1.0, mem_budget=1000, chunked=False)
    # with chunking left automatic the same budget spills to disk
    assert energy_fast(seq, 1.0, mem_budget=1000) == energy_fast(seq, 1.0)


@pytest.mark.parametrize("chunk", [1 << 16, 1 << 20, 1 << 24])
def test_chunked_equals_memory(chunk):
    seq = materialize(SequenceSpec.power(1.5), 700)
    ref = energy_fast(seq, 1.0, chunked=False)
    assert energy_fast(seq, 1.0, chunked=True, chunk_bytes=chunk) == ref
    with SortedDifferences(seq, chunked=True, chunk_bytes=chunk) as sd:
        assert sd.count(0.5) == energy_fast(seq, 0.5, chunked=False)


@given(st.lists(st.floats(0.05, 4.0), min_size=1, max_size=30), st.floats(0.01, 5.0), st.floats(0.01, 5.0))
@settings(max_examples=50, deadline=None)
def test_monotone_in_gamma(gaps, g1, g2):
    seq = from_values(np.cumsum(gaps))
    lo, hi = sorted((g1, g2))
    a, b = energy_fast(seq, lo), energy_fast(seq, hi)
    assert trivial_count(seq.N) <= a <= b <= seq.N ** 4
