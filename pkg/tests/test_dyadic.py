import itertools
import math

import numpy as np
import pytest

from paircorr import dyadic
from paircorr.dyadic import (DyadicBinning, abs_differences, allowed_shifts, bilinear_form, build_binning,
                             capture_rate, check_bin_constraint, constraint_gap, count_dyadic, count_dyadic_brute,
                             cs_domination, dyadic_upper_bound, eval_P, h_index, interval_edge, p0_chain,
                             p_norm_quadrature)
from paircorr.errors import BadParams, GuardExceeded, OutOfBand, TooShort
from paircorr.sequences import SequenceSpec, from_values, materialize


def _enumerate(z, u):
    js = range(2 ** (u - 1), 2 ** u)
    return sum(abs(j1 * a - j2 * b) < 1 for a, b in itertools.product(z, z) for j1, j2 in itertools.product(js, js))


def test_abs_differences():
    assert sorted(abs_differences(from_values([1, 2]))) == [1, 1]
    assert sorted(abs_differences(from_values([1, 4, 9]))) == [3, 3, 5, 5, 8, 8]
    seq = materialize(SequenceSpec.power(1.5), 17)
    z = abs_differences(seq)
    assert z.size == 17 * 16 and z.min() >= seq.min_gap
    with pytest.raises(TooShort):
        abs_differences(from_values([1.0]))


def test_dyadic_counts_small():
    assert count_dyadic_brute([1.0, 1.0], 1) == 4
    assert count_dyadic_brute([1.0, 2.0], 1) == 2
    # j in {2, 3}: only the 4 diagonal (z, z, j, j) combinations are solutions
    assert count_dyadic_brute([1.0, 2.0], 2) == 4 == _enumerate([1.0, 2.0], 2)
    assert count_dyadic([1.0, 2.0], 2) == 4


def test_fast_and_brute_match_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(15):
        seq = from_values(np.cumsum(rng.uniform(0.5, 3.0, int(rng.integers(2, 8)))))
        z = abs_differences(seq)
        u = int(rng.integers(1, 4))
        ref = _enumerate(z, u)
        assert count_dyadic_brute(z, u) == ref
        assert count_dyadic(z, u, workers=2) == ref
        band = (float(np.median(z)), math.inf)
        assert count_dyadic(z, u, band) == count_dyadic_brute(z, u, band)


def test_dyadic_guard():
    with pytest.raises(GuardExceeded):
        count_dyadic_brute(np.ones(10 ** 6), 6)


def test_interval_edges_partition():
    T = 37.5
    rng = np.random.default_rng(4)
    for y in rng.uniform(1, 5000, 500):
        h = h_index(float(y), T)
        assert interval_edge(h, T) <= y < interval_edge(h + 1, T)
    with pytest.raises(OutOfBand):
        h_index(0.5, T)


def test_binning_single_bin():
    # the band [N^beta, 32 N^beta) only reaches down to 1 when N = 1
    b = build_binning(abs_differences(from_values([1, 2])), 1, 1, "case2", beta=0.5)
    assert b.b == {1: 2}
    assert list(b.a.values()) == [2.0]


def test_binning_modes_and_errors():
    seq = materialize(SequenceSpec.power(1.5), 60)
    z = abs_differences(seq)
    c1 = build_binning(z, 60, 2, "case1", eps=0.2)
    assert c1.T == pytest.approx(4 * 60 ** 1.1) and c1.z_lo == math.ceil(60 ** 1.01) and c1.scale == 1
    c2 = build_binning(z, 60, 2, "case2", beta=0.5)
    assert c2.z_hi == pytest.approx(32 * 60 ** 0.5)
    assert sum(c2.b.values()) == int(np.count_nonzero((z >= c2.z_lo) & (z < c2.z_hi)))
    t2 = build_binning(z, 60, 3, "thm2", beta=0.6, eps=0.1)
    assert t2.scale == 1 / 8 and t2.T == pytest.approx(8 * 60 ** 0.5)
    assert build_binning(z, 60, 1, "thm2", beta=1.01, eps=0.1).z_hi == math.inf
    for bad in [dict(mode="case1"), dict(mode="case2", beta=0.1), dict(mode="thm2", beta=0.5, eps=0.5),
                dict(mode="case3", beta=0.5)]:
        with pytest.raises(BadParams):
            build_binning(z, 60, 1, **bad)
    with pytest.raises(BadParams):
        build_binning(z, 60, 0, "case2", beta=0.5)


def test_thm2_same_bin_pairs():
    seq = materialize(SequenceSpec.power(1.5), 100)
    z = abs_differences(seq)
    b = build_binning(z, 100, 3, "thm2", beta=0.5, eps=0.1)
    zb = z[(z >= b.z_lo) & (z < b.z_hi)]
    k = np.floor(zb / b.scale)
    same = int(np.count_nonzero(k[:, None] == k[None, :]))
    assert sum(v * v for v in b.b.values()) == same
    assert sum(b.a2.values()) == same
    assert sum(b.b.values()) <= 100 * 99


def _manual(a2, T=50.0):
    return DyadicBinning(T, 1.0, 0.0, math.inf, {}, dict(a2))


def test_eval_P():
    single = _manual({7: 9})
    t = np.random.default_rng(5).uniform(-1e3, 1e3, 100)
    np.testing.assert_allclose(np.abs(eval_P(single, t)), 3.0, rtol=1e-13)
    seq = materialize(SequenceSpec.power(1.5), 40)
    b = build_binning(abs_differences(seq), 40, 2, "case2", beta=0.7)
    p0 = eval_P(b, 0.0)
    assert p0.imag == 0 and p0.real == pytest.approx(sum(b.a.values()))
    assert np.all(np.abs(eval_P(b, t)) <= p0.real * (1 + 1e-12))


def test_p_norm_single_and_adjacent():
    T = 50.0
    q, e = p_norm_quadrature(_manual({7: 9}, T))
    assert e == pytest.approx(9 * T * math.sqrt(2 * math.pi), rel=1e-12)
    assert q == pytest.approx(e, rel=1e-6)
    two = _manual({7: 4, 8: 4}, T)
    lag = T * math.log1p(1 / T)
    closed = T * math.sqrt(2 * math.pi) * (2 * 4 + 2 * 4 * math.exp(-0.5 * lag * lag))
    q, e = p_norm_quadrature(two)
    assert e == pytest.approx(closed, rel=1e-12)
    assert q == pytest.approx(closed, rel=1e-6)


def test_p_norm_ratio_logged_below_8():
    rng = np.random.default_rng(6)
    for _ in range(6):
        N = int(rng.integers(12, 30))
        seq = materialize(SequenceSpec.power(float(rng.uniform(1.2, 2.5))), N)
        b = build_binning(abs_differences(seq), N, int(rng.integers(1, 4)), "case2", beta=float(rng.uniform(0.3, 1.0)))
        if not b.a2:
            continue
        q, e = p_norm_quadrature(b)
        assert q / (b.T * sum(b.a2.values())) < 8


def test_constraint_examples():
    seq = materialize(SequenceSpec.power(1.5), 40)
    b = build_binning(abs_differences(seq), 40, 3, "case1", eps=0.1)
    z0 = b.z_lo + 10.5
    assert check_bin_constraint(b, 5, 5, z0, z0)
    assert constraint_gap(b, 5, 5, z0, z0) == 0
    assert not check_bin_constraint(b, 2, 4, 4 * z0, z0)
    # argument order does not matter once j1 < j2 is swapped
    assert constraint_gap(b, 4, 6, z0, z0 + 3) == constraint_gap(b, 6, 4, z0 + 3, z0)
    with pytest.raises(OutOfBand):
        check_bin_constraint(b, 1, 1, 1.0, z0)


def test_constraint_misses_a_case1_solution():
    """A genuine solution the 4/T test rejects.

    x_n = n^1.5, N = 9, u = 2: z = x_9 - x_6 and z' = x_6 - x_2 both clear
    ceil(9^1.01) = 10 and 2|z - z'| < 1, yet they fall in I_h's whose ceilinged
    edges put the ratio q^(h1-h2) about 4.15/T away from 1.
    """
    seq = materialize(SequenceSpec.power(1.5), 9)
    b = build_binning(abs_differences(seq), 9, 2, "case1", eps=0.1)
    zm = seq.values[8] - seq.values[5]
    zn = seq.values[5] - seq.values[1]
    assert abs(2 * zm - 2 * zn) < 1 and b.in_band(zm) and b.in_band(zn)
    gap = constraint_gap(b, 2, 2, zm, zn)
    assert 4.0 < gap < 4.2
    assert not check_bin_constraint(b, 2, 2, zm, zn)


def test_capture_rate_is_high_but_not_total():
    passed, total, worst = 0, 0, 0.0
    for N in range(8, 26):
        seq = materialize(SequenceSpec.power(1.5), N)
        z = abs_differences(seq)
        for u in (1, 2, 3):
            p, t, w = capture_rate(build_binning(z, N, u, "case1", eps=0.1), z)
            passed, total, worst = passed + p, total + t, max(worst, w)
    assert total > 0
    assert passed / total > 0.97
    assert passed < total and worst > 4


def test_upper_bound_single_bin():
    b = DyadicBinning(50.0, 1.0, 0.0, math.inf, {100: 3}, {h_index(100, 50.0): 9}, 10, 1, "case2")
    assert 0 in allowed_shifts(b, 1, 1)
    assert dyadic_upper_bound(b) == pytest.approx(9.0)


def test_upper_bound_dominates_restricted_count():
    rng = np.random.default_rng(7)
    worst = 0.0
    for i in range(50):
        N = int(rng.integers(12, 30))
        seq = materialize(SequenceSpec.power(float(rng.uniform(1.2, 2.5))), N)
        z = abs_differences(seq)
        u = int(rng.integers(1, 4))
        if i % 2:
            b = build_binning(z, N, u, "case1", eps=float(rng.uniform(0.05, 0.25)))
        else:
            b = build_binning(z, N, u, "case2", beta=float(rng.uniform(0.25, 1.01)))
        ub = dyadic_upper_bound(b)
        assert ub >= 0
        cnt = count_dyadic(z, u, (b.z_lo, b.z_hi))
        if cnt:
            worst = max(worst, cnt / ub)
    assert worst <= 16


def test_cs_domination_and_chain():
    seq = materialize(SequenceSpec.power(1.5), 30)
    z = abs_differences(seq)
    for mode, kw in [("case1", {"eps": 0.1}), ("case2", {"beta": 0.5}), ("thm2", {"beta": 0.5, "eps": 0.1})]:
        b = build_binning(z, 30, 2, mode, **kw)
        for j1, j2 in itertools.product(dyadic.j_range(2), repeat=2):
            assert cs_domination(b, int(j1), int(j2)) <= 1 + 1e-12
        chain = p0_chain(b, seq)
        assert chain["ok"]
        assert chain["P0"] <= chain["sum_b"] <= chain["cs_bound"] + 1e-9


def test_diagnostics_dump():
    seq = materialize(SequenceSpec.power(1.5), 30)
    b = build_binning(abs_differences(seq), 30, 1, "thm2", beta=1.01, eps=0.1)
    d = b.diagnostics()
    assert d["band"][1] is None and d["sum_b"] == sum(b.b.values())
    assert '"mode": "thm2"' in b.dump()
    assert bilinear_form(b) > 0
