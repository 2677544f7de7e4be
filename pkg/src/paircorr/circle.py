"""
Circle statistics: fractional parts, distance to the nearest integer and the
pair correlation counting function

    R2(s) = (1/N) #{(m, n): m != n, ||alpha (x_m - x_n)|| <= s/N}

with an O(N^2) reference path and a sorted circular-window path.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .errors import GuardExceeded
from ._windows import first_true
from .parallel import pmap
from .sequences import RealSeq

BRUTE_MAX_N = 5000

_SPLITTER = 134217729.0  # 2**27 + 1


def _split(a):
    t = _SPLITTER * a
    hi = t - (t - a)
    return hi, a - hi


def two_product(a, b):
    """Return ``(p, e)`` with ``p = fl(a*b)`` and ``a*b = p + e`` exactly (Dekker)."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    e = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, e


def frac_mod1(alpha, x) -> np.ndarray:
    """``(alpha * x) mod 1`` in [0, 1) with the product carried in double-double.

    The error is a couple of ulps of 1 on top of whatever error ``x`` itself
    carries; naive ``(alpha * x) % 1`` loses ``log2(|alpha x|)`` bits.
    """
    p, e = two_product(alpha, x)
    f = p - np.floor(p)  # exact while |p| < 2**52
    r = f + e
    r = r - np.floor(r)
    return np.where(r >= 1.0, 0.0, r)


def nearest_int_dist(x):
    """``|x - <x>|`` in [0, 1/2]; half-integers give exactly 1/2."""
    x = np.asarray(x, dtype=np.float64)
    f = x - np.floor(x)
    d = np.minimum(f, 1.0 - f)
    return float(d) if d.ndim == 0 else d


def circ_dist_frac(f):
    """Circular distance to 0 of values already reduced to [0, 1)."""
    return np.minimum(f, 1.0 - f)


def in_window(dist, half_width):
    """The one comparison every pair-correlation path uses (closed window)."""
    return dist <= half_width


def frac_parts(seq: RealSeq, alpha: float) -> np.ndarray:
    """Fractional parts of ``alpha * x_n`` in source order."""
    return frac_mod1(float(alpha), seq.values)


@dataclass
class PairCorrEstimate:
    N: int
    alpha: float
    entries: list = field(default_factory=list)  # (s, pair_count, r2)

    @property
    def s(self):
        return [e[0] for e in self.entries]

    @property
    def counts(self):
        return [e[1] for e in self.entries]

    @property
    def r2(self):
        return [e[2] for e in self.entries]

    def csv_rows(self):
        return [(self.N, self.alpha, s, c, r) for s, c, r in self.entries]

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["N", "alpha", "s", "pair_count", "r2"])
        for row in self.csv_rows():
            w.writerow([row[0], repr(row[1]), repr(row[2]), row[3], repr(row[4])])
        return buf.getvalue()


def _estimate(N, alpha, s_list, counts) -> PairCorrEstimate:
    entries = [(float(s), int(c), int(c) / N if N else 0.0) for s, c in zip(s_list, counts)]
    return PairCorrEstimate(N, float(alpha), entries)


def pair_correlation_brute(seq: RealSeq, alpha: float, s_list) -> PairCorrEstimate:
    """Reference O(N^2) count on the differences ``alpha (x_m - x_n)``."""
    N = seq.N
    if N > BRUTE_MAX_N:
        raise GuardExceeded(f"pair_correlation_brute limited to N <= {BRUTE_MAX_N}, got {N}")
    x = seq.values
    counts = [0] * len(s_list)
    for m in range(N - 1):
        d = x[m + 1:] - x[m]
        dist = circ_dist_frac(frac_mod1(alpha, d))
        for i, s in enumerate(s_list):
            counts[i] += 2 * int(np.count_nonzero(in_window(dist, s / N)))
    return _estimate(N, alpha, s_list, counts)


def _count_sorted(u: np.ndarray, w: float) -> int:
    """Ordered pairs i != k of the sorted reduced values within circular distance w."""
    n = len(u)
    if n < 2:
        return 0
    if w >= 0.5:
        return n * (n - 1)
    i = np.arange(n)
    lo = i + 1
    # direct neighbours: u_k - u_i <= w; predicate is "outside", so first_true gives the end
    guess = np.searchsorted(u, u + w, side="right")
    end = first_true(u, u, lo, guess, lambda d: ~in_window(d, w))
    direct = int((end - lo).sum())
    # wrap-around neighbours: 1 - (u_k - u_i) <= w
    guess = np.searchsorted(u, u + (1.0 - w), side="left")
    start = first_true(u, u, lo, guess, lambda d: in_window(1.0 - d, w))
    wrapped = int((n - start).sum())
    return 2 * (direct + wrapped)


def pair_correlation(seq: RealSeq, alpha: float, s_list, workers: int | None = None) -> PairCorrEstimate:
    """Sorted circular-window pair correlation, O(N log N) per s.

    Agrees with :func:`pair_correlation_brute` except where some pair sits
    within rounding error of a window edge.
    """
    N = seq.N
    u = np.sort(frac_parts(seq, alpha))
    counts = pmap(lambda s: _count_sorted(u, s / N), list(s_list), workers)
    return _estimate(N, alpha, s_list, counts)
