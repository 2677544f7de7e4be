"""
Tolerance-gamma additive energy

    E*_{N,gamma} = #{(n1, n2, n3, n4) in [1, N]^4 : |x_n1 - x_n2 + x_n3 - x_n4| < gamma}.

Writing ``d = x_n1 - x_n2`` and ``d' = x_n4 - x_n3`` turns the count into
``#{(d, d') in D x D : |d - d'| < gamma}`` over the multiset D of all N^2
ordered differences, which a sort plus a two-pointer window counts in
O(N^2 log N). When D does not fit in memory it is sorted out of core
(sorted runs spilled to disk, pairwise streaming merges) and counted on a
memory map.
"""

from __future__ import annotations

import csv
import io
import os
import tempfile
from dataclasses import dataclass, field

import numpy as np

from ._windows import first_true
from .errors import Degenerate, GuardExceeded, InvalidSpec, MemoryBudgetExceeded
from .parallel import pmap
from .sequences import RealSeq

BRUTE_MAX_N = 60
DEFAULT_MEM_BUDGET = 1 << 30  # bytes
_COUNT_CHUNK = 1 << 20


def within_gamma(diff, gamma):
    """The strict comparison shared by every energy path."""
    return np.abs(diff) < gamma


def trivial_count(N: int) -> int:
    """Tuples with n1 = n2, n3 = n4 or n1 = n4, n2 = n3."""
    return 2 * N * N - N


# --------------------------------------------------------------------------
# brute force


def energy_brute(seq: RealSeq, gamma: float) -> int:
    """Direct count over all N^4 tuples (N <= 60)."""
    N = seq.N
    if N > BRUTE_MAX_N:
        raise GuardExceeded(f"energy_brute limited to N <= {BRUTE_MAX_N}, got {N}")
    x = seq.values
    d12 = x[:, None] - x[None, :]  # x_n1 - x_n2
    d43 = d12  # x_n4 - x_n3, indexed [n4, n3]
    total = 0
    for n1 in range(N):
        for n2 in range(N):
            total += int(np.count_nonzero(within_gamma(d12[n1, n2] - d43, gamma)))
    return total


# --------------------------------------------------------------------------
# sorted-window counting


def differences(seq: RealSeq) -> np.ndarray:
    """All N^2 ordered differences ``x_a - x_b`` (zeros on the diagonal included)."""
    x = seq.values
    return (x[:, None] - x[None, :]).ravel()


def _count_sorted(D, gamma: float, lo: int = 0, hi: int | None = None) -> int:
    """Ordered pairs (a, b) of the sorted array D with |D_a - D_b| < gamma.

    ``D`` may be an ndarray or a read-only memmap; it is read in chunks.
    """
    n = len(D)
    if n == 0:
        return 0
    hi = n if hi is None else hi
    ahead = 0
    for a in range(lo, hi, _COUNT_CHUNK):
        b = min(a + _COUNT_CHUNK, hi)
        base = np.asarray(D[a:b])
        first = np.arange(a + 1, b + 1)
        guess = np.searchsorted(D, base + gamma, side="left")
        end = first_true(D, base, first, guess, lambda d: ~within_gamma(d, gamma))
        ahead += int((end - first).sum())
    if lo == 0 and hi == n:
        return n + 2 * ahead
    return 2 * ahead


def _count_many(D, gammas, workers=None) -> list[int]:
    return pmap(lambda g: _count_sorted(D, g), list(gammas), workers)


def _in_memory_bytes(N: int) -> int:
    # D, its sorted copy and the searchsorted index chunk
    return 3 * 8 * N * N


def _external_sorted(seq: RealSeq, chunk_bytes: int, workdir: str) -> np.memmap:
    """Write D to disk as sorted runs of ``chunk_bytes`` and merge them into one
    sorted memmap."""
    x = seq.values
    N = seq.N
    total = N * N
    per = max(1024, chunk_bytes // 8)
    runs = []
    for k, a in enumerate(range(0, total, per)):
        b = min(a + per, total)
        idx = np.arange(a, b)
        block = np.sort(x[idx // N] - x[idx % N])
        path = os.path.join(workdir, f"run0_{k}.f8")
        block.tofile(path)
        runs.append((path, b - a))
    level = 0
    while len(runs) > 1:
        level += 1
        merged = []
        for k in range(0, len(runs), 2):
            if k + 1 == len(runs):
                merged.append(runs[k])
                continue
            (pa, na), (pb, nb) = runs[k], runs[k + 1]
            out = os.path.join(workdir, f"run{level}_{k // 2}.f8")
            _merge_files(pa, na, pb, nb, out, per)
            os.remove(pa)
            os.remove(pb)
            merged.append((out, na + nb))
        runs = merged
    path, n = runs[0]
    return np.memmap(path, dtype=np.float64, mode="r", shape=(n,))


def _merge_files(pa, na, pb, nb, out, chunk):
    A = np.memmap(pa, dtype=np.float64, mode="r", shape=(na,))
    B = np.memmap(pb, dtype=np.float64, mode="r", shape=(nb,))
    O = np.memmap(out, dtype=np.float64, mode="w+", shape=(na + nb,))
    half = max(1, chunk // 2)
    i = j = k = 0
    while i < na or j < nb:
        if i >= na:
            take = min(chunk, nb - j)
            O[k:k + take] = B[j:j + take]
            j += take
            k += take
            continue
        if j >= nb:
            take = min(chunk, na - i)
            O[k:k + take] = A[i:i + take]
            i += take
            k += take
            continue
        ac = np.asarray(A[i:i + half])
        bc = np.asarray(B[j:j + half])
        cut = min(ac[-1], bc[-1])
        ta = int(np.searchsorted(ac, cut, side="right"))
        tb = int(np.searchsorted(bc, cut, side="right"))
        m = np.concatenate([ac[:ta], bc[:tb]])
        m.sort(kind="stable")
        O[k:k + ta + tb] = m
        i += ta
        j += tb
        k += ta + tb
    O.flush()
    del A, B, O


class SortedDifferences:
    """D sorted once, either in memory or as a disk-backed memmap."""

    def __init__(self, seq: RealSeq, mem_budget: int | None = None, chunked: bool | None = None,
                 chunk_bytes: int | None = None):
        self.N = seq.N
        budget = DEFAULT_MEM_BUDGET if mem_budget is None else int(mem_budget)
        need = _in_memory_bytes(seq.N)
        if chunked is None:
            chunked = need > budget
        if chunked is False and need > budget:
            raise MemoryBudgetExceeded(
                f"N^2 differences need ~{need} bytes in memory, budget is {budget}; enable chunking")
        self.chunked = bool(chunked)
        self._tmp = None
        if self.chunked:
            self._tmp = tempfile.TemporaryDirectory(prefix="paircorr-energy-")
            cb = chunk_bytes if chunk_bytes is not None else max(1 << 16, budget // 8)
            self.D = _external_sorted(seq, cb, self._tmp.name)
        else:
            self.D = np.sort(differences(seq))

    def count(self, gamma: float) -> int:
        return _count_sorted(self.D, gamma)

    def has_tie(self, gamma: float) -> bool:
        """Whether some pair difference lands on ``gamma`` to within rounding."""
        D = self.D
        hits = 0
        for a in range(0, len(D), _COUNT_CHUNK):
            base = np.asarray(D[a:a + _COUNT_CHUNK]) + gamma
            hits += int((np.searchsorted(D, base, "right") - np.searchsorted(D, base, "left")).sum())
            if hits:
                return True
        return False

    def close(self):
        if self._tmp is not None:
            self.D = None
            self._tmp.cleanup()
            self._tmp = None

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def energy_fast(seq: RealSeq, gamma: float, mem_budget: int | None = None, chunked: bool | None = None,
                chunk_bytes: int | None = None) -> int:
    """E*_{N,gamma} by sorting the N^2 differences.

    ``chunked=None`` picks the out-of-core path only when the in-memory path
    would exceed ``mem_budget``; ``chunked=False`` raises MemoryBudgetExceeded
    instead.
    """
    if not gamma > 0:
        raise InvalidSpec("gamma must be positive")
    with SortedDifferences(seq, mem_budget, chunked, chunk_bytes) as sd:
        return sd.count(gamma)


def energy_localized(seq: RealSeq, gamma: float, lo: float, hi: float) -> int:
    """Like :func:`energy_fast` with both differences restricted to ``lo <= |d| < hi``."""
    if not (0 <= lo < hi):
        raise InvalidSpec("need 0 <= lo < hi")
    D = differences(seq)
    a = np.abs(D)
    D = np.sort(D[(a >= lo) & (a < hi)])
    return _count_sorted(D, gamma)


# --------------------------------------------------------------------------
# gamma scans and scaling fits


@dataclass
class EnergyCurve:
    N: int
    gammas: list = field(default_factory=list)
    totals: list = field(default_factory=list)
    trivial: int = 0
    nontrivial: list = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def to_csv(self, header: bool = True) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        if header:
            w.writerow(["N", "gamma", "total", "trivial", "nontrivial"])
        for g, t, nt in zip(self.gammas, self.totals, self.nontrivial):
            w.writerow([self.N, repr(g), t, self.trivial, nt])
        return buf.getvalue()


def gamma_scan(seq: RealSeq, gammas, mem_budget=None, chunked=None, chunk_bytes=None, workers=None,
               rng=None) -> EnergyCurve:
    """Energy at several tolerances from one sort of D.

    When ``rng`` is given, any gamma sitting on a difference tie is multiplied
    by a factor drawn from [1 - 1e-9, 1 + 1e-9]; the used values are recorded
    in ``meta["perturbed"]``.
    """
    gs = sorted((float(g) for g in gammas), reverse=True)
    if not gs or min(gs) <= 0:
        raise InvalidSpec("gammas must be positive")
    perturbed = {}
    with SortedDifferences(seq, mem_budget, chunked, chunk_bytes) as sd:
        used = []
        for g in gs:
            if rng is not None and sd.has_tie(g):
                g2 = g * (1.0 + rng.uniform(-1e-9, 1e-9))
                perturbed[repr(g)] = g2
                g = g2
            used.append(g)
        totals = _count_many(sd.D, used, workers)
    triv = trivial_count(seq.N)
    return EnergyCurve(seq.N, gs, totals, triv, [t - triv for t in totals],
                       {"perturbed": perturbed, "chunked": sd.chunked})


def fit_scaling(points):
    """Least-squares line through ``(log N, log count)``.

    Returns ``(slope, intercept, residual)`` with ``residual`` the sum of
    squared residuals in log space.
    """
    pts = [(float(n), float(c)) for n, c in points]
    if len(pts) < 3:
        raise Degenerate("need at least three points")
    xs = np.log([p[0] for p in pts])
    if len(set(p[0] for p in pts)) != len(pts):
        raise Degenerate("N values must be distinct")
    if min(p[1] for p in pts) <= 0:
        raise Degenerate("counts must be positive")
    ys = np.log([p[1] for p in pts])
    (slope, intercept), res, *_ = np.polyfit(xs, ys, 1, full=True)
    return float(slope), float(intercept), float(res[0]) if len(res) else 0.0


def scaling_sweep(make_seq, Ns, gamma: float = 1.0, rng=None, **kw):
    """Energy at one tolerance over several N; ``make_seq(N)`` materializes."""
    rows = []
    for N in Ns:
        curve = gamma_scan(make_seq(N), [gamma], rng=rng, **kw)
        rows.append((N, curve.totals[0], curve.meta))
    return rows
