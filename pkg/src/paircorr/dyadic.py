"""
Dyadic counting of ``|j1 z_m - j2 z_n| < 1`` over the z-multiset of absolute
differences, and the geometric binning that bounds it.

Binning: unit bins ``b_k = #{z in [k s, (k+1) s)}`` (scale ``s`` is 1 or
``2**-u``), grouped into ``I_h = [ceil(q^h), ceil(q^(h+1)))`` with
``q = 1 + 1/T``; ``a_h = (sum_{k s in I_h} b_k^2)^(1/2)`` and
``P(t) = sum_h a_h q^(i h t)``.

Modes fix ``T`` and the admitted z range:

    case1(eps)        T = 2^u N^(1 + eps/2),            z >= N^1.01,         s = 1
    case2(beta)       T = 2^u N^beta,                   z in [N^b, 32 N^b),  s = 1
    thm2(beta, eps)   T = 2^u N^min(beta-eps, 1+eps),   z in [N^b, 32 N^b),  s = 2^-u
"""

from __future__ import annotations

import json
import math
from collections import defaultdict
from dataclasses import dataclass, field

import numpy as np

from ._windows import first_true
from .errors import BadParams, GuardExceeded, OutOfBand, QuadratureDivergence, TooShort
from .kernels import WeightKernel, fourier
from .parallel import pmap
from .sequences import RealSeq

DYADIC_GUARD = 10 ** 9
BILINEAR_RTOL = 1e-6
_PHI_LAG_CUTOFF = 40.0  # exp(-40^2/2) underflows any contribution


def abs_differences(seq: RealSeq) -> np.ndarray:
    """``|x_m - x_n|`` for all m != n (size N^2 - N, duplicates kept)."""
    if seq.N < 2:
        raise TooShort("abs_differences needs N >= 2")
    x = seq.values
    D = np.abs(x[:, None] - x[None, :])
    return D[~np.eye(seq.N, dtype=bool)]


def j_range(u: int) -> np.ndarray:
    if u < 1:
        raise BadParams("u must be >= 1")
    return np.arange(2 ** (u - 1), 2 ** u)


def dyadic_hit(diff):
    """Shared comparator for ``|j1 z_m - j2 z_n| < 1``."""
    return np.abs(diff) < 1.0


def _restrict(z, band):
    z = np.asarray(z, dtype=np.float64)
    if band is None:
        return z
    lo, hi = band
    return z[(z >= lo) & (z < hi)]


def count_dyadic_brute(z, u: int, band=None) -> int:
    """Exact count of ``(m, n, j1, j2)`` with ``2^(u-1) <= j1, j2 < 2^u``.

    Loops over ``(m, j1)``; for each ``z_n`` the admissible ``j2`` lie in a
    window of width ``2/z_n`` around ``j1 z_m / z_n``, so only a handful of
    candidates are tested.
    """
    z = _restrict(z, band)
    if z.size * 4 ** u > DYADIC_GUARD:
        raise GuardExceeded(f"|z| 4^u = {z.size * 4 ** u} exceeds {DYADIC_GUARD}")
    js = j_range(u)
    jlo, jhi = int(js[0]), int(js[-1])
    if z.size == 0:
        return 0
    width = int(math.ceil(2.0 / float(z.min()))) + 2
    total = 0
    for zm in z:
        for j1 in js:
            target = j1 * zm
            start = np.floor((target - 1.0) / z) - 1
            for off in range(width + 1):
                j2 = start + off
                ok = (j2 >= jlo) & (j2 <= jhi)
                hit = ok & dyadic_hit(target - j2 * z)
                total += int(np.count_nonzero(hit))
    return total


def count_dyadic(z, u: int, band=None, workers=None) -> int:
    """Same count as :func:`count_dyadic_brute`, by sorting ``z`` once and
    window-searching ``j2 z`` for every ``(j1, j2)``: O(4^u |z| log |z|).
    Rows ``j1`` are spread over ``workers``; the integer sum is order-free."""
    z = np.sort(_restrict(z, band))
    if z.size * 4 ** u > DYADIC_GUARD:
        raise GuardExceeded(f"|z| 4^u = {z.size * 4 ** u} exceeds {DYADIC_GUARD}")
    if z.size == 0:
        return 0

    def row(j1):
        base = j1 * z
        total = 0
        for j2 in j_range(u):
            a = j2 * z
            lo = first_true(a, base, 0, np.searchsorted(a, base - 1.0, "right"), lambda d: d > -1.0)
            hi = first_true(a, base, 0, np.searchsorted(a, base + 1.0, "left"), lambda d: ~(d < 1.0))
            total += int((hi - lo).sum())
        return total

    return sum(pmap(row, [int(j) for j in j_range(u)], workers))


def dyadic_solutions(z, u: int, band=None):
    """All solutions as arrays ``(z_m, z_n, j1, j2)`` (small inputs only)."""
    z = np.sort(_restrict(z, band))
    if z.size * 4 ** u > DYADIC_GUARD:
        raise GuardExceeded(f"|z| 4^u = {z.size * 4 ** u} exceeds {DYADIC_GUARD}")
    out = ([], [], [], [])
    for j1 in j_range(u):
        for j2 in j_range(u):
            diff = j1 * z[:, None] - j2 * z[None, :]
            m, n = np.nonzero(dyadic_hit(diff))
            out[0].append(z[m])
            out[1].append(z[n])
            out[2].append(np.full(m.size, j1))
            out[3].append(np.full(m.size, j2))
    return tuple(np.concatenate(a) if a else np.empty(0) for a in out)


# --------------------------------------------------------------------------
# geometric binning


@dataclass
class DyadicBinning:
    T: float
    scale: float
    z_lo: float
    z_hi: float
    b: dict = field(default_factory=dict)    # k -> count
    a2: dict = field(default_factory=dict)   # h -> sum of b_k^2 (exact integer)
    N: int = 0
    u: int = 1
    mode: str = ""
    params: dict = field(default_factory=dict)

    @property
    def log_q(self) -> float:
        return math.log1p(1.0 / self.T)

    @property
    def a(self) -> dict:
        return {h: math.sqrt(v) for h, v in self.a2.items()}

    def h_of(self, y: float) -> int:
        return h_index(y, self.T)

    def k_of(self, z: float) -> int:
        return int(math.floor(z / self.scale))

    def in_band(self, z: float) -> bool:
        return self.z_lo <= z < self.z_hi

    def diagnostics(self, **extra) -> dict:
        d = {
            "mode": self.mode,
            "T": self.T,
            "scale": self.scale,
            "band": [self.z_lo, self.z_hi if math.isfinite(self.z_hi) else None],
            "occupied_bins": len(self.b),
            "occupied_h": len(self.a2),
            "sum_b": int(sum(self.b.values())),
            "sum_b2": int(sum(v * v for v in self.b.values())),
        }
        d.update(extra)
        return d

    def dump(self, **extra) -> str:
        return json.dumps(self.diagnostics(**extra), sort_keys=True)


def interval_edge(h: int, T: float) -> int:
    """``ceil((1 + 1/T)^h)``; the one place the bin edges are computed."""
    return int(math.ceil(math.exp(h * math.log1p(1.0 / T))))


def h_index(y: float, T: float) -> int:
    """The h with ``y in I_h``, i.e. the largest h with ``ceil(q^h) <= y``.

    The log estimate is corrected against :func:`interval_edge` because the
    ceilinged edges make a pure log inversion off by one near integers.
    """
    if y < 1:
        raise OutOfBand(f"{y} is below the first interval [1, ...)")
    h = int(math.floor(math.log(math.floor(y)) / math.log1p(1.0 / T)))
    h = max(h, 0)
    while h > 0 and interval_edge(h, T) > y:
        h -= 1
    while interval_edge(h + 1, T) <= y:
        h += 1
    return h


def _mode_setup(N: int, u: int, mode: str, beta, eps):
    if u < 1:
        raise BadParams("u must be >= 1")
    if mode == "case1":
        if eps is None or not (0 < eps <= 0.25):
            raise BadParams("case1 needs eps in (0, 1/4]")
        T = 2 ** u * N ** (1 + eps / 2)
        # b_k = 0 for k < N^1.01
        return T, 1.0, float(math.ceil(N ** 1.01)), math.inf
    if beta is None or not (0.25 <= beta <= 1.01):
        raise BadParams("beta must lie in [1/4, 1.01]")
    lo = N ** beta
    if mode == "case2":
        return 2 ** u * N ** beta, 1.0, lo, 32 * lo
    if mode == "thm2":
        if eps is None or not (0 < eps <= 0.25):
            raise BadParams("thm2 needs eps in (0, 1/4]")
        T = 2 ** u * N ** min(beta - eps, 1 + eps)
        hi = math.inf if beta >= 1.01 else 32 * lo
        return T, 2.0 ** -u, lo, hi
    raise BadParams(f"unknown mode {mode!r}")


def build_binning(z, N: int, u: int, mode: str, beta: float | None = None, eps: float | None = None) -> DyadicBinning:
    """Bin the z-multiset for one dyadic level ``u`` under ``mode``."""
    T, scale, lo, hi = _mode_setup(N, u, mode, beta, eps)
    z = np.asarray(z, dtype=np.float64)
    zb = z[(z >= lo) & (z < hi)]
    ks, counts = np.unique(np.floor(zb / scale).astype(np.int64), return_counts=True)
    b = {int(k): int(c) for k, c in zip(ks, counts)}
    a2 = defaultdict(int)
    for k, c in b.items():
        a2[h_index(k * scale, T)] += c * c
    return DyadicBinning(T, scale, lo, hi, b, dict(a2), N, u, mode, {"beta": beta, "eps": eps})


def _a_arrays(bin: DyadicBinning):
    hs = np.array(sorted(bin.a2), dtype=np.int64)
    a = np.sqrt(np.array([bin.a2[h] for h in hs], dtype=np.float64))
    return hs, a


def eval_P(bin: DyadicBinning, t):
    """``P(t) = sum_h a_h (1 + 1/T)^(i h t)``."""
    hs, a = _a_arrays(bin)
    t = np.asarray(t, dtype=np.float64)
    ph = np.multiply.outer(t, hs * bin.log_q)
    out = np.exp(1j * ph) @ a
    return complex(out) if out.ndim == 0 else out


def _lag_sums(hs, a, max_lag):
    """``S(l) = sum_h a_h a_{h+l}`` for l = 0..max_lag."""
    pos = {int(h): i for i, h in enumerate(hs)}
    out = np.zeros(max_lag + 1)
    for lag in range(max_lag + 1):
        s = 0.0
        for i, h in enumerate(hs):
            j = pos.get(int(h) + lag)
            if j is not None:
                s += a[i] * a[j]
        out[lag] = s
    return out


def bilinear_form(bin: DyadicBinning) -> float:
    """``T sum_{h1,h2} a_h1 a_h2 Phi^(T log(1+1/T) (h1 - h2))``, the exact value
    of ``int |P(t)|^2 Phi(t/T) dt``."""
    hs, a = _a_arrays(bin)
    if hs.size == 0:
        return 0.0
    step = bin.T * bin.log_q
    max_lag = int(min(hs[-1] - hs[0], math.ceil(_PHI_LAG_CUTOFF / step)))
    S = _lag_sums(hs, a, max_lag)
    w = fourier(WeightKernel.gauss_phi(), step * np.arange(max_lag + 1))
    return float(bin.T * (S[0] * w[0] + 2.0 * np.dot(S[1:], w[1:])))


def p_norm_quadrature(bin: DyadicBinning, rtol: float = BILINEAR_RTOL):
    """Trapezoid estimate of ``int |P(t)|^2 Phi(t/T) dt`` on ``|t| <= 8T``
    alongside the exact bilinear form.

    Returns ``(quadrature, bilinear)``; raises QuadratureDivergence when they
    differ by more than ``rtol`` relative.
    """
    hs, a = _a_arrays(bin)
    exact = bilinear_form(bin)
    if hs.size == 0:
        return 0.0, exact
    T = bin.T
    omega = max(float(hs[-1] - hs[0]) * bin.log_q, 1e-300)
    # >= 16 samples per period of the fastest oscillation, and resolve Phi(t/T)
    dt = min(2 * math.pi / (16 * omega), T / 8.0)
    n = int(math.ceil(8 * T / dt))
    t = np.linspace(-8 * T, 8 * T, 2 * n + 1)
    dt = t[1] - t[0]
    freqs = (hs - hs[0]) * bin.log_q
    total = 0.0
    block = max(1, 4_000_000 // max(hs.size, 1))
    for s in range(0, t.size, block):
        tt = t[s:s + block]
        P = np.exp(1j * np.multiply.outer(tt, freqs)) @ a
        wts = np.exp(-0.5 * (tt / T) ** 2)
        total += float(np.dot(np.abs(P) ** 2, wts))
    # the endpoints carry weight exp(-32): plain sum equals the trapezoid rule
    quad = total * dt
    if abs(quad - exact) > rtol * max(abs(exact), 1e-300):
        raise QuadratureDivergence(f"quadrature {quad!r} vs bilinear {exact!r}")
    return quad, exact


# --------------------------------------------------------------------------
# the bin constraint and the bound it yields


def _ratio_gap(d: int, ratio: float, log_q: float) -> float:
    return abs(math.exp(d * log_q) - ratio)


def constraint_gap(bin: DyadicBinning, j1: int, j2: int, z_m: float, z_n: float) -> float:
    """``T |(1 + 1/T)^(h1 - h2) - j2/j1|`` for the bins holding z_m, z_n,
    after swapping so that ``j1 >= j2``."""
    for zz in (z_m, z_n):
        if not bin.in_band(zz):
            raise OutOfBand(f"z = {zz} outside [{bin.z_lo}, {bin.z_hi})")
    if j1 < j2:
        j1, j2, z_m, z_n = j2, j1, z_n, z_m
    h1 = bin.h_of(bin.k_of(z_m) * bin.scale)
    h2 = bin.h_of(bin.k_of(z_n) * bin.scale)
    return bin.T * _ratio_gap(h1 - h2, j2 / j1, bin.log_q)


def check_bin_constraint(bin: DyadicBinning, j1: int, j2: int, z_m: float, z_n: float) -> bool:
    """``|(1 + 1/T)^(h1 - h2) - j2/j1| <= 4/T`` for the bins holding z_m, z_n."""
    return constraint_gap(bin, j1, j2, z_m, z_n) <= 4.0


def allowed_shifts(bin: DyadicBinning, j1: int, j2: int) -> list[int]:
    """All ``d = h1 - h2`` passing the constraint for ``j1 >= j2``."""
    r = j2 / j1
    lq = bin.log_q
    tol = 4.0 / bin.T
    lo_r = r - tol
    d_hi = int(math.floor(math.log(r + tol) / lq)) + 2
    if lo_r > 0:
        d_lo = int(math.ceil(math.log(lo_r) / lq)) - 2
    else:
        hs = list(bin.a2) or [0]
        d_lo = min(hs) - max(hs) - 1
    return [d for d in range(d_lo, d_hi + 1) if _ratio_gap(d, r, lq) <= tol]


def dyadic_upper_bound(bin: DyadicBinning, u: int | None = None) -> float:
    """``sum_{j1, j2} sum_{(h1, h2) constrained} a_h1 a_h2`` over the dyadic block."""
    u = bin.u if u is None else u
    a = bin.a
    js = j_range(u)
    total = 0.0
    cache: dict[int, float] = {}

    def S(d):
        if d not in cache:
            cache[d] = sum(v * a.get(h - d, 0.0) for h, v in a.items())
        return cache[d]

    for j1 in js:
        for j2 in js:
            if j2 > j1:
                continue
            val = sum(S(d) for d in allowed_shifts(bin, int(j1), int(j2)))
            total += val if j1 == j2 else 2.0 * val
    return total


def cs_domination(bin: DyadicBinning, j1: int, j2: int) -> float:
    """Largest ratio ``sum_{k in I_h1} b_k b_{l(k)+v} / (a_h1 a_h2)`` over all
    (h1, h2, v), ``l(k) = ceil(j1 k / j2)``, ``-4 <= v <= 3``. Cauchy-Schwarz
    says it never exceeds 1."""
    if j1 < j2:
        j1, j2 = j2, j1
    b = bin.b
    hk = {k: bin.h_of(k * bin.scale) for k in b}
    acc = defaultdict(int)
    for k, bk in b.items():
        ell = -((-j1 * k) // j2)
        for v in range(-4, 4):
            k2 = ell + v
            b2 = b.get(k2)
            if b2:
                acc[(hk[k], hk[k2], v)] += bk * b2
    worst = 0.0
    for (h1, h2, _v), s in acc.items():
        worst = max(worst, s / math.sqrt(bin.a2[h1] * bin.a2[h2]))
    return worst


def capture_rate(bin: DyadicBinning, z, u: int | None = None):
    """How many brute solutions (inside the band) pass the constraint.

    Returns ``(passed, total, worst)`` with ``worst`` the largest
    :func:`constraint_gap` seen, i.e. the constant the constraint would need
    in place of 4 to capture every solution.
    """
    u = bin.u if u is None else u
    zm, zn, j1, j2 = dyadic_solutions(z, u, (bin.z_lo, bin.z_hi))
    gaps = [constraint_gap(bin, int(a), int(b), float(c), float(d)) for c, d, a, b in zip(zm, zn, j1, j2)]
    passed = sum(g <= 4.0 for g in gaps)
    return int(passed), len(gaps), max(gaps, default=0.0)


def p0_chain(bin: DyadicBinning, seq: RealSeq | None = None) -> dict:
    """The chain ``|P(0)| = sum a_h <= sum b_k <= sqrt(#unit bins) (sum c_a^2)^(1/2)``
    with ``c_a`` the unit-bin counts, plus the Cauchy-Schwarz bound
    ``(sum b_k)^2 <= #occupied * sum b_k^2``. With ``seq`` the pair counts are
    cross-checked against the localized energy (``sum c_a^2 <= 2 E_loc``)."""
    from .energy import energy_localized

    P0 = float(sum(bin.a.values()))
    sum_b = int(sum(bin.b.values()))
    sum_b2 = int(sum(v * v for v in bin.b.values()))
    unit = defaultdict(int)
    for k, c in bin.b.items():
        unit[int(math.floor(k * bin.scale))] += c
    if math.isfinite(bin.z_hi):
        n_unit = int(math.floor(bin.z_hi)) - int(math.floor(bin.z_lo)) + 1
    else:
        n_unit = (max(unit) - min(unit) + 1) if unit else 0
    sum_c2 = int(sum(v * v for v in unit.values()))
    out = {
        "P0": P0,
        "sum_b": sum_b,
        "sum_b2": sum_b2,
        "occupied": len(bin.b),
        "unit_bins": n_unit,
        "sum_c2": sum_c2,
        "cs_bound": math.sqrt(n_unit * sum_c2),
    }
    ok = P0 <= sum_b * (1 + 1e-12) and sum_b <= out["cs_bound"] * (1 + 1e-12)
    ok = ok and sum_b ** 2 <= len(bin.b) * sum_b2
    if seq is not None:
        hi = bin.z_hi
        e1 = energy_localized(seq, 1.0, bin.z_lo, hi)
        es = energy_localized(seq, bin.scale, bin.z_lo, hi) if bin.scale != 1.0 else e1
        out["E_loc_1"] = e1
        out["E_loc_scale"] = es
        ok = ok and sum_c2 <= 2 * e1 and sum_b2 <= 2 * es
    out["ok"] = bool(ok)
    return out
