"""
Expectation and variance of the smoothed pair sum

    F(alpha) = (1/N) sum_{m != n} f(alpha x_m - alpha x_n)

for a trigonometric polynomial f, with alpha weighted by mu, plus the
end-to-end convergence experiment for R2(s).

F is evaluated through power sums: with ``S_j = sum_n e(j y_n)`` and
``y_n = alpha x_n mod 1``,

    F = (1/N) [c_0 (N^2 - N) + sum_{j != 0} c_j (|S_j|^2 - N)].
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.special import roots_legendre

from .circle import frac_mod1, frac_parts, pair_correlation
from .errors import InvalidSpec, TailTooFat
from .kernels import MuSampler, density, WeightKernel, mu_tail_mass
from .parallel import pmap
from .seeding import substream
from .selberg import TrigPoly
from .sequences import RealSeq, SequenceSpec, materialize

MC_BLOCK = 64
QUAD_WINDOW = 50.0
_MATMUL_BYTES = 32 << 20


# --------------------------------------------------------------------------
# pair sums


def _sym_weights(p: TrigPoly) -> np.ndarray:
    """``w_j = c_j + c_{-j}`` for j = 1..K."""
    K = p.K
    return p.coeffs[K + 1:] + p.coeffs[:K][::-1]


def power_sums(y: np.ndarray, K: int) -> np.ndarray:
    """``S_j = sum_n e(j y_n)`` for j = 1..K, ``y`` in [0, 1).

    ``S`` is a product ``V @ W`` with ``V[b, n] = e(b B y_n)`` and
    ``W[n, c] = e(c y_n)``, so the cost is one complex matrix product.
    """
    y = np.asarray(y, dtype=np.float64)
    if K < 1:
        return np.zeros(0, dtype=np.complex128)
    B = max(1, int(math.isqrt(K)))
    nb = K // B + 1
    out = np.empty(nb * B, dtype=np.complex128)
    W = _e(np.multiply.outer(y, np.arange(B)))
    rows = max(1, _MATMUL_BYTES // (16 * max(y.size, 1)))
    for a in range(0, nb, rows):
        b = np.arange(a, min(nb, a + rows)) * B
        V = _e(np.multiply.outer(b, y))
        out[a * B:(a * B + V.shape[0] * B)] = (V @ W).ravel()
    return out[1:K + 1]


def _e(t):
    t = t - np.floor(t)
    return np.exp(2j * np.pi * t)


def pair_sum(seq: RealSeq, alpha: float, p: TrigPoly) -> float:
    """``(1/N) sum_{m != n} p(alpha (x_m - x_n))`` in O(N K)."""
    N = seq.N
    if N < 2:
        return 0.0
    S = power_sums(frac_parts(seq, alpha), p.K)
    val = p.c(0) * (N * N - N) + np.dot(_sym_weights(p), np.abs(S) ** 2 - N)
    return float(val.real) / N


def pair_sum_direct(seq: RealSeq, alpha: float, p: TrigPoly) -> float:
    """O(N^2 K) double-sum reference for :func:`pair_sum`."""
    y = frac_parts(seq, alpha)
    d = (y[:, None] - y[None, :])[~np.eye(seq.N, dtype=bool)]
    return float(np.sum(p(d))) / seq.N if d.size else 0.0


# --------------------------------------------------------------------------
# moments


@dataclass
class MomentReport:
    N: int
    r: float
    s: float
    expectation_estimate: float | None = None
    reference: float | None = None
    diff: float | None = None
    variance_estimate: float | None = None
    mc_std_error: float | None = None
    samples: int = 0
    seed: int | None = None
    method: str = ""
    error_bound: float | None = None
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def _report(seq, p, **kw) -> MomentReport:
    r = p.K / seq.N if p.N is None else p.K / p.N
    return MomentReport(N=seq.N, r=r, s=p.s if p.s is not None else float("nan"), **kw)


def _close_pairs(x: np.ndarray, width: float):
    """Positive differences ``x_n - x_m < width`` (m < n) of a sorted vector."""
    out = []
    for k in range(1, x.size):
        d = x[k:] - x[:-k]
        if d.min() >= width:
            # x is increasing, so every longer lag is wider still
            break
        out.append(d[d < width])
    return np.concatenate(out) if out else np.empty(0)


def _spectral(seq: RealSeq, p: TrigPoly) -> float:
    """Exact value of ``int F dmu``.

    Integrating ``e(j d alpha)`` against mu gives ``max(1 - 2 pi |j d|, 0)``,
    so only pairs with ``|d| < 1/(2 pi)`` feel the non-constant modes.
    """
    N = seq.N
    w = _sym_weights(p).real
    total = p.c0 * (N * N - N)
    d = _close_pairs(seq.values, 1.0 / (2 * np.pi))
    if d.size and p.K:
        J = np.minimum(np.floor(1.0 / (2 * np.pi * d)), p.K).astype(np.int64)
        # d is hit from both orders (m, n) and (n, m)
        W0 = np.concatenate([[0.0], np.cumsum(w)])
        W1 = np.concatenate([[0.0], np.cumsum(w * np.arange(1, p.K + 1))])
        total += 2.0 * float(np.sum(W0[J] - 2 * np.pi * d * W1[J]))
    return total / N


def _gl_panels(a: float, b: float, width: float, order: int):
    n = max(1, int(math.ceil((b - a) / width)))
    edges = np.linspace(a, b, n + 1)
    t, w = roots_legendre(order)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * t[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def _centered_values(seq, p, alphas, workers=None):
    """``F(alpha) - (N-1) c_0`` at many alphas (batched; for small N K)."""
    w = _sym_weights(p)
    N = seq.N
    alphas = np.asarray(alphas, dtype=np.float64)
    batch = max(1, (1 << 20) // max(N, 1))

    def chunk(a0):
        a = alphas[a0:a0 + batch]
        E = _e(frac_mod1(a[:, None], seq.values[None, :]))
        P = E.copy()
        acc = np.zeros(a.size)
        for j in range(p.K):
            acc += (w[j] * (np.abs(P.sum(axis=1)) ** 2 - N)).real
            P *= E
        return acc / N

    parts = pmap(chunk, list(range(0, alphas.size, batch)), workers)
    return np.concatenate(parts) if parts else np.empty(0)


def _tail_bound(seq: RealSeq, p: TrigPoly, A: float) -> float:
    """Bound on ``|int_{|alpha| > A} (F - (N-1) c_0) dmu|``.

    With ``rho(a) = (1 - cos a)/(pi a^2)`` and ``b != 0``,
    ``|int_A^inf cos(b a) a^-2 da| <= min(1/A, 2/(|b| A^2))``.
    """
    N = seq.N
    x = seq.values
    d = (x[None, :] - x[:, None])[np.triu_indices(N, 1)]
    j = np.arange(1, p.K + 1)
    cabs = np.abs(p.coeffs[p.K + 1:]) + np.abs(p.coeffs[:p.K][::-1])

    def B(b):
        with np.errstate(divide="ignore"):
            return np.minimum(1.0 / A, 2.0 / (np.abs(b) * A * A))

    total = 0.0
    for k in range(0, d.size, 4096):
        om = 2 * np.pi * np.multiply.outer(d[k:k + 4096], j)
        per = (2 / np.pi) * (B(om) + 0.5 * B(om + 1) + 0.5 * B(om - 1))
        total += float(np.sum(per @ cabs))
    # both orders (m, n) and (n, m)
    return 2.0 * total / N


def expectation_mu(seq: RealSeq, p: TrigPoly, quad_nodes: int = 16, method: str = "auto",
                   A: float = QUAD_WINDOW, tol: float | None = None, workers=None) -> MomentReport:
    """``int F(alpha) dmu(alpha)`` against the reference ``N c_0``.

    Methods:

    ``spectral``    exact, from the transform of mu (any N)
    ``quadrature``  Gauss-Legendre panels on ``|alpha| <= A`` (``quad_nodes``
                    per panel, one panel per oscillation of the fastest mode),
                    constant mode integrated exactly, and the oscillatory tail
                    bounded in ``error_bound``; small N only
    ``periodic``    integer sequences: F has period 1 and mu periodizes to
                    Lebesgue measure, so an equispaced rule on [0, 1) with more
                    nodes than the degree is exact
    ``auto``        periodic for integer sequences, else spectral
    """
    N = seq.N
    x = seq.values
    integer = bool(np.all(x == np.round(x)))
    if method == "auto":
        method = "periodic" if integer else "spectral"
    c0 = p.c0
    err = 0.0
    meta = {}
    if method == "spectral":
        est = _spectral(seq, p)
    elif method == "periodic":
        if not integer:
            raise InvalidSpec("periodic method needs an integer sequence")
        deg = int(p.K * (x[-1] - x[0]))
        L = deg + 1
        alphas = np.arange(L) / L
        est = (N - 1) * c0 + float(np.mean(_centered_values(seq, p, alphas, workers)))
        meta["nodes"] = L
    elif method == "quadrature":
        omega = 2 * np.pi * p.K * (x[-1] - x[0])
        width = min(2 * np.pi / max(omega, 1e-300), 1.0)
        nodes, weights = _gl_panels(-A, A, width, quad_nodes)
        vals = _centered_values(seq, p, nodes, workers)
        est = (N - 1) * c0 + float(np.dot(weights * density(WeightKernel.mu(), nodes), vals))
        err = _tail_bound(seq, p, A)
        meta.update(nodes=int(nodes.size), window=A, tail_mass=2 * mu_tail_mass(A))
        if tol is not None and err > tol:
            raise TailTooFat(f"tail bound {err:.3g} exceeds tolerance {tol:.3g} at A = {A}")
    else:
        raise InvalidSpec(f"unknown method {method!r}")
    ref = N * c0
    return _report(seq, p, expectation_estimate=est, reference=ref, diff=est - ref,
                   method=method, error_bound=err, meta=meta)


def _jackknife_se(v: np.ndarray) -> float:
    """Delete-one jackknife standard error of the mean."""
    n = v.size
    if n < 2:
        return 0.0
    loo = (v.sum() - v) / (n - 1)
    return float(math.sqrt((n - 1) / n * np.sum((loo - loo.mean()) ** 2)))


def _mc_block(seq, p, seed, b, count, antithetic=False):
    rng = substream(seed, "mc", b)
    alphas = MuSampler(rng=rng).sample(count)
    if antithetic:
        alphas = np.concatenate([alphas, -alphas])
    return alphas, np.array([pair_sum(seq, a, p) for a in alphas])


def variance_mc(seq: RealSeq, p: TrigPoly, samples: int, seed: int, workers=None,
                antithetic: bool = False) -> MomentReport:
    """Monte Carlo estimate of ``Var = int F(alpha)^2 dmu`` for a centered p.

    Samples come in blocks of 64, block b drawing from substream (mc, b), so
    the estimate does not depend on ``workers``. With ``antithetic`` every
    draw alpha is paired with -alpha.
    """
    if abs(p.c0) != 0.0:
        raise InvalidSpec("variance_mc needs a centered polynomial (c_0 = 0)")
    samples = int(samples)
    if samples < 1:
        raise InvalidSpec("samples must be >= 1")
    blocks = [(b, min(MC_BLOCK, samples - b * MC_BLOCK)) for b in range(-(-samples // MC_BLOCK))]
    res = pmap(lambda bc: _mc_block(seq, p, seed, bc[0], bc[1], antithetic), blocks, workers)
    F = np.concatenate([r[1] for r in res])
    sq = F * F
    return _report(seq, p, expectation_estimate=float(F.mean()), reference=0.0, diff=float(F.mean()),
                   variance_estimate=float(sq.mean()), mc_std_error=_jackknife_se(sq),
                   samples=int(F.size), seed=int(seed), method="mc",
                   meta={"antithetic": antithetic, "block": MC_BLOCK})


# --------------------------------------------------------------------------
# convergence experiment


def parse_sampler(text: str):
    """``mu``, ``uniform:lo:hi`` or ``fixed:a1,a2,...``; returns (kind, params)."""
    kind, _, rest = text.partition(":")
    if kind == "mu" and not rest:
        return "mu", ()
    if kind == "uniform":
        lo, hi = (float(v) for v in rest.split(":"))
        if not lo < hi:
            raise InvalidSpec("uniform sampler needs lo < hi")
        return "uniform", (lo, hi)
    if kind == "fixed" and rest:
        return "fixed", tuple(float(v) for v in rest.split(","))
    raise InvalidSpec(f"bad alpha sampler {text!r}")


def draw_alphas(sampler, count: int, seed: int) -> np.ndarray:
    kind, params = parse_sampler(sampler) if isinstance(sampler, str) else sampler
    rng = substream(seed, "alpha")
    if kind == "mu":
        return MuSampler(rng=rng).sample(count)
    if kind == "uniform":
        return rng.uniform(params[0], params[1], count)
    return np.array(params[:count] if count else params, dtype=np.float64)


@dataclass
class ConvergenceTable:
    rows: list = field(default_factory=list)      # (N, alpha, s, r2, dev)
    summary: list = field(default_factory=list)   # (N, s, mean_dev, max_dev)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "alpha", "s", "r2", "deviation"])
        for row in self.rows:
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3]), repr(row[4])])
        return buf.getvalue()

    def summary_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["N", "s", "mean_deviation", "max_deviation"])
        for row in self.summary:
            w.writerow([row[0], repr(row[1]), repr(row[2]), repr(row[3])])
        return buf.getvalue()

    def mean_deviation(self, N: int, s: float) -> float:
        for row in self.summary:
            if row[0] == N and row[1] == s:
                return row[2]
        raise KeyError((N, s))


def convergence_experiment(spec: SequenceSpec, s_list, N_list, alpha_sampler, seed: int,
                           n_alphas: int = 10, workers=None) -> ConvergenceTable:
    """R2(s) for every N and sampled alpha; deviation is ``|R2(s)/(2s) - 1|``.

    The same alphas (stream ``alpha``) are used for every N.
    """
    alphas = draw_alphas(alpha_sampler, n_alphas, seed)
    s_list = [float(s) for s in s_list]
    table = ConvergenceTable()
    for N in N_list:
        seq = materialize(spec, int(N))
        ests = pmap(lambda a: pair_correlation(seq, float(a), s_list), list(alphas), workers)
        devs = {s: [] for s in s_list}
        for a, est in zip(alphas, ests):
            for s, r2 in zip(s_list, est.r2):
                dev = abs(r2 / (2 * s) - 1.0)
                devs[s].append(dev)
                table.rows.append((int(N), float(a), s, float(r2), dev))
        for s in s_list:
            table.summary.append((int(N), s, float(np.mean(devs[s])), float(np.max(devs[s]))))
    return table
