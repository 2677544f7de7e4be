"""
Weight measures and kernels with compactly supported (or Gaussian) Fourier
transforms, all under the convention ``f^(xi) = int f(x) exp(-i xi x) dx``:

    mu          2 sin^2(x/2) / (pi x^2)           -> max(1 - |xi|, 0)
    mu2gamma    sin^2(gamma x) / (pi gamma x^2)   -> max(1 - |xi|/(2 gamma), 0)
    gauss_phi   exp(-x^2/2)                       -> sqrt(2 pi) exp(-xi^2/2)
    conv_K      sin^2(a u) / (pi a u^2),
                a = (1 + eps/4) log N              -> max(1 - |xi|/(2a), 0)

plus an exact-in-distribution sampler for mu.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.special import sici

from .errors import InvalidSpec

_SERIES_CUTOFF = 2.0 ** -26


@dataclass(frozen=True)
class WeightKernel:
    kind: str
    gamma: float | None = None
    N: int | None = None
    eps: float | None = None

    def __post_init__(self):
        if self.kind == "mu2gamma":
            if self.gamma is None or not self.gamma > 0:
                raise InvalidSpec("mu2gamma needs gamma > 0")
        elif self.kind == "conv_K":
            if self.N is None or self.N < 16 or self.eps is None or not self.eps > 0:
                raise InvalidSpec("conv_K needs N >= 16 and eps > 0")
        elif self.kind not in ("mu", "gauss_phi"):
            raise InvalidSpec(f"unknown kernel {self.kind!r}")

    @classmethod
    def mu(cls):
        return cls("mu")

    @classmethod
    def mu2gamma(cls, gamma: float):
        return cls("mu2gamma", gamma=float(gamma))

    @classmethod
    def gauss_phi(cls):
        return cls("gauss_phi")

    @classmethod
    def conv_K(cls, N: int, eps: float):
        return cls("conv_K", N=int(N), eps=float(eps))

    @property
    def half_width(self) -> float:
        """The ``a`` in ``sin^2(a x)/(pi a x^2)``; the transform lives on [-2a, 2a]."""
        if self.kind == "mu":
            return 0.5
        if self.kind == "mu2gamma":
            return self.gamma
        if self.kind == "conv_K":
            return (1.0 + self.eps / 4.0) * math.log(self.N)
        return math.inf

    @property
    def support(self) -> float:
        return 2.0 * self.half_width


def _fejer_density(x, a):
    """``sin^2(a x) / (pi a x^2)`` with the removable singularity filled in."""
    x = np.asarray(x, dtype=np.float64)
    ax = a * x
    small = np.abs(ax) < _SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sin(ax) ** 2 / (np.pi * a * x * x)
    # sin^2(y)/y^2 = 1 - y^2/3 + O(y^4)
    out = np.where(small, a / np.pi * (1.0 - ax * ax / 3.0), out)
    return out


def density(k: WeightKernel, x):
    if k.kind == "gauss_phi":
        out = np.exp(-0.5 * np.asarray(x, dtype=np.float64) ** 2)
    else:
        out = _fejer_density(x, k.half_width)
    return float(out) if np.ndim(out) == 0 else out


def fourier(k: WeightKernel, xi):
    xi = np.asarray(xi, dtype=np.float64)
    if k.kind == "gauss_phi":
        out = math.sqrt(2 * math.pi) * np.exp(-0.5 * xi * xi)
    else:
        out = np.maximum(1.0 - np.abs(xi) / k.support, 0.0)
    return float(out) if np.ndim(out) == 0 else out


def mu_cdf(x):
    """Closed-form distribution function of mu:
    ``1/2 + Si(x)/pi - (1 - cos x)/(pi x)``."""
    x = np.asarray(x, dtype=np.float64)
    si, _ = sici(x)
    small = np.abs(x) < _SERIES_CUTOFF
    with np.errstate(divide="ignore", invalid="ignore"):
        corr = np.where(small, x / 2.0, (1.0 - np.cos(x)) / x)
    out = 0.5 + (si - corr) / np.pi
    return float(out) if out.ndim == 0 else out


def mu_tail_mass(A: float) -> float:
    """``mu((A, inf))`` for A > 0."""
    si, _ = sici(A)
    return 0.5 - si / math.pi + (1.0 - math.cos(A)) / (math.pi * A)


@lru_cache(maxsize=4)
def _inverse_cdf_table(split: float, nodes: int):
    xs = np.linspace(-split, split, nodes)
    F = mu_cdf(xs)
    # the CDF is flat at the zeros of the density, so drop repeated levels
    keep = np.concatenate([[True], np.diff(F) > 0])
    return PchipInterpolator(F[keep], xs[keep]), F[keep][0], F[keep][-1]


class MuSampler:
    """i.i.d. draws from mu.

    ``|x| <= split`` is handled by inverting a 2**16-node table of the exact
    CDF with monotone cubic interpolation; the two tails are sampled exactly
    by rejection from the Pareto envelope ``2/(pi x^2)`` on ``(split, inf)``
    (acceptance probability ``(1 - cos x)/2``).
    """

    def __init__(self, seed=None, split: float = 200.0, nodes: int = 2 ** 16, rng=None):
        self.rng = rng if rng is not None else np.random.default_rng(seed)
        self.split = float(split)
        self.tail = mu_tail_mass(self.split)
        self._inv, self._lo, self._hi = _inverse_cdf_table(self.split, int(nodes))

    def _tail(self, count: int) -> np.ndarray:
        out = np.empty(0)
        while out.size < count:
            need = count - out.size
            n = max(16, int(2.2 * need))
            # Pareto: P(X > x) = split / x on (split, inf)
            x = self.split / (1.0 - self.rng.random(n))
            keep = self.rng.random(n) < 0.5 * (1.0 - np.cos(x))
            out = np.concatenate([out, x[keep]])
        return out[:count]

    def sample(self, count: int) -> np.ndarray:
        count = int(count)
        if count < 1:
            raise InvalidSpec("count must be >= 1")
        u = self.rng.random(count)
        out = np.empty(count)
        core = (u >= self.tail) & (u < 1.0 - self.tail)
        # rescale the core uniforms onto the tabulated CDF range
        uc = self._lo + (u[core] - self.tail) / (1.0 - 2 * self.tail) * (self._hi - self._lo)
        out[core] = self._inv(uc)
        n_tail = count - int(core.sum())
        if n_tail:
            t = self._tail(n_tail)
            sign = np.where(u[~core] < self.tail, -1.0, 1.0)
            out[~core] = sign * t
        return out


def sample_mu(rng_seed, count: int) -> np.ndarray:
    """``count`` i.i.d. draws from mu, reproducible for a given seed."""
    return MuSampler(rng_seed).sample(count)


def conv_K_lower_bound(N: int, eps: float, rN: float) -> float:
    """``1 - log(rN) / ((1 + eps/4) log N)``: the floor of ``K^(log j1 j2)`` for
    ``1 <= j1, j2 <= rN``."""
    return 1.0 - math.log(rN) / ((1.0 + eps / 4.0) * math.log(N))
