"""
Selberg majorant and minorant trigonometric polynomials of the periodic
indicator of ``[-s/N, s/N]``.

Construction (Vaaler): with ``psi(x) = {x} - 1/2`` and the interval
``[-d, d]``, ``1(x) = 2d + psi(-d - x) + psi(x - d)`` at continuity points.
Replacing ``psi`` by Vaaler's degree-K approximation and adding or removing
its Fejer-kernel error envelope gives

    c_0    = 2d +- 1/(K+1)
    c_j    = phi(|j|/(K+1)) sin(2 pi j d) / (pi j)
             +- (1 - |j|/(K+1)) cos(2 pi j d) / (K+1),        1 <= |j| <= K

where ``phi(t) = pi t (1 - t) cot(pi t) + t`` lies in [0, 1].
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import CheckFailed, IntervalTooWide, InvalidSpec, NotReal

IMAG_TOL = 1e-10
SANDWICH_SLACK = -1e-10


@dataclass(frozen=True, eq=False)
class TrigPoly:
    """``sum_{|j| <= K} c_j e(j x)``; ``coeffs[j + K]`` holds ``c_j``."""

    K: int
    coeffs: np.ndarray
    s: float | None = None
    N: int | None = None
    sign: str | None = None  # "plus", "minus", "centered" or None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        if c.shape != (2 * self.K + 1,):
            raise InvalidSpec(f"expected {2 * self.K + 1} coefficients, got {c.shape}")
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)

    def c(self, j: int) -> complex:
        if abs(j) > self.K:
            return 0j
        return complex(self.coeffs[j + self.K])

    @property
    def c0(self) -> float:
        return float(self.coeffs[self.K].real)

    @property
    def positive(self) -> np.ndarray:
        """``c_1 .. c_K``."""
        return self.coeffs[self.K + 1:]

    def is_hermitian(self, tol: float = 1e-14) -> bool:
        return bool(np.allclose(self.coeffs[::-1], np.conj(self.coeffs), atol=tol, rtol=0))

    def __call__(self, x):
        return eval_trigpoly(self, x)

    def to_dict(self) -> dict:
        return {
            "K": self.K,
            "s": self.s,
            "N": self.N,
            "sign": self.sign,
            "coeffs": [[float(z.real), float(z.imag)] for z in self.coeffs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "TrigPoly":
        coeffs = np.array([complex(re, im) for re, im in d["coeffs"]])
        return cls(int(d["K"]), coeffs, d.get("s"), d.get("N"), d.get("sign"))

    @classmethod
    def from_json(cls, text: str) -> "TrigPoly":
        return cls.from_dict(json.loads(text))


def from_coeffs(coeffs_by_j: dict, K: int | None = None) -> TrigPoly:
    """Build a TrigPoly from a ``{j: c_j}`` mapping (missing entries are zero)."""
    K = max(abs(j) for j in coeffs_by_j) if K is None else K
    c = np.zeros(2 * K + 1, dtype=np.complex128)
    for j, v in coeffs_by_j.items():
        c[j + K] = v
    return TrigPoly(K, c)


def vaaler_phi(t):
    t = np.asarray(t, dtype=np.float64)
    return np.pi * t * (1.0 - t) / np.tan(np.pi * t) + t


def coefficient_bound(K: int, s: float, N: int, j):
    """``min(2s/N, 1/(pi |j|)) + 1/(K+1)`` (the j = 0 entry uses 2s/N)."""
    j = np.abs(np.asarray(j, dtype=np.float64))
    with np.errstate(divide="ignore"):
        tail = np.where(j > 0, 1.0 / (np.pi * np.maximum(j, 1)), np.inf)
    return np.minimum(2.0 * s / N, tail) + 1.0 / (K + 1)


def build_selberg(K: int, s: float, N: int, sign: str, check: bool = True) -> TrigPoly:
    """Degree-K Selberg polynomial for ``1_[-s/N, s/N]`` (``sign`` in {"plus", "minus"}).

    With ``check=True`` the result is rejected unless it dominates (or is
    dominated by) the indicator on the verification grid, has mean
    ``2s/N +- 1/(K+1)`` and obeys the coefficient bound.
    """
    if sign not in ("plus", "minus"):
        raise InvalidSpec("sign must be 'plus' or 'minus'")
    if K < 1 or int(K) != K:
        raise InvalidSpec("K must be a positive integer")
    if not s > 0:
        raise InvalidSpec("s must be positive")
    d = s / N
    if 2 * d >= 1:
        raise IntervalTooWide(f"2s/N = {2 * d} >= 1")
    K = int(K)
    pm = 1.0 if sign == "plus" else -1.0
    j = np.arange(1, K + 1, dtype=np.float64)
    t = j / (K + 1)
    cj = vaaler_phi(t) * np.sin(2 * np.pi * j * d) / (np.pi * j) + pm * (1.0 - t) * np.cos(2 * np.pi * j * d) / (K + 1)
    coeffs = np.concatenate([cj[::-1], [2 * d + pm / (K + 1)], cj]).astype(np.complex128)
    p = TrigPoly(K, coeffs, float(s), int(N), sign)
    if check:
        report = check_selberg(p)
        if not report["ok"]:
            raise CheckFailed(f"Selberg self-check failed: {report}")
    return p


def _reduce(x):
    x = np.asarray(x, dtype=np.float64)
    return x - np.floor(x)


def eval_trigpoly(p: TrigPoly, x):
    """Evaluate at scalar or array ``x``; raises NotReal on an imaginary residue."""
    xr = _reduce(x)
    flat = np.atleast_1d(xr).ravel()
    K = p.K
    out = np.empty(flat.shape, dtype=np.complex128)
    j = np.arange(1, K + 1)
    cpos = p.coeffs[K + 1:]
    cneg = p.coeffs[:K][::-1]
    step = max(1, 2_000_000 // max(K, 1))
    for a in range(0, flat.size, step):
        ph = np.outer(flat[a:a + step], j)
        ph -= np.floor(ph)
        e = np.exp(2j * np.pi * ph)
        out[a:a + step] = p.coeffs[K] + e @ cpos + np.conj(e) @ cneg
    resid = np.abs(out.imag).max() if out.size else 0.0
    if resid > IMAG_TOL:
        raise NotReal(f"imaginary residue {resid:.3g} exceeds {IMAG_TOL}")
    vals = out.real.reshape(np.shape(xr))
    return float(vals) if vals.ndim == 0 else vals


def eval_grid(p: TrigPoly, L: int) -> np.ndarray:
    """Values at ``x = k/L``, k = 0..L-1, by FFT (requires ``L >= 2K+1``)."""
    K = p.K
    if L < 2 * K + 1:
        raise InvalidSpec("grid too coarse for an FFT evaluation")
    buf = np.zeros(L, dtype=np.complex128)
    buf[:K + 1] = p.coeffs[K:]
    buf[L - K:] = p.coeffs[:K]
    vals = np.fft.ifft(buf) * L
    resid = np.abs(vals.imag).max()
    if resid > IMAG_TOL:
        raise NotReal(f"imaginary residue {resid:.3g} exceeds {IMAG_TOL}")
    return vals.real


def center(p: TrigPoly) -> TrigPoly:
    """Remove the mean: zero ``c_0`` and mark the result centered."""
    if p.sign == "centered":
        raise InvalidSpec("polynomial is already centered")
    c = p.coeffs.copy()
    c[p.K] = 0
    return TrigPoly(p.K, c, p.s, p.N, "centered", {"from": p.sign})


def indicator(x, s: float, N: int):
    """Periodic indicator of the closed interval ``[-s/N, s/N]``."""
    return _ind(x, s / N)


def _ind(x, d):
    f = _reduce(x)
    return (np.minimum(f, 1.0 - f) <= d).astype(np.float64)


def verification_grid(K: int, s: float, N: int) -> np.ndarray:
    d = s / N
    L = 10 * (K + 1)
    edges = np.array([d, -d, d + 1e-9, d - 1e-9, -d + 1e-9, -d - 1e-9])
    return np.concatenate([np.arange(L) / L, edges])


def check_selberg(p: TrigPoly) -> dict:
    """Evaluate the three contracts of a Selberg polynomial.

    Returns a dict with the worst sandwich slack on the grid, the error of the
    mean, the worst coefficient-bound defect, and an ``ok`` flag.
    """
    K, s, N = p.K, p.s, p.N
    pm = 1.0 if p.sign == "plus" else -1.0
    d = s / N
    L = 10 * (K + 1)
    grid_vals = eval_grid(p, L)
    x_grid = np.arange(L) / L
    edges = verification_grid(K, s, N)[L:]
    vals = np.concatenate([grid_vals, eval_trigpoly(p, edges)])
    ind = _ind(np.concatenate([x_grid, edges]), d)
    if p.sign == "plus":
        slack = float(np.min(vals - ind))
        nonneg = float(np.min(vals))
    else:
        slack = float(np.min(ind - vals))
        nonneg = 0.0
    mean_err = abs(p.c0 - (2 * d + pm / (K + 1)))
    j = np.arange(-K, K + 1)
    defect = coefficient_bound(K, s, N, j) - np.abs(p.coeffs)
    min_defect = float(defect.min())
    ok = (
        slack >= SANDWICH_SLACK
        and nonneg >= SANDWICH_SLACK
        and mean_err <= 1e-12
        and min_defect >= 0
        and p.is_hermitian()
    )
    return {"K": K, "s": s, "N": N, "sign": p.sign, "sandwich_slack": slack, "min_value": nonneg,
            "mean_error": mean_err, "min_coeff_defect": min_defect, "ok": bool(ok)}
