"""
Real sequences x_1 < x_2 < ... < x_N whose dilations alpha * x_n are studied mod 1.

A :class:`SequenceSpec` names a family (``power``, ``polynomial``, ``n_log_n``,
``n_plus_log_n``, ``lacunary``, ``explicit``); :func:`materialize` turns it
into an immutable :class:`RealSeq` carrying its measured minimal gap.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import InvalidSpec, NonIncreasing, SequenceOverflow, TooShort

KINDS = ("power", "polynomial", "n_log_n", "n_plus_log_n", "lacunary", "explicit")


@dataclass(frozen=True)
class SequenceSpec:
    kind: str
    params: dict = field(default_factory=dict)
    label: str = ""

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidSpec(f"unknown sequence kind {self.kind!r}")
        p = self.params
        if self.kind == "power":
            theta = float(p.get("theta", float("nan")))
            if not theta > 0:
                raise InvalidSpec("power requires theta > 0")
        elif self.kind == "lacunary":
            if not float(p.get("ratio", float("nan"))) > 1:
                raise InvalidSpec("lacunary requires ratio > 1")
        elif self.kind == "polynomial":
            coeffs = list(p.get("coeffs", []))
            if len(coeffs) < 2 or not float(coeffs[-1]) > 0:
                raise InvalidSpec("polynomial requires degree >= 1 and a positive leading coefficient")
        elif self.kind == "explicit":
            if len(p.get("values", [])) == 0:
                raise InvalidSpec("explicit sequence needs at least one value")
        if not self.label:
            object.__setattr__(self, "label", self.describe())

    # -- constructors -------------------------------------------------------

    @classmethod
    def power(cls, theta: float, label: str = "") -> "SequenceSpec":
        return cls("power", {"theta": float(theta)}, label)

    @classmethod
    def polynomial(cls, coeffs, label: str = "") -> "SequenceSpec":
        return cls("polynomial", {"coeffs": [float(c) for c in coeffs]}, label)

    @classmethod
    def lacunary(cls, ratio: float, label: str = "") -> "SequenceSpec":
        return cls("lacunary", {"ratio": float(ratio)}, label)

    @classmethod
    def explicit(cls, values, label: str = "") -> "SequenceSpec":
        return cls("explicit", {"values": [float(v) for v in values]}, label)

    @classmethod
    def n_log_n(cls) -> "SequenceSpec":
        return cls("n_log_n")

    @classmethod
    def n_plus_log_n(cls) -> "SequenceSpec":
        return cls("n_plus_log_n")

    @classmethod
    def parse(cls, text: str) -> "SequenceSpec":
        """Parse the compact command-line form, e.g. ``power:1.5``, ``poly:0,1,1``,
        ``lacunary:2``, ``n_log_n``, ``linear`` or ``file:values.txt``."""
        name, _, arg = text.partition(":")
        name = name.strip().lower()
        try:
            if name == "power":
                return cls.power(float(arg))
            if name == "linear":
                return cls.power(1.0, label="linear")
            if name in ("poly", "polynomial"):
                return cls.polynomial([float(c) for c in arg.split(",")])
            if name == "lacunary":
                return cls.lacunary(float(arg))
            if name in ("n_log_n", "nlogn"):
                return cls.n_log_n()
            if name in ("n_plus_log_n", "npluslogn"):
                return cls.n_plus_log_n()
            if name in ("file", "explicit"):
                return load_explicit(arg)
        except ValueError as exc:
            raise InvalidSpec(f"cannot parse sequence {text!r}: {exc}") from None
        raise InvalidSpec(f"cannot parse sequence {text!r}")

    # -- serialization ------------------------------------------------------

    def describe(self) -> str:
        p = self.params
        if self.kind == "power":
            return f"n^{p['theta']:g}"
        if self.kind == "polynomial":
            return "poly(" + ",".join(f"{c:g}" for c in p["coeffs"]) + ")"
        if self.kind == "lacunary":
            return f"{p['ratio']:g}^n"
        if self.kind == "n_log_n":
            return "n log n"
        if self.kind == "n_plus_log_n":
            return "n + log n"
        return f"explicit[{len(p['values'])}]"

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "params": dict(self.params), "label": self.label}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "SequenceSpec":
        return cls(d["kind"], dict(d.get("params", {})), d.get("label", ""))

    @classmethod
    def from_json(cls, text: str) -> "SequenceSpec":
        return cls.from_dict(json.loads(text))


def load_explicit(path, label: str = "") -> SequenceSpec:
    """Read a one-value-per-line text file (blank lines and ``#`` comments skipped)."""
    values = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            values.append(float(line))
    return SequenceSpec.explicit(values, label=label or Path(path).name)


@dataclass(frozen=True, eq=False)
class RealSeq:
    """Materialized strictly increasing sequence. ``values`` is read-only."""

    values: np.ndarray
    min_gap: float
    spec: SequenceSpec

    @property
    def N(self) -> int:
        return len(self.values)

    @property
    def slow_growth(self) -> bool:
        """True when some gap is below 1 (outside the regime of the growth assumption)."""
        return self.N >= 2 and self.min_gap < 1.0

    def __len__(self):
        return len(self.values)

    def head(self, M: int) -> "RealSeq":
        return _wrap(self.values[:M].copy(), self.spec)


def _evaluate(spec: SequenceSpec, N: int) -> np.ndarray:
    n = np.arange(1, N + 1, dtype=np.float64)
    p = spec.params
    with np.errstate(over="ignore", invalid="ignore"):
        if spec.kind == "power":
            # libm pow: within 1 ulp, exact when the result is representable
            return np.power(n, p["theta"])
        if spec.kind == "polynomial":
            out = np.zeros_like(n)
            for c in reversed(p["coeffs"]):
                out = out * n + c
            return out
        if spec.kind == "n_log_n":
            return n * np.log(n)
        if spec.kind == "n_plus_log_n":
            return n + np.log(n)
        if spec.kind == "lacunary":
            return np.power(p["ratio"], n)
    values = np.asarray(p["values"], dtype=np.float64)
    if N > len(values):
        raise InvalidSpec(f"explicit sequence has {len(values)} values, {N} requested")
    return values[:N].copy()


def _wrap(values: np.ndarray, spec: SequenceSpec) -> RealSeq:
    if not np.all(np.isfinite(values)):
        raise SequenceOverflow(f"{spec.label}: value exceeds the float64 range")
    if values[0] < 0 or (values[0] == 0 and spec.kind != "n_log_n"):
        raise InvalidSpec(f"{spec.label}: sequence values must be positive")
    gaps = np.diff(values)
    if gaps.size and not np.all(gaps > 0):
        bad = int(np.argmin(gaps))
        raise NonIncreasing(f"{spec.label}: x[{bad + 2}] <= x[{bad + 1}]")
    gap = float(gaps.min()) if gaps.size else math.inf
    values.setflags(write=False)
    return RealSeq(values, gap, spec)


def materialize(spec: SequenceSpec, N: int) -> RealSeq:
    """Evaluate ``x_1..x_N`` for ``spec``.

    Raises NonIncreasing when the formula is not strictly increasing on
    ``[1, N]`` and SequenceOverflow when a value is not finite.
    """
    if int(N) != N or N < 1:
        raise InvalidSpec("N must be a positive integer")
    return _wrap(_evaluate(spec, int(N)), spec)


def from_values(values, label: str = "") -> RealSeq:
    """Wrap an explicit array of values as a RealSeq."""
    return materialize(SequenceSpec.explicit(values, label=label), len(values))


def min_gap(seq: RealSeq) -> float:
    """Exact minimum of consecutive differences."""
    if seq.N < 2:
        raise TooShort("min_gap needs N >= 2")
    return float(np.diff(seq.values).min())
