"""Sorted-array window search with an exact comparator fix-up.

``np.searchsorted(a, a_i + w)`` compares ``a_k`` against a rounded sum,
while the counting predicates compare the rounded difference ``a_k - a_i``
against ``w``. The fix-up walks each index until the predicate itself agrees,
so every counting path sees the same ties.
"""

from __future__ import annotations

import numpy as np


def first_true(a, base, lo, start, pred, hi=None):
    """Smallest k in ``[lo, hi]`` with ``pred(a[k] - base)`` true, where
    ``pred`` is monotone (false then true) in k; ``start`` is a guess."""
    n = len(a) if hi is None else hi
    idx = np.clip(start, lo, n)
    while True:
        left = idx - 1
        m = (left >= lo) & pred(np.asarray(a[np.clip(left, 0, n - 1)]) - base)
        if not m.any():
            break
        idx = idx - m
    while True:
        m = (idx < n) & ~pred(np.asarray(a[np.clip(idx, 0, n - 1)]) - base)
        if not m.any():
            break
        idx = idx + m
    return idx
