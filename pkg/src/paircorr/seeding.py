"""One 64-bit seed, split into named, indexable substreams."""

from __future__ import annotations

import numpy as np

STREAMS = {"alpha": 0, "mc": 1, "perturb": 2, "instances": 3}


def substream(seed: int, name: str, *index: int) -> np.random.Generator:
    """Generator for stream ``name`` (and optional block indices) under ``seed``.

    Streams never overlap and do not depend on how many other streams were
    drawn, so results are independent of scheduling.
    """
    if name not in STREAMS:
        raise KeyError(f"unknown stream {name!r}")
    ss = np.random.SeedSequence(int(seed) & (2 ** 64 - 1), spawn_key=(STREAMS[name], *map(int, index)))
    return np.random.default_rng(ss)
