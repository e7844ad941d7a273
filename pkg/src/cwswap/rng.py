"""Labelled, order-independent random streams derived from one master seed.

Each consumer asks for ``stream(master_seed, "source", "A")`` and gets a
Philox (counter-based) generator whose key depends only on the master seed
and the labels, never on how many other streams were drawn before.
"""

from __future__ import annotations

import zlib

import numpy as np

SeedLike = int | np.random.Generator | None


def _label_key(label) -> int:
    return zlib.crc32(str(label).encode("utf-8"))


def stream(master_seed: int, *labels) -> np.random.Generator:
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(_label_key(x) for x in labels))
    return np.random.Generator(np.random.Philox(ss))


def as_generator(seed: SeedLike, *labels) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(0 if seed is None else seed, *labels)
