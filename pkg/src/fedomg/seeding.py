"""Deterministic seed derivation.

Every random stream in the package is derived from the experiment seed
plus structural indices (round, client, epoch, purpose tag) through
``numpy.random.SeedSequence``, so results are independent of execution
order and reproducible across platforms.
"""

from __future__ import annotations

import numpy as np

_MASK = 0xFFFFFFFFFFFFFFFF


def derive_seed(*parts: int) -> int:
    """Mix integer parts into a single 64-bit stream seed."""
    ss = np.random.SeedSequence([int(p) & _MASK for p in parts])
    return int(ss.generate_state(2, np.uint32).view(np.uint64)[0])


def derive_rng(*parts: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(p) & _MASK for p in parts]))
