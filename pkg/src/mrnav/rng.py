"""Deterministic random-stream derivation.

Every stochastic component draws from a substream addressed by integers
(root seed, agent index, step index, purpose tag), so results never depend
on scheduling or evaluation order.
"""
from __future__ import annotations

import numpy as np

# purpose tags
PLAN = 0
EXEC = 1
JITTER = 2
SCENARIO = 3


def substream(root_seed: int, *path: int) -> np.random.Generator:
    """Generator for the substream addressed by (root_seed, *path)."""
    ss = np.random.SeedSequence(entropy=int(root_seed),
                                spawn_key=tuple(int(p) for p in path))
    return np.random.Generator(np.random.PCG64(ss))


def derive_seed(*path: int) -> int:
    """Collapse an integer path into a single reproducible 63-bit seed."""
    ss = np.random.SeedSequence(entropy=[int(p) for p in path])
    return int(ss.generate_state(1, np.uint64)[0] >> 1)
