"""Counter-style random streams for reproducible parallel campaigns.

Every unit of work (a block of consecutive sample indices, or one random
circulant) gets its own generator derived from
``(master_seed, experiment id, *key)`` through numpy's ``SeedSequence``.
The key never mentions a worker, so the numbers produced do not depend on
how blocks are scheduled.
"""

from __future__ import annotations

import numpy as np

from .errors import ConfigError

EXPERIMENT_IDS = {
    "eigen-fidelity": 1,
    "eigen-scaling": 2,
    "avg-permanent": 3,
    "good-fraction": 4,
    "good-mass": 5,
    "tv-probe": 6,
    "gen": 101,
    "dist": 102,
    "perm": 103,
    "verify": 104,
}

ENSEMBLE_IDS = {"circulant": 0, "haar": 1, "gaussian": 2}


def stream(master_seed: int, experiment: str, *key: int) -> np.random.Generator:
    if master_seed < 0 or master_seed >= 2**64:
        raise ConfigError("master_seed must be a 64-bit unsigned integer")
    ss = np.random.SeedSequence(
        entropy=int(master_seed), spawn_key=(EXPERIMENT_IDS[experiment], *map(int, key))
    )
    return np.random.Generator(np.random.PCG64(ss))


def blocks(samples: int, block_size: int) -> list[tuple[int, int]]:
    """``(block index, block length)`` pairs covering `samples` indices."""
    full, rest = divmod(int(samples), int(block_size))
    out = [(b, block_size) for b in range(full)]
    if rest:
        out.append((full, rest))
    return out
