"""Root-seed splitting scheme.

Every random quantity in the simulator is drawn from a generator obtained
through :func:`spawn_generator`, keyed by a domain constant plus optional
indices (e.g. pulse number, trial block).  Two runs with the same root seed
therefore produce bit-identical results regardless of evaluation order or
parallelism.
"""

from __future__ import annotations

import numpy as np

# Domain codes for the spawn key.  Keep stable: changing them changes streams.
DOMAIN_ENSEMBLE = 0
DOMAIN_JITTER = 1
DOMAIN_DETECTION = 2
DOMAIN_THERMALIZATION = 3
DOMAIN_RANDOM_PHASE = 4


def spawn_generator(seed: int, *key: int) -> np.random.Generator:
    """Return a PCG64 generator for (seed, key...); deterministic across platforms."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=key)))
