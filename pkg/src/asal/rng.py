"""Counter-based random number generation.

Every stochastic component draws from a Philox generator keyed by
(seed, stream_id). Philox is counter-based, so the sequence for a given
key is identical on every platform and independent of how many other
streams were consumed, which keeps parallel population evaluation
reproducible regardless of worker scheduling.
"""

from __future__ import annotations

import numpy as np

_MASK64 = (1 << 64) - 1


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Return a Generator for the (seed, stream_id) pair.

    Identical arguments yield identical sequences in any process.
    Distinct stream_ids give statistically independent streams.
    """
    key = ((int(stream_id) & _MASK64) << 64) | (int(seed) & _MASK64)
    return np.random.Generator(np.random.Philox(key=key))
