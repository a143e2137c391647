"""Counter-based random streams for reproducible parallel sampling.

Every estimator draws its randomness through :func:`batch_generator`, a
Philox generator keyed by (master seed, stream id) whose 256-bit counter
is offset by the batch index.  A batch therefore produces the same values
no matter which worker executes it, and the merged result of a run is a
pure function of (seed, N) independent of scheduling.
"""

import numpy as np

# Batches use the two high counter words, leaving 2^128 draws per batch.
_MASK = (1 << 64) - 1


def batch_generator(seed: int, stream: int, batch: int) -> np.random.Generator:
    """Generator for a fixed (seed, stream, batch) triple."""
    key = np.array([seed & _MASK, stream & _MASK], dtype=np.uint64)
    counter = np.array([0, 0, batch & _MASK, (batch >> 64) & _MASK], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))
