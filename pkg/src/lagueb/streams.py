"""Reproducible random streams keyed by (master seed, sample size, replication).

Each stream is a Philox counter-based generator whose key is derived from the
triple through :class:`numpy.random.SeedSequence`, so streams can be created
in any order, on any thread, without coordination.
"""

from __future__ import annotations

import numpy as np

# sample sizes are >= 1, so n = 0 is free for auxiliary streams
PILOT_KEY = (0, 0)


def stream(master_seed, n, rep):
    """Generator for replication ``rep`` at sample size ``n``."""
    seq = np.random.SeedSequence(int(master_seed), spawn_key=(int(n), int(rep)))
    return np.random.Generator(np.random.Philox(seq))


def pilot_stream(master_seed):
    return stream(master_seed, *PILOT_KEY)


def stream_key(master_seed, n, rep):
    """The Philox key words of a stream, for collision checks."""
    state = stream(master_seed, n, rep).bit_generator.state["state"]
    return tuple(int(k) for k in state["key"])
