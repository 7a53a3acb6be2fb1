"""Counter-style random streams.

Every walk (or label sequence) draws from a stream addressed by
``(seed, domain, index)``, so a batch can be split across workers in any way
and still come out identical to a serial run.
"""

from __future__ import annotations

import numpy as np

WALK_DOMAIN = 1
MARKOV_DOMAIN = 2

# rows per keyed block; a row's values never depend on which other rows are asked for
STREAM_BLOCK = 1024


def stream_uniforms(seed: int, domain: int, indices, n_draws: int) -> np.ndarray:
    """Return a ``(len(indices), n_draws)`` array of uniforms in [0, 1).

    Row ``idx`` is row ``idx % STREAM_BLOCK`` of a block drawn from a
    generator keyed by ``(seed, domain, idx // STREAM_BLOCK, n_draws)``.
    """
    indices = np.asarray(indices, dtype=np.int64).ravel()
    if indices.size and indices.min() < 0:
        raise ValueError("stream indices must be non-negative")
    out = np.empty((indices.size, n_draws), dtype=np.float64)
    blocks = indices // STREAM_BLOCK
    for blk in np.unique(blocks):
        rows = np.flatnonzero(blocks == blk)
        table = derived_rng(seed, domain, int(blk), n_draws).random((STREAM_BLOCK, n_draws))
        out[rows] = table[indices[rows] % STREAM_BLOCK]
    return out


def derived_rng(seed: int, *keys: int) -> np.random.Generator:
    """A numpy Generator keyed by ``seed`` plus any number of integer tags."""
    return np.random.default_rng([int(seed) & 0xFFFFFFFFFFFFFFFF, *[int(k) for k in keys]])


def categorical_from_uniform(probs: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Inverse-CDF draw, one per row of ``probs`` (rows need not be normalized)."""
    cdf = np.cumsum(probs, axis=1)
    total = cdf[:, -1:]
    idx = (cdf <= u[:, None] * total).sum(axis=1)
    # guard against rounding pushing past the last positive entry
    last = probs.shape[1] - 1 - np.argmax(probs[:, ::-1] > 0, axis=1)
    return np.minimum(idx, last)
