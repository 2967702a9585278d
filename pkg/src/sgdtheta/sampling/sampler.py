"""Reproducible mini-batch index sampling."""

import copy

import numpy as np

from ..exceptions import InvalidBatchError
from .rng import CounterRNG

__all__ = ["IndexSampler", "sample_batch"]


class IndexSampler:
    """Seeded stream of index batches.

    Batch ``n`` holds ``batch_size`` distinct indices from ``range(N)``
    (Floyd's subset algorithm on counters ``n * batch_size + k``), returned in
    ascending order. Batches are independent of each other, so indices are
    drawn with replacement across batches. ``position`` is the next batch
    number; :meth:`clone` forks the stream at the current position.
    """

    def __init__(self, seed, n_equations, batch_size=1, stream="batches"):
        if n_equations < 1:
            raise InvalidBatchError("need at least one equation")
        if not 1 <= batch_size <= n_equations:
            raise InvalidBatchError(f"batch size {batch_size} not in [1, {n_equations}]")
        self.seed = int(seed)
        self.n_equations = int(n_equations)
        self.batch_size = int(batch_size)
        self.stream = stream
        self.rng = CounterRNG(seed, stream)
        self.position = 0

    def batch(self, n):
        N, b = self.n_equations, self.batch_size
        if b == N:
            return np.arange(N)
        draws = self.rng.uint64(np.arange(n * b, (n + 1) * b, dtype=np.uint64))
        chosen = set()
        for k, j in enumerate(range(N - b, N)):
            t = (int(draws[k]) * (j + 1)) >> 64
            chosen.add(j if t in chosen else t)
        return np.array(sorted(chosen), dtype=np.int64)

    def next_batch(self):
        out = self.batch(self.position)
        self.position += 1
        return out

    def clone(self):
        return copy.deepcopy(self)


def sample_batch(sampler, n):
    """Indices of batch ``n`` for ``sampler``."""
    return sampler.batch(n)
