"""Reproducible random streams for trial-by-trial simulation.

Every stochastic choice in a simulated experiment (setting draws, hidden
variables, detector losses, and so on) reads from its own named stream
of uniform variates, and stream element ``t`` is a pure function of the
experiment seed, the field name, and the trial index ``t``.  Streams are
materialized in fixed-size blocks, each produced by a Philox generator
keyed on ``(seed, field, block)``.  Because no block depends on how much
of any other block was consumed, the variates for a given trial range
are identical whether they are generated in one shot, in chunks, or by
several worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

from .errors import DomainError

FIELDS = (
    "a_setting",
    "b_setting",
    "lam",
    "resp_a",
    "resp_b",
    "joint",
    "empty",
    "det_a",
    "det_b",
    "flip_a",
    "flip_b",
    "forge",
)

_FIELD_INDEX = {name: i for i, name in enumerate(FIELDS)}

BLOCK_SIZE = 1 << 18


def _block_uniforms(seed: int, field_index: int, block: int, upto: int) -> np.ndarray:
    """Return the first ``upto`` variates of one block of one stream."""
    ss = np.random.SeedSequence((seed, field_index, block))
    gen = np.random.Generator(np.random.Philox(ss))
    return gen.random(upto)


class FieldStreams:
    """Named uniform streams derived from a single experiment seed."""

    def __init__(self, seed: int):
        if not isinstance(seed, (int, np.integer)) or isinstance(seed, bool):
            raise DomainError(f"seed must be an integer, got {seed!r}")
        if seed < 0:
            raise DomainError(f"seed must be nonnegative, got {seed}")
        self.seed = int(seed)

    def uniforms(
        self, field: str, n: int, start: int = 0, threads: int = 1
    ) -> np.ndarray:
        """Uniform variates for trials ``start`` through ``start + n - 1``.

        The result depends only on ``(seed, field, start, n)``; the
        ``threads`` argument changes how the work is divided, never the
        values.
        """
        if field not in _FIELD_INDEX:
            raise DomainError(f"unknown stream field {field!r}")
        if n < 0:
            raise DomainError(f"stream length must be nonnegative, got {n}")
        if start < 0:
            raise DomainError(f"stream start must be nonnegative, got {start}")
        if threads < 1:
            raise DomainError(f"thread count must be positive, got {threads}")
        out = np.empty(n, dtype=np.float64)
        if n == 0:
            return out
        fidx = _FIELD_INDEX[field]
        first_block = start // BLOCK_SIZE
        last_block = (start + n - 1) // BLOCK_SIZE

        def fill(block: int) -> None:
            blk_start = block * BLOCK_SIZE
            lo = max(start, blk_start)
            hi = min(start + n, blk_start + BLOCK_SIZE)
            values = _block_uniforms(self.seed, fidx, block, hi - blk_start)
            out[lo - start : hi - start] = values[lo - blk_start :]

        blocks = range(first_block, last_block + 1)
        if threads == 1 or len(blocks) == 1:
            for block in blocks:
                fill(block)
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                list(pool.map(fill, blocks))
        return out

    def coins(
        self, field: str, p, n: int, start: int = 0, threads: int = 1
    ) -> np.ndarray:
        """Bernoulli draws with success probability ``p`` (scalar or array)."""
        p = np.asarray(p, dtype=np.float64)
        if np.any(p < 0.0) or np.any(p > 1.0):
            raise DomainError("coin probability must lie in [0, 1]")
        return self.uniforms(field, n, start, threads) < p
