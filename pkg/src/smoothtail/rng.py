"""Counter-based random streams.

All randomness in the package flows through `stream()`: a Philox generator
keyed by the global seed plus a structural path (channel, generation, chunk,
...). Streams depend only on their key, never on draw order elsewhere, so any
part of a run can be recomputed in isolation and results are bit-identical
regardless of how work is split across threads.

Slot-level work is always partitioned into fixed chunks of `CHUNK` slots and
each chunk gets its own stream; worker count never enters the key.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from numpy.random import Generator, Philox, SeedSequence

# Fixed chunk width for per-slot work. Part of the output contract: changing
# it changes every sampled stream.
CHUNK = 1 << 16

# Channel ids namespace the streams of the major subsystems.
CH_WEIGHTS = 1      # standalone weight draws
CH_ENGINE = 2       # pool iteration
CH_TREE = 3         # branching-tree expansion
CH_TAIL = 4         # paired transform samples for tail estimation
CH_BOOTSTRAP = 5    # bootstrap resampling
CH_SPECIAL = 6      # mixture-solution sampling
CH_MOMENTS = 7      # Monte Carlo moment evaluation
CH_DEGEN = 8        # degeneracy probing


def stream(seed: int, *path: int) -> Generator:
    """Return the generator keyed by (seed, *path).

    Identical arguments give bit-identical generators on every platform.
    """
    return Generator(Philox(SeedSequence(entropy=seed, spawn_key=path)))


def chunk_bounds(total: int):
    """Yield (chunk_index, start, stop) covering range(total) in CHUNK pieces."""
    for c in range(0, (total + CHUNK - 1) // CHUNK):
        start = c * CHUNK
        yield c, start, min(start + CHUNK, total)


def map_chunks(fn, total: int, threads: int = 1) -> list:
    """Apply fn(chunk_index, start, stop) over all chunks, in index order.

    The result list is ordered by chunk index whatever the thread count, so
    reductions over it are deterministic.
    """
    bounds = list(chunk_bounds(total))
    if threads > 1 and len(bounds) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(lambda b: fn(*b), bounds))
    return [fn(*b) for b in bounds]
