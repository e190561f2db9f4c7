"""Seeded random streams split into fixed-size chunks.

Chunk ``i`` of a run always draws from child ``i`` of ``SeedSequence(seed)``
using the counter-based Philox generator, so results are identical whatever
number of worker threads processes the chunks.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

import numpy as np

CHUNK = 1 << 15


def chunk_sizes(total, chunk=CHUNK):
    full, rest = divmod(int(total), chunk)
    return [chunk] * full + ([rest] if rest else [])


def chunk_generators(seed, n_chunks):
    children = np.random.SeedSequence(seed).spawn(n_chunks)
    return [np.random.Generator(np.random.Philox(child)) for child in children]


def map_chunks(fn, total, seed, threads=1, chunk=CHUNK):
    """Apply ``fn(rng, size)`` to every chunk; results in chunk order."""
    sizes = chunk_sizes(total, chunk)
    gens = chunk_generators(seed, len(sizes))
    if threads and threads > 1 and len(sizes) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, gens, sizes))
    return [fn(g, s) for g, s in zip(gens, sizes)]


def chunked_sum(fn, total, seed, threads=1, chunk=CHUNK):
    return sum(map_chunks(fn, total, seed, threads=threads, chunk=chunk))


def generator(seed, *keys):
    """Philox generator for a seed and an optional path of integer keys."""
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in keys))
    return np.random.Generator(np.random.Philox(ss))
