"""Deterministic random-stream derivation and blocked Monte Carlo execution.

Replications are grouped into fixed-size blocks.  Block ``b`` of a run draws
from a generator seeded by ``(master_seed, domain, b)``, so results are
bit-identical for any worker count: threads only decide which worker handles
a block, never the draws inside it.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

BLOCK_SIZE = 4096

# Domain tags keep the streams of different operations disjoint even when
# they share a master seed.
DOMAIN_COUNTING = 1
DOMAIN_CHAIN = 2
DOMAIN_PATH = 3
DOMAIN_EXPECTED_TV = 4
DOMAIN_SAMPLES = 5


def block_generator(seed: int, domain: int, index: int) -> np.random.Generator:
    """Generator for block `index` of the stream `(seed, domain)`."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(domain, index))
    return np.random.Generator(np.random.PCG64(ss))


def block_sizes(reps: int, block: int = BLOCK_SIZE) -> list[int]:
    """Split `reps` replications into fixed-size blocks (last may be short)."""
    full, rem = divmod(reps, block)
    sizes = [block] * full
    if rem:
        sizes.append(rem)
    return sizes


def map_blocks(
    fn: Callable[[np.random.Generator, int], np.ndarray],
    reps: int,
    seed: int,
    domain: int,
    threads: int = 1,
) -> list[np.ndarray]:
    """Run `fn(generator, count)` over every block, in index order.

    The returned list is ordered by block index regardless of scheduling,
    so any reduction over it is reproducible.
    """
    sizes = block_sizes(reps)
    jobs = [(b, m) for b, m in enumerate(sizes)]
    if threads <= 1 or len(jobs) == 1:
        return [fn(block_generator(seed, domain, b), m) for b, m in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, block_generator(seed, domain, b), m) for b, m in jobs]
        return [f.result() for f in futures]


def concat_blocks(parts: Sequence[np.ndarray]) -> np.ndarray:
    return np.concatenate(parts) if len(parts) > 1 else np.asarray(parts[0])


def derived_seed(seed: int, *key: int) -> int:
    """Integer sub-seed for the stream `(seed, key...)`, stable across runs."""
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


def float_key(t: float) -> int:
    """Bit pattern of a float, usable as a deterministic stream key."""
    return int(np.float64(t).view(np.uint64))
