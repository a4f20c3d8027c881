#!/usr/bin/env python3
"""
RNG: counter-based (Philox) substreams keyed by (seed, stream, block index)

Every draw lives in a fixed-size block whose generator depends only on the
master seed, a stream tag and the block index, so a batch is identical for a
given (seed, n) whatever the number of worker threads.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

BLOCK_SIZE = 1 << 16

# Stream tags
STREAM_STABLE = 1
STREAM_ATTRACTION = 2
STREAM_XTILDE = 3
STREAM_SN = 4
STREAM_TAYLOR = 5
STREAM_EXPERIMENT = 6
STREAM_BOOTSTRAP = 7


def substream(seed: int, *key: int) -> np.random.Generator:
    """Generator for the substream (seed, *key)"""
    seq = np.random.SeedSequence(entropy=int(seed) & 0xFFFFFFFFFFFFFFFF, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(seq))


def fill_blocks(
    n: int,
    seed: int,
    stream: int,
    draw: Callable[[np.random.Generator, int], np.ndarray],
    threads: int = 1,
    block_size: int = BLOCK_SIZE,
) -> np.ndarray:
    """Fill n draws block by block; draw(gen, size) produces one block"""
    out = np.empty(n, dtype=float)
    starts = range(0, n, block_size)

    def work(index: int, start: int):
        stop = min(start + block_size, n)
        out[start:stop] = draw(substream(seed, stream, index), stop - start)

    if threads <= 1 or n <= block_size:
        for index, start in enumerate(starts):
            work(index, start)
        return out

    with ThreadPoolExecutor(max_workers=threads) as executor:
        futures = [executor.submit(work, index, start) for index, start in enumerate(starts)]
        for future in futures:
            future.result()
    return out
