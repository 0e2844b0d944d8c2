"""
Seeded random streams

Every random quantity in the library is drawn from a numpy Generator built
from a SeedSequence. Named sub-streams and fixed-size chunk streams make
results independent of how work is scheduled across threads.
"""

import hashlib
import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, List, Optional, TypeVar, Union

import numpy as np

from config.settings import get_setting

logger = logging.getLogger(__name__)

SeedLike = Union[None, int, np.random.SeedSequence]
T = TypeVar("T")

MAX_SEED = 2 ** 64 - 1


def as_seed_sequence(seed: SeedLike) -> np.random.SeedSequence:
    """Normalize an int / SeedSequence / None into a SeedSequence"""
    if isinstance(seed, np.random.SeedSequence):
        return seed
    if seed is None:
        seed = get_setting("DEFAULT_SEED")
    if not 0 <= int(seed) <= MAX_SEED:
        raise ValueError(f"Seed must be a 64-bit unsigned integer, got {seed}")
    return np.random.SeedSequence(int(seed))


def make_rng(seed: SeedLike) -> np.random.Generator:
    """Generator for a seed-like value"""
    return np.random.Generator(np.random.PCG64(as_seed_sequence(seed)))


def _name_key(name: str) -> int:
    # Stable across processes, unlike hash()
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:4], "little")


class SeedStreams:
    """Named sub-streams derived from one master seed"""

    def __init__(self, master_seed: SeedLike = None):
        self.master = as_seed_sequence(master_seed)

    def seed_sequence(self, name: str) -> np.random.SeedSequence:
        """Child SeedSequence for a stream name"""
        return np.random.SeedSequence(
            self.master.entropy,
            spawn_key=tuple(self.master.spawn_key) + (_name_key(name),),
        )

    def rng(self, name: str) -> np.random.Generator:
        """Generator for a stream name"""
        return np.random.Generator(np.random.PCG64(self.seed_sequence(name)))


def chunk_sizes(total: int, chunk_size: Optional[int] = None) -> List[int]:
    """Split `total` into fixed-size chunks (the last one may be shorter)"""
    chunk_size = chunk_size or get_setting("CHUNK_SIZE", 4096)
    sizes = [chunk_size] * (total // chunk_size)
    if total % chunk_size:
        sizes.append(total % chunk_size)
    return sizes


def map_chunks(
    func: Callable[[np.random.Generator, int], T],
    total: int,
    seed: SeedLike,
    workers: Optional[int] = None,
    chunk_size: Optional[int] = None,
) -> List[T]:
    """
    Run func(rng, size) over fixed-size chunks of `total` items.

    Chunk i always receives the i-th child of the seed, and results come back
    in chunk order, so the output does not depend on the number of workers.
    """
    workers = workers or get_setting("N_WORKERS", 1)
    sizes = chunk_sizes(total, chunk_size)
    children = as_seed_sequence(seed).spawn(len(sizes))
    rngs = [np.random.Generator(np.random.PCG64(child)) for child in children]

    logger.debug(f"Running {len(sizes)} chunks of up to {sizes[0] if sizes else 0} items on {workers} workers")

    if workers <= 1 or len(sizes) <= 1:
        return [func(rng, size) for rng, size in zip(rngs, sizes)]

    with ThreadPoolExecutor(max_workers=workers) as executor:
        return list(executor.map(func, rngs, sizes))
