"""Seeded random streams.

Every stochastic routine takes a numpy Generator; the helpers here derive
independent child streams from one 64-bit master seed so that results are
reproducible however the work is split.
"""
import logging
from typing import List, Optional

import numpy as np

logger = logging.getLogger(__name__)

SEED_MASK = (1 << 64) - 1


def fresh_seed() -> int:
    """A new 64-bit seed drawn from OS entropy."""
    seed = int(np.random.SeedSequence().entropy) & SEED_MASK
    logger.info(f"No seed given, generated seed {seed}")
    return seed


def resolve_seed(seed: Optional[int]) -> int:
    if seed is None:
        return fresh_seed()
    return int(seed) & SEED_MASK


def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def spawn_rngs(seed: int, count: int) -> List[np.random.Generator]:
    """`count` independent generators spawned from the master seed."""
    children = np.random.SeedSequence(seed).spawn(count)
    return [np.random.Generator(np.random.PCG64(child)) for child in children]
