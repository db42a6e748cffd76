"""Enumeration and algebra of block-labeled partitions P_{n,E}."""
import itertools
import logging
from functools import lru_cache
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from app.config import config
from app.errors import EnumerationCapError, InvalidArgumentError
from app.models.partition import LabeledPartition
from app.models.tensor import MergeTensor
from app.utils.combinatorics import labeled_partition_count

logger = logging.getLogger(__name__)

Unlabeled = Tuple[Tuple[int, ...], ...]


def check_enumeration_cap(n: int, d: int) -> None:
    if n < 1 or d < 1:
        raise InvalidArgumentError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    if n > config.max_sample_size:
        raise EnumerationCapError(
            f"n = {n} exceeds the enumeration cap of {config.max_sample_size}")
    if d > config.max_types:
        raise EnumerationCapError(
            f"d = {d} exceeds the type cap of {config.max_types}")


def _set_partitions(n: int) -> Iterator[Unlabeled]:
    """Unlabeled partitions of [n] via restricted growth strings."""
    def grow(prefix: List[int], blocks_used: int) -> Iterator[List[int]]:
        if len(prefix) == n:
            yield prefix
            return
        for b in range(blocks_used + 1):
            yield from grow(prefix + [b], max(blocks_used, b + 1))

    for rgs in grow([], 0):
        blocks: Dict[int, List[int]] = {}
        for element, b in enumerate(rgs, start=1):
            blocks.setdefault(b, []).append(element)
        yield tuple(tuple(blocks[b]) for b in sorted(blocks))


@lru_cache(maxsize=64)
def _enumerate(n: int, d: int) -> Tuple[LabeledPartition, ...]:
    unlabeled = sorted(_set_partitions(n), key=lambda p: (len(p), p))
    states = []
    for blocks in unlabeled:
        for labels in itertools.product(range(d), repeat=len(blocks)):
            states.append(LabeledPartition(n=n, d=d, blocks=tuple(zip(blocks, labels))))
    logger.debug(f"Enumerated {len(states)} labeled partitions for n={n}, d={d}")
    return tuple(states)


def enumerate_partitions(n: int, d: int) -> List[LabeledPartition]:
    """
    Every element of P_{n,E} exactly once.

    Ordered by block count, then by the unlabeled canonical partition, then
    by the tuple of block labels; for n = d = 2 this is the familiar order
    {12}:1, {12}:2, {1}{2}:11, {1}{2}:12, {1}{2}:21, {1}{2}:22.

    Args:
        n: Sample size
        d: Number of types

    Returns:
        List of LabeledPartition in canonical state order
    """
    check_enumeration_cap(n, d)
    return list(_enumerate(n, d))


def count_partitions(n: int, d: int) -> int:
    """|P_{n,E}| from the closed form, without enumerating."""
    if n < 1 or d < 1:
        raise InvalidArgumentError(f"need n >= 1 and d >= 1, got n={n}, d={d}")
    return labeled_partition_count(n, d)


def restrict(pi: LabeledPartition, m: int) -> LabeledPartition:
    """Natural restriction of pi to [m]; labels travel with the surviving blocks."""
    if not 1 <= m <= pi.n:
        raise InvalidArgumentError(f"restriction size m = {m} outside 1..{pi.n}")
    if m == pi.n:
        return pi
    blocks = []
    for elements, label in pi.blocks:
        kept = tuple(e for e in elements if e <= m)
        if kept:
            blocks.append((kept, label))
    return LabeledPartition(n=m, d=pi.d, blocks=tuple(blocks))


def _check_permutation(sigma: Sequence[int], n: int) -> None:
    if len(sigma) != n or sorted(sigma) != list(range(1, n + 1)):
        raise InvalidArgumentError(f"{tuple(sigma)} is not a permutation of [{n}]")


def apply_permutation(sigma: Sequence[int], pi: LabeledPartition) -> LabeledPartition:
    """sigma(pi); sigma is given in one-line notation, sigma[i-1] = sigma(i)."""
    _check_permutation(sigma, pi.n)
    return LabeledPartition(
        n=pi.n, d=pi.d,
        blocks=tuple((tuple(sigma[e - 1] for e in elements), label) for elements, label in pi.blocks),
    )


def compose(sigma: Sequence[int], tau: Sequence[int]) -> Tuple[int, ...]:
    """One-line notation of sigma after tau."""
    _check_permutation(sigma, len(sigma))
    _check_permutation(tau, len(sigma))
    return tuple(sigma[tau[i] - 1] for i in range(len(tau)))


def remove_labels(pi: LabeledPartition) -> Unlabeled:
    """The label removal r_n(pi): block structure only."""
    return pi.unlabeled


def is_coarsening(pi: LabeledPartition, pi2: LabeledPartition) -> bool:
    """pi is contained in pi2: every block of pi2 is a union of blocks of pi."""
    owner = {}
    for index, (elements, _) in enumerate(pi2.blocks):
        for e in elements:
            owner[e] = index
    return all(len({owner[e] for e in elements}) == 1 for elements, _ in pi.blocks)


def merge_structure(pi: LabeledPartition, pi2: LabeledPartition) -> Optional[MergeTensor]:
    """
    Merge tensor of a one-step transition pi -> pi2.

    i_{k,l,s} counts the l-blocks of pi that end up in the s-th k-block of
    pi2 (k-blocks indexed by order of appearance). Returns None when pi2 is
    not a coarsening of pi.

    Args:
        pi: Current state
        pi2: Candidate next state over the same n and d

    Returns:
        MergeTensor carrying j = k-block counts of pi2, or None
    """
    if pi.n != pi2.n or pi.d != pi2.d:
        raise InvalidArgumentError(
            f"partitions differ in size or type count: (n={pi.n}, d={pi.d}) vs (n={pi2.n}, d={pi2.d})")
    if not is_coarsening(pi, pi2):
        return None

    d = pi.d
    j = pi2.block_counts()
    slot_of = {}
    seen_per_type = [0] * d
    for elements, k in pi2.blocks:
        for e in elements:
            slot_of[e] = (k, seen_per_type[k])
        seen_per_type[k] += 1

    grid = [[[0] * j[k] for _ in range(d)] for k in range(d)]
    for elements, l in pi.blocks:
        k, s = slot_of[elements[0]]
        grid[k][l][s] += 1
    return MergeTensor(d=d, j=j, entries=tuple(tuple(tuple(cell) for cell in row) for row in grid))


def block_counts(pi: LabeledPartition) -> Tuple[int, ...]:
    return pi.block_counts()


def type_preserving_permutations(pi: LabeledPartition) -> Iterator[Tuple[int, ...]]:
    """Permutations of [n] mapping every element onto an element of the same block type."""
    types = [pi.label_of(e) for e in range(1, pi.n + 1)]
    for sigma in itertools.permutations(range(1, pi.n + 1)):
        if all(types[sigma[i] - 1] == types[i] for i in range(pi.n)):
            yield sigma
