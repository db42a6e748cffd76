"""Constructions on merge tensors used by the consistency laws."""
import itertools
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from app.errors import InvalidArgumentError
from app.models.tensor import MergeTensor


def _check_type(T: MergeTensor, *types: int) -> None:
    for t in types:
        if not 0 <= t < T.d:
            raise InvalidArgumentError(f"type {t + 1} outside 1..{T.d}")


def _mutable(T: MergeTensor) -> List[List[List[int]]]:
    return [[list(cell) for cell in row] for row in T.entries]


def _freeze(d: int, j: Sequence[int], grid: List[List[List[int]]]) -> MergeTensor:
    return MergeTensor(d=d, j=tuple(j), entries=tuple(tuple(tuple(cell) for cell in row) for row in grid))


def empty_tensor(d: int) -> MergeTensor:
    """T_0: no child blocks, every cell the empty vector."""
    return MergeTensor(d=d, j=(0,) * d, entries=tuple(tuple(() for _ in range(d)) for _ in range(d)))


def diagonal_tensor(rows: Sequence[Sequence[int]]) -> MergeTensor:
    """Diagonal tensor with t_{k,k} = rows[k] and zero vectors off the diagonal."""
    d = len(rows)
    j = tuple(len(row) for row in rows)
    return MergeTensor.from_cells(d, j, {(k, k): tuple(rows[k]) for k in range(d)})


def unit_tensor(j: Sequence[int]) -> MergeTensor:
    """1_j: identity transition, all diagonal entries 1."""
    return diagonal_tensor([(1,) * jk for jk in j])


def twos_tensor(j: Sequence[int]) -> MergeTensor:
    """2_j: all diagonal entries 2."""
    return diagonal_tensor([(2,) * jk for jk in j])


def coalescence_extension(T: MergeTensor, k: int, l: int) -> MergeTensor:
    """T(k,l): one more k-block formed by a single l-block."""
    _check_type(T, k, l)
    grid = _mutable(T)
    for l2 in range(T.d):
        grid[k][l2].append(1 if l2 == l else 0)
    j = list(T.j)
    j[k] += 1
    return _freeze(T.d, j, grid)


def increment(T: MergeTensor, k: int, l: int, s: int) -> MergeTensor:
    """T(k,l,s): one more l-block merging into the k-block s (0-based)."""
    _check_type(T, k, l)
    if not 0 <= s < T.j[k]:
        raise InvalidArgumentError(f"block index {s + 1} outside 1..{T.j[k]} for type {k + 1}")
    grid = _mutable(T)
    grid[k][l][s] += 1
    return _freeze(T.d, T.j, grid)


def tensor_leq(T: MergeTensor, T2: MergeTensor) -> bool:
    """Entrywise order over the common index range, requiring j <= j2."""
    if T.d != T2.d:
        raise InvalidArgumentError(f"tensors over different type counts ({T.d} vs {T2.d})")
    if any(a > b for a, b in zip(T.j, T2.j)):
        return False
    return all(
        T.entries[k][l][s] <= T2.entries[k][l][s]
        for k in range(T.d) for l in range(T.d) for s in range(T.j[k])
    )


def pair_coalescence_tensor(k: int, l1: int, l2: int, d: int) -> MergeTensor:
    """Tensor of two blocks (types l1, l2) merging into one k-block."""
    for t in (k, l1, l2):
        if not 0 <= t < d:
            raise InvalidArgumentError(f"type {t + 1} outside 1..{d}")
    j = tuple(1 if t == k else 0 for t in range(d))
    if l1 == l2:
        cells = {(k, l1): (2,)}
    else:
        cells = {(k, l1): (1,), (k, l2): (1,)}
    return MergeTensor.from_cells(d, j, cells)


def same_up_to_permutation(T: MergeTensor, T2: MergeTensor) -> bool:
    """Equality up to independent permutations of every cell t_{k,l}."""
    if T.d != T2.d or T.j != T2.j:
        return False
    return all(
        sorted(T.entries[k][l]) == sorted(T2.entries[k][l])
        for k in range(T.d) for l in range(T.d)
    )


def slot_permutations(T: MergeTensor) -> Iterator[MergeTensor]:
    """All distinct tensors sigma(T) for per-(k,l) permutations sigma."""
    cells = [(k, l) for k in range(T.d) for l in range(T.d)]
    options = [sorted(set(itertools.permutations(T.entries[k][l]))) for k, l in cells]
    for choice in itertools.product(*options):
        grid = [[None] * T.d for _ in range(T.d)]
        for (k, l), cell in zip(cells, choice):
            grid[k][l] = list(cell)
        yield _freeze(T.d, T.j, grid)


def strip_zero_slots(T: MergeTensor) -> MergeTensor:
    """Drop the k-slots that no block merges into."""
    j = []
    grid = [[[] for _ in range(T.d)] for _ in range(T.d)]
    for k in range(T.d):
        keep = [s for s, total in enumerate(T.slot_totals(k)) if total > 0]
        j.append(len(keep))
        for l in range(T.d):
            grid[k][l] = [T.entries[k][l][s] for s in keep]
    return _freeze(T.d, j, grid)


def random_tensor(d: int, total: int, rng: np.random.Generator) -> MergeTensor:
    """An abstract tensor with sum_l i_l = total and every slot receiving a block."""
    j = [0] * d
    grid = [[[] for _ in range(d)] for _ in range(d)]
    remaining = total
    while remaining > 0:
        k = int(rng.integers(d))
        size = int(rng.integers(1, remaining + 1))
        split = rng.multinomial(size, [1.0 / d] * d)
        j[k] += 1
        for l in range(d):
            grid[k][l].append(int(split[l]))
        remaining -= size
    return _freeze(d, j, grid)


def diagonal_tensors(d: int, total: int, min_entry: int = 1) -> Iterator[MergeTensor]:
    """Diagonal tensors with nonincreasing rows, entries >= min_entry and sum `total`."""
    def rows_for(remaining: int, cap: int) -> Iterator[Tuple[int, ...]]:
        yield ()
        for first in range(min(remaining, cap), max(min_entry, 1) - 1, -1):
            for rest in rows_for(remaining - first, first):
                yield (first,) + rest

    def fill(k: int, remaining: int) -> Iterator[List[Tuple[int, ...]]]:
        if k == d:
            if remaining == 0:
                yield []
            return
        for row in rows_for(remaining, remaining):
            for tail in fill(k + 1, remaining - sum(row)):
                yield [row] + tail

    for rows in fill(0, total):
        yield diagonal_tensor(rows)
