"""Multi-type Cannings models and their offspring laws.

Count matrices follow one convention throughout: counts[k][l] = N_{k,l} is
the number of type-l children born to type-k parents, so rows are parent
types and columns offspring types. The population constraint
sum_k N_{k,l} = N_l is therefore a COLUMN-sum constraint.
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np

from app.errors import InvalidArgumentError
from app.models.tensor import MergeTensor

Counts = Tuple[Tuple[int, ...], ...]
Sampler = Callable[[np.random.Generator], Sequence[np.ndarray]]
MomentOracle = Callable[[MergeTensor], Union[Fraction, float]]


def _freeze_counts(counts: Sequence[Sequence[int]]) -> Counts:
    return tuple(tuple(int(v) for v in row) for row in counts)


@dataclass(frozen=True)
class WrightFisherLaw:
    """Each N_{k,l} offspring picks its type-k parent uniformly, independently."""
    counts: Counts
    name = "wright-fisher"

    def __post_init__(self):
        object.__setattr__(self, 'counts', _freeze_counts(self.counts))


@dataclass(frozen=True)
class MutationLaw:
    """Every parent has exactly one child; the child types of the N_k type-k
    parents are a uniform arrangement of N_{k,l} copies of each label l."""
    counts: Counts
    name = "mutation"

    def __post_init__(self):
        object.__setattr__(self, 'counts', _freeze_counts(self.counts))


@dataclass(frozen=True, eq=False)
class CustomLaw:
    """User-supplied offspring law.

    `sampler(rng)` returns, for every parent type k, an integer array of shape
    (d, N_k) holding nu_{k,l,i}. `moment_oracle(T)` optionally returns the
    joint descending factorial moment for a merge tensor T.
    """
    sampler: Optional[Sampler] = None
    moment_oracle: Optional[MomentOracle] = None
    description: str = "custom"
    name = "custom"


OffspringLaw = Union[WrightFisherLaw, MutationLaw, CustomLaw]


@dataclass(frozen=True)
class CanningsModel:
    """Type count d = len(N), subpopulation sizes N_k and an offspring law."""
    N: Tuple[int, ...]
    law: OffspringLaw

    def __post_init__(self):
        N = tuple(int(v) for v in self.N)
        object.__setattr__(self, 'N', N)
        if not N:
            raise InvalidArgumentError("at least one type is required")
        for k, size in enumerate(N):
            if size < 1:
                raise InvalidArgumentError(f"N_{k + 1} = {size} must be at least 1")
        if isinstance(self.law, CustomLaw):
            return

        counts = self.law.counts
        d = len(N)
        if len(counts) != d or any(len(row) != d for row in counts):
            raise InvalidArgumentError(f"counts must be a {d}x{d} matrix (rows: parent type, columns: offspring type)")
        for k in range(d):
            for l in range(d):
                if counts[k][l] < 0:
                    raise InvalidArgumentError(f"N_{{{k + 1},{l + 1}}} = {counts[k][l]} is negative")
        for l in range(d):
            column = [counts[k][l] for k in range(d)]
            if sum(column) != N[l]:
                raise InvalidArgumentError(
                    f"size1 column {l + 1}: {'+'.join(str(v) for v in column)} ≠ {N[l]}")
        if isinstance(self.law, MutationLaw):
            for k in range(d):
                if sum(counts[k]) != N[k]:
                    raise InvalidArgumentError(
                        f"mutation row {k + 1}: {'+'.join(str(v) for v in counts[k])} ≠ {N[k]}")

    @property
    def d(self) -> int:
        return len(self.N)

    @property
    def N_min(self) -> int:
        return min(self.N)

    @property
    def total_size(self) -> int:
        return sum(self.N)

    @property
    def has_counts(self) -> bool:
        """Deterministic count matrix available (built-in laws)."""
        return not isinstance(self.law, CustomLaw)

    @property
    def counts(self) -> Counts:
        if isinstance(self.law, CustomLaw):
            raise InvalidArgumentError("a custom law carries no count matrix")
        return self.law.counts

    def describe(self) -> str:
        sizes = ','.join(str(v) for v in self.N)
        if isinstance(self.law, CustomLaw):
            return f"{self.law.name}[{self.law.description}] N=({sizes})"
        rows = ' / '.join(','.join(str(v) for v in row) for row in self.law.counts)
        return f"{self.law.name} N=({sizes}) counts=({rows})"


@dataclass(frozen=True, eq=False)
class GenerationSample:
    """Offspring numbers of one generation: nu[k][l, i] = nu_{k,l,i}."""
    nu: Tuple[np.ndarray, ...]

    def offspring_totals(self) -> np.ndarray:
        """Matrix of sum_i nu_{k,l,i}, rows k and columns l."""
        return np.array([arr.sum(axis=1) for arr in self.nu])
