"""Matrices and trajectories over labeled-partition state spaces."""
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from app.models.partition import LabeledPartition

Entry = Union[Fraction, float]

EXACT = "exact"
MONTE_CARLO = "monte-carlo"
LIMIT = "limit"


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Square matrix over an enumerated state list.

    `provenance` is one of exact, monte-carlo or limit. Monte-Carlo matrices
    also carry per-entry standard errors, the replicate count and the seed.
    """
    states: Tuple[LabeledPartition, ...]
    entries: Tuple[Tuple[Entry, ...], ...]
    provenance: str = EXACT
    stderr: Optional[Tuple[Tuple[float, ...], ...]] = None
    reps: Optional[int] = None
    seed: Optional[int] = None
    index: Dict[LabeledPartition, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'states', tuple(self.states))
        object.__setattr__(self, 'entries', tuple(tuple(row) for row in self.entries))
        object.__setattr__(self, 'index', {state: i for i, state in enumerate(self.states)})

    @property
    def size(self) -> int:
        return len(self.states)

    def entry(self, pi: LabeledPartition, pi2: LabeledPartition) -> Entry:
        return self.entries[self.index[pi]][self.index[pi2]]

    def row(self, pi: LabeledPartition) -> Tuple[Entry, ...]:
        return self.entries[self.index[pi]]

    def row_sums(self) -> List[Entry]:
        if all(isinstance(v, Fraction) for row in self.entries for v in row):
            return [sum(row, Fraction(0)) for row in self.entries]
        return [math.fsum(float(v) for v in row) for row in self.entries]

    def as_array(self) -> np.ndarray:
        return np.array([[float(v) for v in row] for row in self.entries])


@dataclass(frozen=True, eq=False)
class GeneratorMatrix:
    """Continuous-time generator Q over an enumerated state list."""
    states: Tuple[LabeledPartition, ...]
    rates: Tuple[Tuple[float, ...], ...]
    index: Dict[LabeledPartition, int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'states', tuple(self.states))
        object.__setattr__(self, 'rates', tuple(tuple(float(v) for v in row) for row in self.rates))
        object.__setattr__(self, 'index', {state: i for i, state in enumerate(self.states)})

    @property
    def size(self) -> int:
        return len(self.states)

    def rate(self, pi: LabeledPartition, pi2: LabeledPartition) -> float:
        return self.rates[self.index[pi]][self.index[pi2]]

    def row_sums(self) -> List[float]:
        return [math.fsum(row) for row in self.rates]

    def as_array(self) -> np.ndarray:
        return np.array(self.rates, dtype=float)


@dataclass(frozen=True, eq=False)
class BlockCountingMatrix:
    """Transition matrix of the block counting chain on count vectors i (exact)."""
    states: Tuple[Tuple[int, ...], ...]
    entries: Tuple[Tuple[Entry, ...], ...]
    index: Dict[Tuple[int, ...], int] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, 'states', tuple(tuple(s) for s in self.states))
        object.__setattr__(self, 'entries', tuple(tuple(row) for row in self.entries))
        object.__setattr__(self, 'index', {state: i for i, state in enumerate(self.states)})

    def entry(self, i: Sequence[int], j: Sequence[int]) -> Entry:
        return self.entries[self.index[tuple(i)]][self.index[tuple(j)]]

    def row_sums(self) -> List[Entry]:
        return [sum(row, Fraction(0)) for row in self.entries]


@dataclass(frozen=True)
class AncestryTrajectory:
    """States A_0, A_1, ..., A_r of one simulated ancestral process."""
    initial: LabeledPartition
    states: Tuple[LabeledPartition, ...]
    seed: Optional[int] = None


@dataclass(frozen=True)
class CoalescentTrajectory:
    """Jump times and states of a continuous-time limiting process."""
    events: Tuple[Tuple[float, LabeledPartition], ...]
    seed: Optional[int] = None

    @property
    def final_state(self) -> LabeledPartition:
        return self.events[-1][1]


@dataclass(frozen=True, eq=False)
class StrongMutationExpansion:
    """P_N = A + c_N B + o(c_N) for the uniform model N_{k,l} = M.

    `residual` is the sup-norm of P_N - A - c_N B.
    """
    M: int
    P: TransitionMatrix
    A: TransitionMatrix
    B: Tuple[Tuple[Fraction, ...], ...]
    c_N: Fraction
    residual: Fraction
