"""Limiting rate tables, Xi-measure specifications and moment measures."""
from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence, Tuple

from app.errors import IncompleteTableError, InvalidArgumentError
from app.models.tensor import MergeTensor


@dataclass(frozen=True)
class XiAtom:
    """Point mass `mass` at (x, y); x keeps only its nonzero prefix."""
    mass: float
    x: Tuple[float, ...]
    y: Tuple[int, ...]

    def __post_init__(self):
        x = tuple(float(v) for v in self.x)
        while x and x[-1] == 0.0:
            x = x[:-1]
        object.__setattr__(self, 'x', x)
        object.__setattr__(self, 'y', tuple(int(v) for v in self.y))
        if self.mass <= 0:
            raise InvalidArgumentError(f"atom mass {self.mass} must be positive")
        if not x or x[0] <= 0:
            raise InvalidArgumentError("atom needs x_1 > 0")
        if any(v < 0 for v in x):
            raise InvalidArgumentError(f"atom coordinates must be nonnegative, got {x}")
        if any(a < b for a, b in zip(x, x[1:])):
            raise InvalidArgumentError(f"atom coordinates must be nonincreasing, got {x}")
        if sum(x) > 1.0 + 1e-12:
            raise InvalidArgumentError(f"atom coordinates sum to {sum(x)} > 1")
        if len(self.y) < len(x):
            raise InvalidArgumentError(
                f"atom labels cover {len(self.y)} coordinates, x has {len(x)} nonzero ones")

    @property
    def norm2(self) -> float:
        """(x, x) = sum_i x_i^2."""
        return sum(v * v for v in self.x)


@dataclass(frozen=True)
class XiSpec:
    """Kingman weights a_k plus a finite atomic measure Xi on (Delta minus 0) x E^N."""
    a: Tuple[float, ...]
    atoms: Tuple[XiAtom, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'a', tuple(float(v) for v in self.a))
        object.__setattr__(self, 'atoms', tuple(self.atoms))
        if not self.a:
            raise InvalidArgumentError("Kingman weight vector a must name every type")
        for k, weight in enumerate(self.a):
            if weight < 0:
                raise InvalidArgumentError(f"a_{k + 1} = {weight} must be nonnegative")
        for atom in self.atoms:
            for label in atom.y[:len(atom.x)]:
                if not 0 <= label < self.d:
                    raise InvalidArgumentError(f"atom label {label + 1} outside 1..{self.d}")

    @property
    def d(self) -> int:
        return len(self.a)


@dataclass(frozen=True)
class QMeasure:
    """Finitely supported measure Q_j on Delta_j: weighted points x = (x_{k,s})."""
    j: Tuple[int, ...]
    points: Tuple[Tuple[float, Tuple[Tuple[float, ...], ...]], ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'j', tuple(self.j))
        for weight, point in self.points:
            if weight < 0:
                raise InvalidArgumentError(f"negative weight {weight} in Q_j")
            if tuple(len(row) for row in point) != self.j:
                raise InvalidArgumentError(f"point {point} does not match j = {self.j}")


@dataclass(frozen=True, eq=False)
class RateTable:
    """Limiting rates phi_j(T).

    Keys are stored in canonical slot order, so lookups are invariant under
    per-type permutations of the child blocks. With `diagonal_support` every
    non-diagonal tensor has rate 0. A `rule` answers tensors absent from
    `rates`; without it such lookups raise IncompleteTableError.
    """
    d: int
    rates: Dict[MergeTensor, float] = field(default_factory=dict)
    diagonal_support: bool = True
    rule: Optional[Callable[[MergeTensor], float]] = None
    description: str = ""

    def __post_init__(self):
        canonical = {T.canonical(): float(v) for T, v in self.rates.items()}
        object.__setattr__(self, 'rates', canonical)

    def lookup(self, T: MergeTensor) -> Optional[float]:
        if T.d != self.d:
            raise InvalidArgumentError(f"tensor over {T.d} types looked up in a table over {self.d}")
        if self.diagonal_support and not T.is_diagonal:
            return 0.0
        key = T.canonical()
        if key in self.rates:
            return self.rates[key]
        if self.rule is not None:
            return float(self.rule(key))
        return None

    def rate(self, T: MergeTensor) -> float:
        value = self.lookup(T)
        if value is None:
            raise IncompleteTableError("rate table has no entry", [T.describe()])
        return value

    def with_rates(self, extra: Dict[MergeTensor, float], description: str = "") -> "RateTable":
        merged = dict(self.rates)
        merged.update({T.canonical(): float(v) for T, v in extra.items()})
        return RateTable(d=self.d, rates=merged, diagonal_support=self.diagonal_support,
                         rule=self.rule, description=description or self.description)

    def keys(self) -> Sequence[MergeTensor]:
        return list(self.rates)
